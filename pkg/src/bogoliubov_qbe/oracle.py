"""Brute-force collision operator with a mollified energy delta.

The momentum delta is used to eliminate one momentum; the energy delta is
replaced by exp(-x^2/eps^2) / (eps sqrt(pi)) and the remaining
three-dimensional integral is done by two-dimensional quadrature over the
magnitude of the free momentum and the distance to the pivot (equivalent to
the angle cosine, since |p - p1|^2 = rho^2 + r^2 - 2 rho r mu).  The three
channels of the collision integral are evaluated separately, each in its own
coordinates, and nothing from the reduced one-dimensional form is reused.

Only the energy-window where the Gaussian exceeds exp(-36) is sampled; the
window shrinks with eps, so a fixed number of inner nodes resolves every eps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from .collision import reduced_collision_at
from .dispersion import DEFAULT_PARAMS, DispersionParams, energy, energy_inverse
from .errors import ConfigurationError, DomainError

_WINDOW = 6.0


@dataclass(frozen=True)
class MollifierConfig:
    """``n_r``: Gauss nodes per radial panel; ``n_mu``: Gauss nodes across the energy window."""

    epsilon: float
    n_r: int = 64
    n_mu: int = 96
    r_max: float = 8.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if self.n_r < 64 or self.n_mu < 64:
            raise ConfigurationError("oracle resolutions must be at least 64")
        if not self.r_max > 0:
            raise ConfigurationError("r_max must be positive")


def _delta(x, eps):
    return np.exp(-(x / eps) ** 2) / (eps * np.sqrt(np.pi))


def _gauss(n):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _panels(lo, hi, breaks, n_uniform=8):
    """Sorted panel edges in [lo, hi] including the given breakpoints and a uniform base."""
    pts = set(np.linspace(lo, hi, n_uniform + 1).tolist())
    pts.update(b for b in breaks if lo < b < hi)
    return np.array(sorted(pts))


def _outer_nodes(edges, n):
    t, w = _gauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * t).ravel(), ((b - a) * w).ravel()


class _Profile:
    def __init__(self, f, r_max):
        self.f = f
        self.r_max = r_max

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        inside = z <= self.r_max
        out = np.zeros_like(z)
        if inside.any():
            out[inside] = self.f(z[inside])
        return out


def _inner(outer, center_energy, lo, hi, cfg, params):
    """Gauss nodes in the partner magnitude over {|E(x) - center| < window} intersected with [lo, hi]."""
    eps = cfg.epsilon
    e_lo = np.maximum(center_energy - _WINDOW * eps, 0.0)
    e_hi = np.maximum(center_energy + _WINDOW * eps, 0.0)
    a = np.maximum(energy_inverse(e_lo, params), lo)
    b = np.minimum(energy_inverse(e_hi, params), hi)
    b = np.maximum(a, b)
    t, w = _gauss(cfg.n_mu)
    x = a[:, None] + (b - a)[:, None] * t[None, :]
    wx = (b - a)[:, None] * w[None, :]
    gaps = np.diff(energy(x, params), axis=1)
    if gaps.size and gaps.max() * 3.0 > eps:
        raise ConfigurationError(
            f"mollifier eps={eps:g} is below 3 energy spacings of the inner quadrature; raise n_mu"
        )
    return x, wx


def _channel_decay(fp, rho, cfg, params):
    # p1 free with r = |p1|, s = |p - p1|; dp1 = 2 pi r s / rho dr ds
    eps = cfg.epsilon
    width = 10.0 * eps / np.sqrt(params.kappa1)
    top = min(cfg.r_max, rho + width)
    edges = _panels(0.0, top, [width, rho - width, rho])
    r, wr = _outer_nodes(edges, cfg.n_r)
    e_rho = energy(rho, params)
    s, ws = _inner(r, e_rho - energy(r, params), np.abs(rho - r), rho + r, cfg, params)
    rr = r[:, None]
    f_rho = float(fp(np.array([rho]))[0])
    fr = fp(r)[:, None]
    fs = fp(s)
    bracket = fr * fs - f_rho * (1.0 + fr + fs)
    kern = params.kappa0 * rho * rr * s * _delta(e_rho - energy(rr, params) - energy(s, params), eps)
    vals = 2.0 * np.pi * rr * s / rho * kern * bracket
    return float(np.dot(wr, (ws * vals).sum(axis=1)))


def _channel_absorb_small(fp, rho, cfg, params):
    # second channel: p2 free with r = |p2|, u = |p + p2|; p1 = p + p2 is the large momentum
    eps = cfg.epsilon
    width = 10.0 * eps / np.sqrt(params.kappa1)
    edges = _panels(0.0, cfg.r_max, [width, rho])
    r, wr = _outer_nodes(edges, cfg.n_r)
    e_rho = energy(rho, params)
    u, wu = _inner(r, e_rho + energy(r, params), np.abs(rho - r), rho + r, cfg, params)
    rr = r[:, None]
    f_rho = float(fp(np.array([rho]))[0])
    fr = fp(r)[:, None]
    fu = fp(u)
    # -[f f_r (1 + f_u) - f_u (1 + f)(1 + f_r)]
    bracket = fu * (1.0 + f_rho) * (1.0 + fr) - f_rho * fr * (1.0 + fu)
    kern = params.kappa0 * u * rho * rr * _delta(energy(u, params) - e_rho - energy(rr, params), eps)
    vals = 2.0 * np.pi * rr * u / rho * kern * bracket
    return float(np.dot(wr, (wu * vals).sum(axis=1)))


def _channel_absorb_large(fp, rho, cfg, params):
    # third channel: p2 = p + p1 is integrated directly with u = |p2|, t = |p2 - p| = |p1|
    eps = cfg.epsilon
    width = 10.0 * eps / np.sqrt(params.kappa1)
    e_rho = energy(rho, params)
    u_top = energy_inverse(e_rho + energy(cfg.r_max, params) + _WINDOW * eps, params)
    lo = max(0.0, rho - width)
    edges = _panels(lo, u_top, [rho, rho + width, cfg.r_max])
    u, wu = _outer_nodes(edges, cfg.n_r)
    t, wt = _inner(u, energy(u, params) - e_rho, np.abs(u - rho), np.minimum(u + rho, cfg.r_max), cfg, params)
    uu = u[:, None]
    f_rho = float(fp(np.array([rho]))[0])
    fu = fp(u)[:, None]
    ft = fp(t)
    bracket = fu * (1.0 + f_rho) * (1.0 + ft) - f_rho * ft * (1.0 + fu)
    kern = params.kappa0 * uu * rho * t * _delta(energy(uu, params) - e_rho - energy(t, params), eps)
    vals = 2.0 * np.pi * uu * t / rho * kern * bracket
    return float(np.dot(wu, (wt * vals).sum(axis=1)))


def mollified_channels(f: Callable, rho: float, config: MollifierConfig, params: DispersionParams = DEFAULT_PARAMS):
    """The three channel integrals (decay, absorption over the small partner, over the large partner)."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    fp = _Profile(f, config.r_max)
    return (
        _channel_decay(fp, rho, config, params),
        _channel_absorb_small(fp, rho, config, params),
        _channel_absorb_large(fp, rho, config, params),
    )


def mollified_collision(f: Callable, rho: float, config: MollifierConfig, params: DispersionParams = DEFAULT_PARAMS) -> float:
    """Approximate Q[f](rho) with the energy delta replaced by a Gaussian of width eps.

    ``f`` is any callable radial profile (a RadialState works); it is taken as
    zero beyond ``config.r_max``.
    """
    return float(sum(mollified_channels(f, rho, config, params)))


def default_eps(rho: float, params: DispersionParams = DEFAULT_PARAMS, n: int = 8, base: float = 0.04) -> List[float]:
    """Halving sequence base * min(1, E(rho)) * 2^-k, k < n.

    The mollifier error expands in eps / E(rho), so at small rho the widths are
    scaled down to stay in the asymptotic regime.
    """
    top = base * min(1.0, float(energy(rho, params)))
    return [top * 0.5**k for k in range(n)]


@dataclass(frozen=True)
class EpsilonRow:
    epsilon: float
    value: float
    error: float
    noise: float


@dataclass(frozen=True)
class EpsilonStudy:
    rows: List[EpsilonRow]
    reference: float
    extrapolated: float
    extrapolated_error: float
    order: float
    monotone: bool
    scale: float


def epsilon_study(
    f: Callable,
    rho: float,
    eps_list: Sequence[float],
    params: DispersionParams = DEFAULT_PARAMS,
    r_max: float = 8.0,
    n_r: int = 64,
    n_mu: int = 96,
) -> EpsilonStudy:
    """Mollified values for a decreasing eps sequence, compared with the reduced operator.

    The reference is the grid-free reduced quadrature; ``scale`` is gain + nu f
    there, used to normalize errors.  The limit eps -> 0 is extrapolated by a
    quadratic in eps^2 through all points.  The observed order comes from the
    last three errors against the reference.

    Each row carries a measured quadrature ``noise``: the change of the value
    under doubled oracle resolution plus the change of the reference under
    halved resolution.  ``monotone`` means the errors decrease strictly until
    they are within twice that noise.  It is flagged, not raised.
    """
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 3:
        raise ConfigurationError("epsilon_study needs at least 3 values")
    if np.any(np.diff(eps) >= 0):
        raise ConfigurationError("eps_list must be strictly decreasing")
    ref, g, nu = reduced_collision_at(f, rho, params, r_max=r_max, n=800)
    ref_coarse = reduced_collision_at(f, rho, params, r_max=r_max, n=400)[0]
    f_rho = float(np.asarray(f(np.array([rho])))[0])
    scale = float(abs(g) + abs(nu * f_rho))
    vals = np.array([mollified_collision(f, rho, MollifierConfig(e, n_r, n_mu, r_max), params) for e in eps])
    fine = np.array([mollified_collision(f, rho, MollifierConfig(e, 2 * n_r, 2 * n_mu, r_max), params) for e in eps])
    noise = np.abs(fine - vals) + abs(ref - ref_coarse) + 1e-14 * scale
    errs = np.abs(vals - ref)
    coeffs = np.polyfit(eps**2, vals, deg=min(2, eps.size - 1))
    extrap = float(coeffs[-1])
    if np.all(errs[-3:] > 0):
        order = float(np.polyfit(np.log(eps[-3:]), np.log(errs[-3:]), 1)[0])
    else:
        order = float("inf")
    at_floor = errs <= 2.0 * noise
    monotone = bool(np.all((np.diff(errs) < 0) | at_floor[1:]))
    rows = [EpsilonRow(float(e), float(v), float(er), float(nz)) for e, v, er, nz in zip(eps, vals, errs, noise)]
    return EpsilonStudy(rows, float(ref), extrap, float(abs(extrap - ref)), order, monotone, scale)
