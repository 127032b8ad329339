"""Collision operator for radially symmetric occupation numbers.

The two resonance deltas (momentum and energy) reduce each collision channel to
a single radial integral:

    Q1[f](rho) = 2 pi k0 int_0^rho     r^2 s^2 / E'(s) [f_r f_s - f_rho (1 + f_r + f_s)] dr,  s = s*(rho, r)
    Q2[f](rho) = 4 pi k0 int_0^R_max   r^2 u^2 / E'(u) [f_u (1 + f_rho + f_r) - f_rho f_r] dr,  u = u*(rho, r)

with E(s*) = E(rho) - E(r) (decay) and E(u*) = E(rho) + E(r) (absorption).
Off-grid values come from a monotone cubic interpolant of rho*f, clamped at
zero; f vanishes beyond R_max.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .dispersion import DEFAULT_PARAMS, DispersionParams, energy, energy_inverse, energy_slope
from .errors import ConfigurationError, DomainError, NumericError


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes 0 < rho_0 < ... < rho_{n-1} = r_max and weights for int_0^r_max g(rho) rho^2 drho.

    The weights are the trapezoid rule on [0, r_max] with the origin as an extra
    node whose contribution is zero (rho^2 f -> 0 there for every admissible f).
    """

    nodes: np.ndarray
    r_max: float
    spacing: str
    weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def step(self) -> float:
        """Uniform node spacing, or 0.0 for non-uniform grids."""
        return self.r_max / self.n if self.spacing == "uniform" else 0.0

    @classmethod
    def uniform(cls, n: int, r_max: float) -> "RadialGrid":
        _check_size(n, r_max)
        nodes = r_max * np.arange(1, n + 1) / n
        return cls(nodes, float(r_max), "uniform", _trapezoid_weights(nodes))

    @classmethod
    def log(cls, n: int, r_max: float, r_min: Optional[float] = None) -> "RadialGrid":
        """Geometric nodes from r_min (default r_max / n^2) to r_max."""
        _check_size(n, r_max)
        r_min = r_max / n**2 if r_min is None else float(r_min)
        if not 0 < r_min < r_max:
            raise ConfigurationError("log grid needs 0 < r_min < r_max")
        nodes = np.geomspace(r_min, r_max, n)
        nodes[-1] = r_max
        return cls(nodes, float(r_max), "log", _trapezoid_weights(nodes))

    @classmethod
    def build(cls, n: int, r_max: float, spacing: str = "uniform") -> "RadialGrid":
        if spacing == "uniform":
            return cls.uniform(n, r_max)
        if spacing == "log":
            return cls.log(n, r_max)
        raise ConfigurationError(f"unknown grid spacing {spacing!r}")

    def integrate(self, values) -> float:
        """int_0^r_max values(rho) rho^2 drho."""
        return float(np.dot(self.weights, values))

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (
            self.spacing == other.spacing and self.n == other.n and np.array_equal(self.nodes, other.nodes)
        )


def _check_size(n, r_max):
    if n < 3:
        raise ConfigurationError("a radial grid needs at least 3 nodes")
    if not (np.isfinite(r_max) and r_max > 0):
        raise ConfigurationError("r_max must be positive")


def _trapezoid_weights(nodes):
    x = np.concatenate([[0.0], nodes])
    h = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w[1:] * nodes**2


@dataclass(frozen=True, eq=False)
class RadialState:
    """Occupation numbers f_i = f(t, rho_i) on a grid.

    ``origin`` records f(t, 0) when it is known: the collision integrals vanish
    at p = 0, so that value never changes in time.  ``inf`` marks the 1/|p|
    singularity of equilibria, ``None`` means unknown.
    """

    grid: RadialGrid
    values: np.ndarray
    t: float = 0.0
    origin: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ConfigurationError("state and grid sizes differ")
        if not np.all(np.isfinite(v)):
            raise NumericError("state has non-finite values")
        if np.any(v < 0):
            raise DomainError("occupation numbers must be nonnegative")
        if self.t < 0:
            raise DomainError("time must be nonnegative")
        object.__setattr__(self, "values", v)

    def with_values(self, values, t: float) -> "RadialState":
        return RadialState(self.grid, values, t, self.origin)

    def interpolant(self):
        """Node set, g = rho f samples and monotone slopes for the compiled evaluator."""
        return _interpolant(self.grid, self.values)

    def __call__(self, r):
        """Interpolated occupation at arbitrary radii."""
        x, g, m = self.interpolant()
        pts = np.atleast_1d(np.asarray(r, dtype=float))
        out = _kernels.occupation_many(x, g, m, pts.ravel(), self.grid.step).reshape(pts.shape)
        return out if np.ndim(r) else float(out[0])


def _interpolant(grid, f):
    rho = grid.nodes
    g = rho * f
    # linear extrapolation of rho*f to the origin, clamped at zero
    g0 = max(0.0, g[0] - rho[0] * (g[1] - g[0]) / (rho[1] - rho[0]))
    x = np.concatenate([[0.0], rho])
    g = np.concatenate([[g0], g])
    return x, g, _kernels.pchip_slopes(x, g)


def resonance_partner_decay(rho, r, params: DispersionParams = DEFAULT_PARAMS):
    """s* with E(s*) = E(rho) - E(r), for 0 <= r <= rho."""
    rho_a = np.asarray(rho, dtype=float)
    r_a = np.asarray(r, dtype=float)
    if np.any(r_a > rho_a):
        raise DomainError("decay partner needs r <= rho")
    diff = np.maximum(energy(rho_a, params) - energy(r_a, params), 0.0)
    s = np.where(r_a == rho_a, 0.0, np.where(r_a == 0, rho_a, energy_inverse(diff, params)))
    return s.item() if s.ndim == 0 else s


def resonance_partner_absorb(rho, r, params: DispersionParams = DEFAULT_PARAMS):
    """u* with E(u*) = E(rho) + E(r)."""
    rho_a = np.asarray(rho, dtype=float)
    r_a = np.asarray(r, dtype=float)
    u = np.where(r_a == 0, rho_a, energy_inverse(energy(rho_a, params) + energy(r_a, params), params))
    u = np.where(rho_a == 0, r_a, u)
    return u.item() if u.ndim == 0 else u


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Resonance partners and reduced weights r^2 x^2 / E'(x) for every node.

    Decay row i uses midpoint abscissae rho_i (q + 1/2) / n_quad on [0, rho_i];
    absorption uses the shared midpoint abscissae on [0, r_max].  Row i of the
    absorption gain is truncated at ``absorb_cut[i]``: from that column on,
    u* > r_max and f(u*) = 0.
    """

    grid: RadialGrid
    params: DispersionParams
    n_quad: int
    decay_abscissa: np.ndarray = field(repr=False)
    decay_partner: np.ndarray = field(repr=False)
    decay_weight: np.ndarray = field(repr=False)
    absorb_abscissa: np.ndarray = field(repr=False)
    absorb_partner: np.ndarray = field(repr=False)
    absorb_weight: np.ndarray = field(repr=False)
    absorb_cut: np.ndarray = field(repr=False)

    def check_compatible(self, state: RadialState, params: DispersionParams):
        if not self.grid.same_as(state.grid):
            raise ConfigurationError("kernel table was built on a different grid")
        if params != self.params:
            raise ConfigurationError("kernel table was built with different dispersion parameters")


def build_kernel_table(grid: RadialGrid, params: DispersionParams = DEFAULT_PARAMS, n_quad: Optional[int] = None) -> KernelTable:
    n_quad = 2 * grid.n if n_quad is None else int(n_quad)
    if n_quad < grid.n:
        raise ConfigurationError(f"n_quad={n_quad} is below the grid size {grid.n}")
    rho = grid.nodes
    frac = (np.arange(n_quad) + 0.5) / n_quad
    r1 = rho[:, None] * frac[None, :]
    s = resonance_partner_decay(np.broadcast_to(rho[:, None], r1.shape), r1, params)
    a_w = r1**2 * s**2 / energy_slope(s, params)

    r2 = grid.r_max * frac
    u = resonance_partner_absorb(rho[:, None], r2[None, :], params)
    b_w = r2[None, :] ** 2 * u**2 / energy_slope(u, params)
    cut = np.sum(u <= grid.r_max, axis=1).astype(np.int64)

    slack = 1e-12
    rr = rho[:, None]
    if not (np.all(s >= np.abs(rr - r1) * (1 - slack)) and np.all(s <= (rr + r1) * (1 + slack))):
        raise NumericError("decay partners violate the triangle inequality")
    if not (np.all(u >= np.maximum(rr, r2) * (1 - slack)) and np.all(u <= (rr + r2) * (1 + slack))):
        raise NumericError("absorption partners violate the triangle inequality")
    for a in (s, a_w, u, b_w):
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite entries in kernel table")
    return KernelTable(grid, params, n_quad, frac, s, a_w, r2, u, b_w, cut)


def _evaluate(state: RadialState, table: KernelTable, params: DispersionParams):
    table.check_compatible(state, params)
    x, g, m = state.interpolant()
    grid = state.grid
    out = _kernels.gain_loss(
        grid.nodes, state.values, x, g, m, grid.step,
        table.decay_partner, table.decay_weight,
        table.absorb_abscissa, table.absorb_partner, table.absorb_weight, table.absorb_cut,
        params.kappa0, grid.r_max,
    )
    for a in out:
        if not np.all(np.isfinite(a)):
            raise NumericError("collision sums are not finite")
    return out


def gain_and_loss(state: RadialState, table: KernelTable, params: DispersionParams = DEFAULT_PARAMS):
    """(gain, nu, nu_tail): Q = gain - nu f; nu_tail is the part of nu from partners u* > r_max."""
    return _evaluate(state, table, params)


def gain(state: RadialState, table: KernelTable, params: DispersionParams = DEFAULT_PARAMS) -> np.ndarray:
    return _evaluate(state, table, params)[0]


def loss_frequency(state: RadialState, table: KernelTable, params: DispersionParams = DEFAULT_PARAMS) -> np.ndarray:
    return _evaluate(state, table, params)[1]


def apply(state: RadialState, table: KernelTable, params: DispersionParams = DEFAULT_PARAMS) -> np.ndarray:
    """Q[f] at every grid node."""
    g, nu, _ = _evaluate(state, table, params)
    return g - nu * state.values


def weak_form(
    state: RadialState,
    table: KernelTable,
    phi: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]],
    params: DispersionParams = DEFAULT_PARAMS,
    with_scale: bool = False,
    bracket: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None,
):
    """Discrete weak form int Q[f] phi dp in its symmetrized decay-only form.

        8 pi^2 k0 int rho^2 drho int_0^rho r^2 s*^2/E'(s*) R(rho, r, s*) [phi(rho) - phi(r) - phi(s*)] dr

    with R = f_r f_s - f_rho (1 + f_r + f_s).  ``phi(radius, occupation)`` gets
    the interpolated occupation at each radius, so entropy-type test functions
    see exactly the values entering R.  ``bracket(rho, r, s)``, when given,
    replaces the phi differences.  With ``with_scale`` the sum of absolute
    contributions is returned as well, for relative comparisons.
    """
    if (phi is None) == (bracket is None):
        raise ValueError("give exactly one of phi and bracket")
    table.check_compatible(state, params)
    grid = state.grid
    x, g, m = state.interpolant()
    h = grid.step
    rho = grid.nodes
    f = state.values
    phi_rho = np.asarray(phi(rho, f), dtype=float) if phi is not None else None
    total = 0.0
    scale = 0.0
    chunk = max(1, 2**20 // table.n_quad)
    for lo in range(0, grid.n, chunk):
        sl = slice(lo, lo + chunk)
        r = rho[sl, None] * table.decay_abscissa[None, :]
        s = table.decay_partner[sl]
        fr = _kernels.occupation_many(x, g, m, r.ravel(), h).reshape(r.shape)
        fs = _kernels.occupation_many(x, g, m, s.ravel(), h).reshape(s.shape)
        fi = f[sl, None]
        rate = fr * fs - fi * (1.0 + fr + fs)
        if bracket is None:
            p_r = np.asarray(phi(r, fr), dtype=float)
            p_s = np.asarray(phi(s, fs), dtype=float)
            br = phi_rho[sl, None] - p_r - p_s
            mag = np.abs(phi_rho[sl, None]) + np.abs(p_r) + np.abs(p_s)
        else:
            br = np.asarray(bracket(rho[sl, None], r, s), dtype=float)
            mag = np.abs(br)
        row_w = grid.weights[sl] * rho[sl] / table.n_quad
        contrib = table.decay_weight[sl] * rate * br
        total += float(np.dot(row_w, contrib.sum(axis=1)))
        if with_scale:
            scale += float(np.dot(row_w, (table.decay_weight[sl] * np.abs(rate) * mag).sum(axis=1)))
    c = 8.0 * np.pi**2 * params.kappa0
    if not np.isfinite(total):
        raise NumericError("weak form is not finite")
    return (c * total, c * scale) if with_scale else c * total


def reduced_collision_at(
    f: Callable[[np.ndarray], np.ndarray],
    rho: float,
    params: DispersionParams = DEFAULT_PARAMS,
    r_max: float = 8.0,
    n: int = 200,
):
    """Q[f](rho) for a callable profile by Gauss-Legendre quadrature of the reduced integrals.

    Returns (Q, gain, nu).  f is taken as zero beyond ``r_max``.  Used as the
    grid-free reference in the mollifier convergence study.
    """
    if rho <= 0 or rho > r_max:
        raise DomainError("need 0 < rho <= r_max")
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w

    def prof(z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= r_max, f(np.minimum(z, r_max)), 0.0)

    f_rho = float(prof(rho))
    r = rho * t
    s = resonance_partner_decay(np.full_like(r, rho), r, params)
    a = rho * w * r**2 * s**2 / energy_slope(s, params)
    fr, fs = prof(r), prof(s)
    g1 = np.dot(a, fr * fs)
    l1 = np.dot(a, fr + fs + 1.0)

    # split the absorption integral where u* crosses r_max so the cutoff is a panel edge
    e_top = energy(r_max, params) - energy(rho, params)
    r_cut = min(r_max, energy_inverse(max(e_top, 0.0), params))
    g2 = 0.0
    l2 = 0.0
    for lo, hi in ((0.0, r_cut), (r_cut, r_max)):
        if hi <= lo:
            continue
        r2 = lo + (hi - lo) * t
        u = resonance_partner_absorb(rho, r2, params)
        b = (hi - lo) * w * r2**2 * u**2 / energy_slope(u, params)
        fr2 = prof(r2)
        g2 += np.dot(b, prof(u) * (f_rho + fr2 + 1.0))
        l2 += np.dot(b, fr2)
    k = np.pi * params.kappa0
    gain_v = 2 * k * g1 + 4 * k * g2
    nu_v = 2 * k * l1 + 4 * k * l2
    return gain_v - nu_v * f_rho, gain_v, nu_v


def decay_delta_integral(
    H: Callable[[np.ndarray, np.ndarray], np.ndarray],
    rho: float,
    params: DispersionParams = DEFAULT_PARAMS,
    n: int = 400,
) -> float:
    """int dw delta(E(p - w) + E(w) - E(p)) H(|w|, |p - w|) for |p| = rho, reduced to one dimension.

        = (2 pi / rho) int_0^rho r s* / E'(s*) H(r, s*) dr

    For H = r s this is the spontaneous decay loss nu[0](rho) / (k0 rho).
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    t, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * rho * (t + 1.0)
    s = resonance_partner_decay(np.full_like(r, rho), r, params)
    vals = r * s / energy_slope(s, params) * np.asarray(H(r, s), dtype=float)
    return float(2.0 * np.pi / rho * 0.5 * rho * np.dot(w, vals))
