"""Resonance surfaces of the three-wave interaction.

For a pivot momentum p with |p| = rho, the decay surface is

    S_p   = {w : E(p - w) + E(w) = E(p)},
    S'_p  = {w : E(p + w) = E(w) + E(p)},
    S''_p = p + S'_p.

All three are surfaces of revolution about p.  A ring is parametrized by the
axial fraction alpha and the radius q of the circle w = alpha p + q e_theta,
so |w|^2 = alpha^2 rho^2 + q^2.  Radii are found by bisection on q^2, slopes by
implicit differentiation.  This module is a geometric reference; the solver
uses the one-dimensional reductions in ``collision``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dispersion import DEFAULT_PARAMS, DispersionParams, energy, energy_slope
from .errors import DomainError, NumericError


class SurfaceKind(enum.Enum):
    DECAY = "decay"
    ABSORB = "absorb"
    ABSORB_SHIFTED = "absorb_shifted"

    @classmethod
    def parse(cls, text: str) -> "SurfaceKind":
        key = text.strip().lower().replace("-", "_")
        aliases = {"decay": cls.DECAY, "absorb": cls.ABSORB, "absorbshifted": cls.ABSORB_SHIFTED,
                   "absorb_shifted": cls.ABSORB_SHIFTED}
        if key not in aliases:
            raise ValueError(f"unknown surface kind {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class RingSample:
    alpha: float
    ring_radius: float
    ring_radius_sq_slope: float
    measure_density: float
    grad_norm: float


_MAX_BISECT = 2200


def _check_rho(rho):
    if not (np.isfinite(rho) and rho > 0):
        raise DomainError(f"pivot magnitude must be positive, got {rho!r}")


def alpha_max(rho: float, params: DispersionParams = DEFAULT_PARAMS) -> float:
    """Supremum of the axial fraction on S'_p: the ring radius diverges as alpha -> alpha_p."""
    _check_rho(rho)
    k1, k2 = params.kappa1, params.kappa2
    return 0.5 * k1 / (k2 * rho * rho + np.sqrt(k2) * np.sqrt(k1 * rho * rho + k2 * rho**4))


def _residual(kind, rho, alpha, q2, params):
    if kind is SurfaceKind.DECAY:
        a = np.sqrt((1.0 - alpha) ** 2 * rho * rho + q2)
        b = np.sqrt(alpha * alpha * rho * rho + q2)
        return energy(a, params) + energy(b, params) - energy(rho, params)
    c2 = (1.0 + alpha) ** 2 * rho * rho + q2
    b2 = alpha * alpha * rho * rho + q2
    # E(c) - E(b) without cancellation: (E(c)^2 - E(b)^2) / (E(c) + E(b)), c^2 - b^2 = (1 + 2 alpha) rho^2
    num = (1.0 + 2.0 * alpha) * rho * rho * (params.kappa1 + params.kappa2 * (c2 + b2))
    den = energy(np.sqrt(c2), params) + energy(np.sqrt(b2), params)
    return num / den - energy(rho, params)


def _alphas(kind, rho, alpha, params):
    _check_rho(rho)
    al = np.asarray(alpha, dtype=float)
    if np.any(np.isnan(al)) or np.any(al < 0):
        raise DomainError("alpha must be >= 0")
    if kind is SurfaceKind.DECAY:
        if np.any(al > 1):
            raise DomainError("decay rings need alpha in [0, 1]")
    elif np.any(al >= alpha_max(rho, params)):
        raise DomainError("absorption rings need alpha < alpha_max(rho)")
    return al


def _ring_q2(kind, rho, al, params):
    """Bisection for q^2 on arrays of alpha; G is increasing (decay) / decreasing (absorb) in q^2."""
    sign = 1.0 if kind is SurfaceKind.DECAY else -1.0
    lo = np.zeros_like(al)
    if kind is SurfaceKind.DECAY:
        hi = np.full_like(al, rho * rho)
    else:
        hi = np.full_like(al, rho * rho)
        for _ in range(200):
            grow = (sign * _residual(kind, rho, al, hi, params) < 0) & (al > 0)
            if not grow.any():
                break
            hi = np.where(grow, 4.0 * hi, hi)
        else:
            raise NumericError("could not bracket the absorption ring radius")
    poles = (al == 0) | ((al == 1) & (kind is SurfaceKind.DECAY))
    hi = np.where(poles, 0.0, hi)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        done = (hi - lo <= 1e-15 * hi) | (mid == lo) | (mid == hi)
        if done.all():
            break
        up = sign * _residual(kind, rho, al, mid, params) > 0
        hi = np.where(~done & up, mid, hi)
        lo = np.where(~done & ~up, mid, lo)
    return 0.5 * (lo + hi)


def _out(a):
    return a.item() if a.ndim == 0 else a


def ring_radius(kind: SurfaceKind, rho: float, alpha, params: DispersionParams = DEFAULT_PARAMS):
    """|q_alpha|: radius of the ring at axial fraction alpha (geometry of S''_p equals S'_p)."""
    kind = SurfaceKind(kind)
    al = _alphas(kind, rho, alpha, params)
    return _out(np.sqrt(_ring_q2(kind, rho, al, params)))


def _ratios(kind, rho, al, q2, params):
    # E'(x)/x at the two off-pivot legs of the resonant triangle
    b = np.sqrt(al * al * rho * rho + q2)
    if kind is SurfaceKind.DECAY:
        a = np.sqrt((1.0 - al) ** 2 * rho * rho + q2)
    else:
        a = np.sqrt((1.0 + al) ** 2 * rho * rho + q2)
    if np.any(b == 0) or np.any(a == 0):
        raise DomainError("ring collapses to a pole of the surface")
    return energy_slope(a, params) / a, energy_slope(b, params) / b


def _slope(kind, rho, al, q2, params):
    A, B = _ratios(kind, rho, al, q2, params)
    r2 = rho * rho
    if kind is SurfaceKind.DECAY:
        return 2.0 * r2 * ((1.0 - al) * A - al * B) / (A + B)
    return 2.0 * r2 * ((1.0 + al) * A - al * B) / (B - A)


def ring_radius_sq_slope(kind: SurfaceKind, rho: float, alpha, params: DispersionParams = DEFAULT_PARAMS):
    """d(|q_alpha|^2)/d alpha from the implicit relation G(alpha p + q_alpha) = 0."""
    kind = SurfaceKind(kind)
    al = _alphas(kind, rho, alpha, params)
    return _out(_slope(kind, rho, al, _ring_q2(kind, rho, al, params), params))


def _density(kind, rho, al, q2, params):
    poles = (q2 == 0) & ((al == 0) | ((al == 1) & (kind is SurfaceKind.DECAY)))
    safe = np.where(poles, 0.5 * alpha_max(rho, params) if kind is not SurfaceKind.DECAY else 0.5, al)
    q2s = np.where(poles, 1.0, q2)
    d = _slope(kind, rho, safe, q2s, params)
    dens = np.sqrt(rho * rho * q2 + 0.25 * d * d)
    # both terms vanish as the ring shrinks onto a pole
    return np.where(poles, 0.0, dens)


def measure_density(kind: SurfaceKind, rho: float, alpha, params: DispersionParams = DEFAULT_PARAMS):
    """Surface measure per d alpha d theta: sqrt(rho^2 q^2 + (d q^2 / d alpha)^2 / 4); zero at poles."""
    kind = SurfaceKind(kind)
    al = _alphas(kind, rho, alpha, params)
    return _out(_density(kind, rho, al, _ring_q2(kind, rho, al, params), params))


def _grad(kind, rho, al, q2, params):
    A, B = _ratios(kind, rho, al, q2, params)
    q = np.sqrt(q2)
    if kind is SurfaceKind.DECAY:
        axial = rho * (al * B - (1.0 - al) * A)
        radial = q * (A + B)
    else:
        axial = rho * ((1.0 + al) * A - al * B)
        radial = q * (A - B)
    return axial, radial


def grad_components(kind: SurfaceKind, rho: float, alpha, params: DispersionParams = DEFAULT_PARAMS):
    """(component along p, component along the ring's radial direction) of the gradient of G."""
    kind = SurfaceKind(kind)
    al = _alphas(kind, rho, alpha, params)
    ax, rad = _grad(kind, rho, al, _ring_q2(kind, rho, al, params), params)
    return _out(ax), _out(rad)


def grad_norm(kind: SurfaceKind, rho: float, alpha, params: DispersionParams = DEFAULT_PARAMS):
    ax, rad = grad_components(kind, rho, alpha, params)
    return _out(np.hypot(np.asarray(ax), np.asarray(rad)))


def ring_sample(kind: SurfaceKind, rho: float, alpha: float, params: DispersionParams = DEFAULT_PARAMS) -> RingSample:
    kind = SurfaceKind(kind)
    al = _alphas(kind, rho, np.array([alpha], dtype=float), params)
    q2 = _ring_q2(kind, rho, al, params)
    ax, rad = _grad(kind, rho, al, q2, params)
    return RingSample(
        alpha=float(alpha),
        ring_radius=float(np.sqrt(q2[0])),
        ring_radius_sq_slope=float(_slope(kind, rho, al, q2, params)[0]),
        measure_density=float(_density(kind, rho, al, q2, params)[0]),
        grad_norm=float(np.hypot(ax[0], rad[0])),
    )


def _midpoints(kind, rho, n_alpha, params, reach):
    if n_alpha < 16:
        raise DomainError("n_alpha must be at least 16")
    if kind is SurfaceKind.DECAY:
        top = 1.0
    else:
        top = alpha_max(rho, params)
        if reach is not None:
            # |w|^2 grows strictly with alpha on S'_p, so the support of F ends at one alpha
            lo, hi = 0.0, top
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                w2 = mid * mid * rho * rho + _ring_q2(kind, rho, np.array([mid]), params)[0]
                if w2 > reach * reach:
                    hi = mid
                else:
                    lo = mid
            top = hi
    return top * (np.arange(n_alpha) + 0.5) / n_alpha, top / n_alpha


def surface_area(rho: float, params: DispersionParams = DEFAULT_PARAMS, n_alpha: int = 512) -> float:
    """Area of S_p by the composite midpoint rule in alpha."""
    return surface_integral(SurfaceKind.DECAY, rho, lambda u: np.ones_like(u), "euclidean", params, n_alpha)


def surface_integral(
    kind: SurfaceKind,
    rho: float,
    F: Callable[[np.ndarray], np.ndarray],
    weight: str = "euclidean",
    params: DispersionParams = DEFAULT_PARAMS,
    n_alpha: int = 512,
    reach: Optional[float] = None,
) -> float:
    """2 pi int F(|w|) dsigma over a resonance surface, optionally divided by |grad G| ("coarea").

    For the shifted absorption surface F is evaluated at |p + w|.  ``reach``
    declares that F vanishes beyond that radius, which lets absorption
    integrals stop before the alpha_max pole.
    """
    kind = SurfaceKind(kind)
    _check_rho(rho)
    if weight not in ("euclidean", "coarea"):
        raise ValueError(f"weight must be 'euclidean' or 'coarea', got {weight!r}")
    geom = SurfaceKind.DECAY if kind is SurfaceKind.DECAY else SurfaceKind.ABSORB
    al, dal = _midpoints(geom, rho, n_alpha, params, reach)
    q2 = _ring_q2(geom, rho, al, params)
    dens = _density(geom, rho, al, q2, params)
    if kind is SurfaceKind.ABSORB_SHIFTED:
        radius = np.sqrt((1.0 + al) ** 2 * rho * rho + q2)
    else:
        radius = np.sqrt(al * al * rho * rho + q2)
    vals = np.asarray(F(radius), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand F returned non-finite values")
    integrand = vals * dens
    if weight == "coarea":
        ax, rad = _grad(geom, rho, al, q2, params)
        integrand = integrand / np.hypot(ax, rad)
    return float(2.0 * np.pi * dal * integrand.sum())
