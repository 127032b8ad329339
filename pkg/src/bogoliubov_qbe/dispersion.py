"""Bogoliubov dispersion law E(r) = sqrt(k1 r^2 + k2 r^4), its slope and inverse.

All maps accept scalars or numpy arrays and return the same shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class DispersionParams:
    """Physical constants of the model.

    ``kappa0`` scales the transition probability, ``kappa1`` and ``kappa2`` are the
    quadratic and quartic coefficients of E^2.  When built with
    :meth:`from_physical` the mass ``m``, coupling ``g`` and condensate density
    ``n_c`` are kept for reference.
    """

    kappa0: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    m: Optional[float] = None
    g: Optional[float] = None
    n_c: Optional[float] = None

    def __post_init__(self):
        for name in ("kappa0", "kappa1", "kappa2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")

    @classmethod
    def from_physical(cls, m: float, g: float, n_c: float, kappa0: float = 1.0) -> "DispersionParams":
        if m <= 0 or g <= 0 or n_c <= 0:
            raise DomainError("m, g and n_c must all be positive")
        return cls(kappa0=kappa0, kappa1=g * n_c / m, kappa2=1.0 / (4.0 * m * m), m=m, g=g, n_c=n_c)


DEFAULT_PARAMS = DispersionParams()


def _as_nonnegative(x, what):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{what} must be >= 0")
    return arr


def _out(arr):
    return arr.item() if arr.ndim == 0 else arr


def energy(r, params: DispersionParams = DEFAULT_PARAMS):
    r = _as_nonnegative(r, "momentum magnitude")
    # r * sqrt(k1 + k2 r^2) avoids overflow of r^4 for huge r
    return _out(r * np.sqrt(params.kappa1 + params.kappa2 * r * r))


def energy_inverse(e, params: DispersionParams = DEFAULT_PARAMS):
    """Momentum magnitude with the given energy.

    Uses r^2 = 2 e^2 / (k1 + sqrt(k1^2 + 4 k2 e^2)), the cancellation-free
    form of the quadratic root.
    """
    e = _as_nonnegative(e, "energy")
    k1, k2 = params.kappa1, params.kappa2
    r2 = 2.0 * e * e / (k1 + np.sqrt(k1 * k1 + 4.0 * k2 * e * e))
    return _out(np.sqrt(r2))


def energy_slope(r, params: DispersionParams = DEFAULT_PARAMS):
    """dE/dr = (k1 + 2 k2 r^2) / sqrt(k1 + k2 r^2)."""
    r = _as_nonnegative(r, "momentum magnitude")
    k1, k2 = params.kappa1, params.kappa2
    return _out((k1 + 2.0 * k2 * r * r) / np.sqrt(k1 + k2 * r * r))


def slope_over_radius(r, params: DispersionParams = DEFAULT_PARAMS):
    """(dE/dr) / r, strictly decreasing on r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("slope_over_radius needs r > 0")
    k1, k2 = params.kappa1, params.kappa2
    return _out((k1 + 2.0 * k2 * r * r) / (r * np.sqrt(k1 + k2 * r * r)))
