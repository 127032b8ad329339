"""Observables and theorem checks for radial states and trajectories."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import collision
from .collision import KernelTable, RadialGrid, RadialState
from .dispersion import DEFAULT_PARAMS, DispersionParams, energy
from .errors import ConfigurationError, DomainError

THETA2_CANDIDATES = np.geomspace(1e-2, 1e2, 32)
# relative slack keeping the fitted envelope strictly below every sample after rounding
_SAFETY = 1.0 - 8.0 * np.finfo(float).eps


@dataclass(frozen=True)
class EnvelopeParams:
    theta1: float
    theta2: float
    valid_radius: float


@dataclass(frozen=True)
class DiagnosticsReport:
    t: float
    mass: float
    m1: float
    m2: float
    m3: float
    entropy: float
    energy_drift: float
    momentum: float
    theta1: float
    theta2: float
    tail_loss: float

    FIELDS = ("t", "mass", "m1", "m2", "m3", "entropy", "energy_drift", "momentum", "theta1", "theta2", "tail_loss")

    def as_record(self) -> "OrderedDict[str, float]":
        """Fields in the documented order, for line-delimited JSON output."""
        return OrderedDict((k, getattr(self, k)) for k in self.FIELDS)


# -- profiles ----------------------------------------------------------------

def _taper(x):
    # C^1 step from 1 (x <= 0) to 0 (x >= 1)
    x = np.clip(x, 0.0, 1.0)
    return 1.0 - x * x * (3.0 - 2.0 * x)


def bump_profile(r, amplitude: float = 1.0, radius: float = 1.0, smoothing: float = 0.5):
    """amplitude on [0, radius], C^1 cubic taper to zero over ``smoothing``."""
    return amplitude * _taper((np.asarray(r, dtype=float) - radius) / smoothing)


def gaussian_bump(grid: RadialGrid, amplitude: float = 1.0, radius: float = 1.0, smoothing: float = 0.5) -> RadialState:
    """Initial state with f >= amplitude on the ball of the given radius (plateau-taper profile)."""
    if amplitude <= 0 or radius <= 0 or smoothing <= 0:
        raise DomainError("bump amplitude, radius and smoothing must be positive")
    return RadialState(grid, bump_profile(grid.nodes, amplitude, radius, smoothing), 0.0, origin=float(amplitude))


def shell_profile(r, amplitude: float = 1.0, inner: float = 0.5, outer: float = 1.5, smoothing: float = 0.25):
    """Zero on [0, inner], tapers up to ``amplitude`` and back down past ``outer``."""
    r = np.asarray(r, dtype=float)
    rise = 1.0 - _taper((r - inner) / smoothing)
    return amplitude * rise * _taper((r - outer) / smoothing)


def shell_state(grid: RadialGrid, amplitude: float = 1.0, inner: float = 0.5, outer: float = 1.5,
                smoothing: float = 0.25) -> RadialState:
    if not 0 < inner < outer:
        raise DomainError("need 0 < inner < outer")
    return RadialState(grid, shell_profile(grid.nodes, amplitude, inner, outer, smoothing), 0.0, origin=0.0)


def equilibrium_profile(r, c: float, params: DispersionParams = DEFAULT_PARAMS):
    x = c * energy(r, params)
    # 1 / (e^x - 1) written without overflow for large x
    return np.exp(-x) / -np.expm1(-x)


def equilibrium_state(c: float, grid: RadialGrid, params: DispersionParams = DEFAULT_PARAMS) -> RadialState:
    """f = 1 / (exp(c E) - 1); singular like 1/|p| at the origin."""
    if not c > 0:
        raise DomainError("equilibrium parameter c must be positive")
    return RadialState(grid, equilibrium_profile(grid.nodes, c, params), 0.0, origin=float("inf"))


# -- moments -----------------------------------------------------------------

def moment(state: RadialState, k: int, params: DispersionParams = DEFAULT_PARAMS) -> float:
    """M_k = int f E^k dp (k = 0 is the mass)."""
    if k not in (0, 1, 2, 3):
        raise DomainError("moment order must be 0, 1, 2 or 3")
    e = energy(state.grid.nodes, params) ** k if k else 1.0
    return 4.0 * np.pi * state.grid.integrate(state.values * e)


def mass(state: RadialState) -> float:
    return moment(state, 0)


def entropy_density(f):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError("entropy needs f >= 0")
    flogf = np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)), 0.0)
    return flogf - (1.0 + f) * np.log1p(f)


def entropy(state: RadialState) -> float:
    """H = int [f ln f - (1 + f) ln(1 + f)] dp <= 0."""
    return 4.0 * np.pi * state.grid.integrate(entropy_density(state.values))


def momentum(state: RadialState) -> float:
    """int f p dp, identically zero for radial states."""
    return 0.0


# -- envelope ------------------------------------------------------------------

def _log_theta1(log_f, r2, theta2, log_origin):
    vals = np.min(log_f[None, :] + theta2[:, None] * r2[None, :], axis=1)
    return np.minimum(vals, log_origin)


def _log_inputs(state: RadialState):
    f = state.values
    with np.errstate(divide="ignore"):
        log_f = np.log(f)
    origin = state.origin
    log_origin = np.inf if origin is None or origin == np.inf else (np.log(origin) if origin > 0 else -np.inf)
    return log_f, state.grid.nodes**2, log_origin


def theta1_at(state: RadialState, theta2: float) -> float:
    """Largest theta1 with f >= theta1 exp(-theta2 rho^2) at every node (and at the origin when known)."""
    log_f, r2, lo = _log_inputs(state)
    v = _log_theta1(log_f, r2, np.array([float(theta2)]), lo)[0]
    return float(np.exp(v) * _SAFETY) if np.isfinite(v) else 0.0


def envelope_fit(state: RadialState, theta2_grid: Optional[Sequence[float]] = None) -> EnvelopeParams:
    """Best Gaussian lower envelope over candidate rates, refined once around the best candidate."""
    cand = THETA2_CANDIDATES if theta2_grid is None else np.asarray(theta2_grid, dtype=float)
    if cand.size == 0 or np.any(cand <= 0) or np.any(np.diff(cand) <= 0):
        raise DomainError("theta2 candidates must be positive and ascending")
    log_f, r2, lo = _log_inputs(state)
    radius = state.grid.r_max
    if np.any(state.values == 0) or lo == -np.inf:
        return EnvelopeParams(0.0, float(cand[0]), radius)
    vals = _log_theta1(log_f, r2, cand, lo)
    j = int(np.argmax(vals))
    if cand.size > 1:
        a = cand[max(j - 1, 0)]
        b = cand[min(j + 1, cand.size - 1)]
        fine = np.geomspace(a, b, 33)
        fvals = _log_theta1(log_f, r2, fine, lo)
        k = int(np.argmax(fvals))
        if fvals[k] > vals[j]:
            return EnvelopeParams(float(np.exp(fvals[k]) * _SAFETY), float(fine[k]), radius)
    return EnvelopeParams(float(np.exp(vals[j]) * _SAFETY), float(cand[j]), radius)


@dataclass(frozen=True)
class LowerBoundVerdict:
    holds: bool
    theta1_inf: float
    theta2: float
    window_start: float
    n_states: int


def lower_bound_report(trajectory, T: float, theta2_grid: Optional[Sequence[float]] = None) -> LowerBoundVerdict:
    """Does one Gaussian envelope theta1 exp(-theta2 rho^2) hold for every stored state with t >= T?"""
    states = [s for s in trajectory.states if s.t >= T]
    if not states:
        raise ConfigurationError(f"no snapshots with t >= {T}")
    cand = THETA2_CANDIDATES if theta2_grid is None else np.asarray(theta2_grid, dtype=float)

    def inf_log(c):
        out = np.full(c.shape, np.inf)
        for s in states:
            log_f, r2, lo = _log_inputs(s)
            if np.any(s.values == 0):
                return np.full(c.shape, -np.inf)
            out = np.minimum(out, _log_theta1(log_f, r2, c, lo))
        return out

    vals = inf_log(cand)
    j = int(np.argmax(vals))
    best, th2 = vals[j], cand[j]
    if np.isfinite(best) and cand.size > 1:
        fine = np.geomspace(cand[max(j - 1, 0)], cand[min(j + 1, cand.size - 1)], 33)
        fv = inf_log(fine)
        k = int(np.argmax(fv))
        if fv[k] > best:
            best, th2 = fv[k], fine[k]
    theta1 = float(np.exp(best) * _SAFETY) if np.isfinite(best) else 0.0
    return LowerBoundVerdict(theta1 > 0, theta1, float(th2), float(T), len(states))


# -- reports -------------------------------------------------------------------

def tail_loss(state: RadialState, nu_tail: np.ndarray) -> float:
    """Rate at which grid particles are consumed by collisions whose product lies beyond r_max."""
    return 4.0 * np.pi * state.grid.integrate(nu_tail * state.values)


def report(
    state: RadialState,
    m1_initial: Optional[float] = None,
    params: DispersionParams = DEFAULT_PARAMS,
    nu_tail: Optional[np.ndarray] = None,
    envelope: bool = True,
) -> DiagnosticsReport:
    m1 = moment(state, 1, params)
    ref = m1 if m1_initial is None else m1_initial
    drift = (m1 - ref) / ref if ref != 0 else 0.0
    env = envelope_fit(state) if envelope else EnvelopeParams(float("nan"), float("nan"), state.grid.r_max)
    return DiagnosticsReport(
        t=float(state.t),
        mass=moment(state, 0, params),
        m1=m1,
        m2=moment(state, 2, params),
        m3=moment(state, 3, params),
        entropy=entropy(state),
        energy_drift=float(drift),
        momentum=momentum(state),
        theta1=env.theta1,
        theta2=env.theta2,
        tail_loss=tail_loss(state, nu_tail) if nu_tail is not None else float("nan"),
    )


@dataclass(frozen=True)
class ConservationReport:
    times: np.ndarray
    energy_drift: np.ndarray
    momentum: np.ndarray
    mass: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    sup_mass: float
    max_abs_drift: float
    mass_bound_exceeded: bool
    moments_unsaturated: bool


def _unsaturated(t, m, tau):
    # monotone growth that is still substantial over the last quarter of the window
    sel = t >= tau
    if sel.sum() < 4:
        return False
    tw, mw = t[sel], m[sel]
    if not np.all(np.diff(mw) > 0):
        return False
    late = tw >= tw[0] + 0.75 * (tw[-1] - tw[0])
    return bool((mw[-1] - mw[late][0]) > 1e-2 * abs(mw[-1]))


def conservation_report(trajectory, params: DispersionParams = DEFAULT_PARAMS,
                        mass_bound: Optional[float] = None, tau: float = 0.1) -> ConservationReport:
    states = trajectory.states
    if len(states) < 2:
        raise ConfigurationError("conservation report needs at least two snapshots")
    t = np.array([s.t for s in states])
    m1 = np.array([moment(s, 1, params) for s in states])
    m0 = np.array([moment(s, 0, params) for s in states])
    m2 = np.array([moment(s, 2, params) for s in states])
    m3 = np.array([moment(s, 3, params) for s in states])
    drift = (m1 - m1[0]) / m1[0] if m1[0] != 0 else np.zeros_like(m1)
    sup = float(m0.max())
    return ConservationReport(
        times=t,
        energy_drift=drift,
        momentum=np.zeros_like(t),
        mass=m0,
        m2=m2,
        m3=m3,
        sup_mass=sup,
        max_abs_drift=float(np.abs(drift).max()),
        mass_bound_exceeded=bool(mass_bound is not None and sup > mass_bound),
        moments_unsaturated=_unsaturated(t, m2, tau) or _unsaturated(t, m3, tau),
    )


# -- lemma monitors --------------------------------------------------------------

@dataclass(frozen=True)
class LossShape:
    ratio: float
    argmax_radius: float
    big_m: float


def loss_shape_monitor(state: RadialState, table: KernelTable, params: DispersionParams = DEFAULT_PARAMS) -> LossShape:
    """max over nodes of nu / ((1 + M)(rho + rho^5)) with M = int f(u)(u^2 + u^3) du."""
    rho = state.grid.nodes
    big_m = state.grid.integrate(state.values * (1.0 + rho))
    nu = collision.loss_frequency(state, table, params)
    ratios = nu / ((1.0 + big_m) * (rho + rho**5))
    i = int(np.argmax(ratios))
    return LossShape(float(ratios[i]), float(rho[i]), float(big_m))


def moment_production(state: RadialState, table: KernelTable, k: int, params: DispersionParams = DEFAULT_PARAMS,
                      product_bracket: bool = False) -> float:
    """d M_k / dt from the weak form with phi = E^k.

    With ``product_bracket`` (k = 2 only) the bracket E(rho)^2 - E(r)^2 - E(s)^2
    is replaced by the equal resonant-set value 2 E(r) E(s).
    """
    if k not in (0, 1, 2, 3):
        raise DomainError("moment order must be 0, 1, 2 or 3")
    if product_bracket:
        if k != 2:
            raise DomainError("the product form of the bracket exists only for k = 2")
        return collision.weak_form(
            state, table, None, params,
            bracket=lambda rho, r, s: 2.0 * energy(r, params) * energy(s, params),
        )
    return collision.weak_form(state, table, lambda r, f: energy(r, params) ** k, params)
