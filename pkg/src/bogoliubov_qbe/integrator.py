"""Positivity-preserving time stepping for df/dt = Q[f] on a radial grid.

The collision field is split as Q = gain - nu f with gain, nu >= 0.  The
first-order Patankar step treats the loss implicitly,

    f' = (f + dt gain) / (1 + dt nu),

and is nonnegative for every dt.  ``patankar2`` is the two-stage modified
Patankar Runge-Kutta variant (second order, still unconditionally positive):

    f1 = (f + dt gain0) / (1 + dt nu0)
    f' = (f + dt/2 (gain0 + gain1)) / (1 + dt/2 (nu0 f + nu1 f1) / f1).

``heun_check`` is the explicit second-order Heun method for convergence
studies; negative values are clamped to zero and counted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import collision, diagnostics
from .collision import KernelTable, RadialState
from .diagnostics import DiagnosticsReport
from .dispersion import DEFAULT_PARAMS, DispersionParams
from .errors import ConfigurationError, DomainError, NumericError

SCHEMES = ("patankar_imex", "patankar2", "heun_check")


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control for :func:`run`.

    ``snapshot_every`` is the time between stored snapshots; 0 stores every
    accepted step.  Diagnostics reports are produced for every stored snapshot.
    """

    t_end: float = 1.0
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 0.1
    eta: float = 0.1
    scheme: str = "patankar_imex"
    snapshot_every: float = 0.0
    f_scale: float = 1e-8

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ConfigurationError("need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.eta < 1:
            raise ConfigurationError("eta must lie in (0, 1)")
        if self.t_end < 0:
            raise ConfigurationError("t_end must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.snapshot_every < 0 or self.f_scale <= 0:
            raise ConfigurationError("snapshot_every must be >= 0 and f_scale > 0")


@dataclass
class Trajectory:
    states: List[RadialState] = field(default_factory=list)
    reports: List[DiagnosticsReport] = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    clamped: int = 0
    aborted: bool = False
    abort_reason: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> RadialState:
        return self.states[-1]


def _rates(state, table, params):
    g, nu, tail = collision.gain_and_loss(state, table, params)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(nu))):
        raise NumericError("non-finite gain or loss frequency")
    return g, nu, tail


def _patankar(f, g, nu, dt):
    return (f + dt * g) / (1.0 + dt * nu)


def step(state: RadialState, table: KernelTable, dt: float, params: DispersionParams = DEFAULT_PARAMS) -> RadialState:
    """One first-order Patankar step; the result is nonnegative for any dt > 0."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    g, nu, _ = _rates(state, table, params)
    return state.with_values(_patankar(state.values, g, nu, dt), state.t + dt)


def _advance(scheme, state, rates0, table, dt, params) -> Tuple[np.ndarray, int]:
    f = state.values
    g0, nu0, _ = rates0
    if scheme == "patankar_imex":
        return _patankar(f, g0, nu0, dt), 0
    if scheme == "patankar2":
        f1 = _patankar(f, g0, nu0, dt)
        g1, nu1, _ = _rates(state.with_values(f1, state.t + dt), table, params)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(f1 > 0, (nu0 * f + nu1 * f1) / np.where(f1 > 0, f1, 1.0), nu0 + nu1)
        return (f + 0.5 * dt * (g0 + g1)) / (1.0 + 0.5 * dt * ratio), 0
    # heun_check
    q0 = g0 - nu0 * f
    f1 = f + dt * q0
    clamped = int(np.sum(f1 < 0))
    f1 = np.maximum(f1, 0.0)
    g1, nu1, _ = _rates(state.with_values(f1, state.t + dt), table, params)
    out = f + 0.5 * dt * (q0 + g1 - nu1 * f1)
    clamped += int(np.sum(out < 0))
    return np.maximum(out, 0.0), clamped


def step_with(scheme: str, state: RadialState, table: KernelTable, dt: float,
              params: DispersionParams = DEFAULT_PARAMS) -> RadialState:
    """One step of any supported scheme (fixed dt, no step control)."""
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    if not dt > 0:
        raise DomainError("dt must be positive")
    values, _ = _advance(scheme, state, _rates(state, table, params), table, dt, params)
    if not np.all(np.isfinite(values)):
        raise NumericError("step produced non-finite values")
    return state.with_values(values, state.t + dt)


def run(initial: RadialState, config: IntegratorConfig, table: KernelTable,
        params: DispersionParams = DEFAULT_PARAMS) -> Trajectory:
    """Advance to ``config.t_end`` with adaptive dt.

    A step is accepted when max |f' - f| / (f + f_scale) <= eta; otherwise dt is
    halved.  After a step using less than half the budget dt grows by 1.2, up to
    dt_max.  If dt would fall below dt_min the run stops with ``aborted`` set and
    the last accepted state stored.
    """
    table.check_compatible(initial, params)
    traj = Trajectory()
    m1_0 = diagnostics.moment(initial, 1, params)
    state = initial
    rates = _rates(state, table, params)

    def record(s, r):
        traj.states.append(s)
        traj.reports.append(diagnostics.report(s, m1_0, params, nu_tail=r[2]))

    record(state, rates)
    last_snap = state.t
    dt = config.dt_init
    t_end = config.t_end
    while state.t < t_end and t_end - state.t > 1e-12 * max(1.0, t_end):
        h = min(dt, t_end - state.t)
        values, clamped = _advance(config.scheme, state, rates, table, h, params)
        if not np.all(np.isfinite(values)):
            change = np.inf
        else:
            change = float(np.max(np.abs(values - state.values) / (state.values + config.f_scale)))
        if change > config.eta:
            traj.rejected += 1
            dt = h * 0.5
            if dt < config.dt_min:
                traj.aborted = True
                traj.abort_reason = (
                    f"step control failed at t={state.t!r}: relative change {change:.3g} > eta={config.eta} "
                    f"with dt={h:.3g} at the dt_min floor"
                )
                break
            continue
        traj.accepted += 1
        traj.clamped += clamped
        t_new = t_end if t_end - (state.t + h) <= 1e-12 * max(1.0, t_end) else state.t + h
        state = state.with_values(values, t_new)
        rates = _rates(state, table, params)
        at_end = state.t >= t_end
        if at_end or config.snapshot_every == 0 or state.t - last_snap >= config.snapshot_every * (1 - 1e-12):
            record(state, rates)
            last_snap = state.t
        if change < 0.5 * config.eta and h == dt:
            dt = min(dt * 1.2, config.dt_max)
    if traj.states[-1] is not state:
        record(state, rates)
    return traj
