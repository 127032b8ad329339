import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bogoliubov_qbe.collision import RadialState, apply
from bogoliubov_qbe.diagnostics import equilibrium_state, gaussian_bump, moment
from bogoliubov_qbe.errors import ConfigurationError, DomainError
from bogoliubov_qbe.integrator import IntegratorConfig, SCHEMES, run, step, step_with


def test_config_validation():
    with pytest.raises(ConfigurationError):
        IntegratorConfig(dt_init=1.0, dt_max=0.1)
    with pytest.raises(ConfigurationError):
        IntegratorConfig(eta=1.5)
    with pytest.raises(ConfigurationError):
        IntegratorConfig(scheme="euler")
    with pytest.raises(ConfigurationError):
        IntegratorConfig(t_end=-1.0)


def test_step_rejects_bad_dt(grid64, table64):
    with pytest.raises(DomainError):
        step(gaussian_bump(grid64), table64, 0.0)


@settings(max_examples=25, deadline=None)
@given(
    amp=st.lists(st.floats(0.0, 50.0), min_size=64, max_size=64),
    dt=st.floats(1e-4, 1e3),
    scheme=st.sampled_from(["patankar_imex", "patankar2"]),
)
def test_patankar_positivity(grid64, table64, amp, dt, scheme):
    s = RadialState(grid64, np.array(amp))
    out = step_with(scheme, s, table64, dt)
    assert np.all(out.values >= 0) and np.all(np.isfinite(out.values))
    assert out.t == pytest.approx(dt)


def test_zero_state_grows(grid64, table64):
    # vacuum is not a fixed point: spontaneous emission fills it
    z = RadialState(grid64, np.zeros(64))
    out = step(z, table64, 1e-3)
    np.testing.assert_array_equal(out.values, 0.0)
    np.testing.assert_array_equal(apply(z, table64), 0.0)


def _equilibrium_change(grid, old, new):
    d = np.abs(new - old)
    inner = grid.nodes <= grid.r_max - 1.0
    return d.max() / old.max(), np.max(d[inner] / old[inner])


def test_equilibrium_step_is_nearly_stationary(grid512, table512):
    s = equilibrium_state(1.0, grid512)
    out = step(s, table512, 1e-2)
    sup, inner = _equilibrium_change(grid512, s.values, out.values)
    assert sup <= 1e-3 and inner <= 1e-3


def test_equilibrium_run_is_nearly_stationary(grid512, table512):
    s = equilibrium_state(1.0, grid512)
    traj = run(s, IntegratorConfig(t_end=1.0, dt_max=0.1), table512)
    assert not traj.aborted
    sup, inner = _equilibrium_change(grid512, s.values, traj.final.values)
    assert sup <= 1e-3 and inner <= 1e-3


def _solve(grid, table, scheme, dt, t_end=0.2):
    s = gaussian_bump(grid)
    for _ in range(int(round(t_end / dt))):
        s = step_with(scheme, s, table, dt)
    return s.values


@pytest.mark.parametrize(
    "scheme,steps,min_order",
    [("patankar_imex", (32, 64, 128), 0.9), ("patankar2", (64, 128, 256), 1.8), ("heun_check", (64, 128, 256), 1.8)],
)
def test_convergence_order(grid64, table64, scheme, steps, min_order):
    ref = _solve(grid64, table64, "heun_check", 0.2 / 4096)
    errs = [np.max(np.abs(_solve(grid64, table64, scheme, 0.2 / k) - ref)) for k in steps]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= min_order), orders


def test_t_end_zero(grid64, table64):
    s = gaussian_bump(grid64)
    traj = run(s, IntegratorConfig(t_end=0.0), table64)
    assert len(traj.states) == 1 and traj.accepted == 0
    assert traj.final is s


def test_run_reaches_t_end_and_snapshots(grid64, table64):
    traj = run(gaussian_bump(grid64), IntegratorConfig(t_end=0.5, snapshot_every=0.1), table64)
    assert traj.final.t == 0.5
    assert len(traj.states) == len(traj.reports)
    assert 6 <= len(traj.states) <= 8
    assert np.all(np.diff(traj.times) > 0)
    assert all(np.all(s.values >= 0) for s in traj.states)


def test_abort_path(grid64, table64):
    cfg = IntegratorConfig(t_end=1.0, dt_init=1e-3, dt_min=1e-3, dt_max=1e-3, eta=1e-6)
    traj = run(gaussian_bump(grid64), cfg, table64)
    assert traj.aborted and "dt_min" in traj.abort_reason
    assert traj.final.t < 1.0


def test_run_is_deterministic(grid64, table64):
    cfg = IntegratorConfig(t_end=0.3, scheme="patankar2")
    a = run(gaussian_bump(grid64), cfg, table64)
    b = run(gaussian_bump(grid64), cfg, table64)
    assert a.accepted == b.accepted
    np.testing.assert_array_equal(a.final.values, b.final.values)


def test_heun_clamp_counting(grid64, table64):
    s = RadialState(grid64, np.exp(-grid64.nodes**2) * 5)
    cfg = IntegratorConfig(t_end=0.2, dt_init=0.1, dt_max=0.1, eta=0.99, scheme="heun_check")
    traj = run(s, cfg, table64)
    assert traj.clamped >= 0
    assert all(np.all(x.values >= 0) for x in traj.states)


def test_energy_drift_small(grid64, table64):
    s = gaussian_bump(grid64)
    traj = run(s, IntegratorConfig(t_end=0.5, scheme="patankar2", eta=0.05), table64)
    m0 = moment(s, 1)
    assert abs(moment(traj.final, 1) - m0) <= 1e-2 * m0
    assert SCHEMES[0] == "patankar_imex"
