"""Command line front end: run, verify, surfaces, oracle-check, equilibrium.

Configuration files are flat ``key = value`` text with ``#`` comments::

    # physics
    kappa0 = 1.0
    kappa1 = 1.0
    kappa2 = 1.0
    # grid
    n = 512
    r_max = 8.0
    # time
    t_end = 10.0
    scheme = patankar2
    eta = 0.05
    # initial condition: exactly one of equilibrium / gaussian_bump / from_file
    gaussian_bump = 1.0, 1.0, 0.5

Command-line flags override file keys.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import collision, diagnostics, integrator, oracle, surfaces
from .collision import RadialGrid, RadialState
from .dispersion import DispersionParams
from .errors import ConfigurationError

MIN_N = 32
REQUIRED = ("n", "r_max", "t_end")
INITIAL_KEYS = ("equilibrium", "gaussian_bump", "from_file")


class ConfigProblems(ConfigurationError):
    """All violations found while validating a configuration."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class RunConfig:
    n: int
    r_max: float
    t_end: float
    kappa0: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    m: Optional[float] = None
    g: Optional[float] = None
    n_c: Optional[float] = None
    spacing: str = "uniform"
    n_quad: Optional[int] = None
    dt: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 0.1
    eta: float = 0.1
    scheme: str = "patankar_imex"
    f_scale: float = 1e-8
    snapshot_every: float = 0.1
    diagnostics_every: float = 0.0
    initial: str = "gaussian_bump"
    initial_args: Tuple = (1.0, 1.0, 0.5)
    out_dir: str = "out"
    mass_bound: Optional[float] = None
    envelope_T: float = 1.0

    def params(self) -> DispersionParams:
        if self.m is not None:
            return DispersionParams.from_physical(self.m, self.g, self.n_c, self.kappa0)
        return DispersionParams(self.kappa0, self.kappa1, self.kappa2)

    def grid(self) -> RadialGrid:
        return RadialGrid.build(self.n, self.r_max, self.spacing)

    def integrator_config(self) -> integrator.IntegratorConfig:
        return integrator.IntegratorConfig(
            t_end=self.t_end, dt_init=self.dt, dt_min=self.dt_min, dt_max=max(self.dt_max, self.dt),
            eta=self.eta, scheme=self.scheme, snapshot_every=0.0, f_scale=self.f_scale,
        )

    def profile(self):
        """The initial occupation as a callable of radius (for the oracle)."""
        if self.initial == "equilibrium":
            c = self.initial_args[0]
            params = self.params()
            return lambda r: diagnostics.equilibrium_profile(r, c, params)
        if self.initial == "gaussian_bump":
            a, r0, w = self.initial_args
            return lambda r: diagnostics.bump_profile(r, a, r0, w)
        state = self.initial_state()
        return lambda r: state(r)

    def initial_state(self, grid: Optional[RadialGrid] = None) -> RadialState:
        grid = self.grid() if grid is None else grid
        if self.initial == "equilibrium":
            return diagnostics.equilibrium_state(self.initial_args[0], grid, self.params())
        if self.initial == "gaussian_bump":
            return diagnostics.gaussian_bump(grid, *self.initial_args)
        return read_state(Path(self.initial_args[0]), grid)


_FLOAT_KEYS = {"r_max", "t_end", "kappa0", "kappa1", "kappa2", "m", "g", "n_c", "dt", "dt_min", "dt_max", "eta",
               "f_scale", "snapshot_every", "diagnostics_every", "mass_bound", "envelope_T"}
_INT_KEYS = {"n", "n_quad"}
_STR_KEYS = {"spacing", "scheme", "out_dir"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | set(INITIAL_KEYS)


def _parse_pairs(text: str, problems: List[str]) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected key = value")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            problems.append(f"unknown key {key!r}")
            continue
        if key in pairs:
            problems.append(f"duplicate key {key!r}")
        pairs[key] = value
    return pairs


def parse_config(text: str, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """Validate a configuration; raises ConfigProblems listing every violation."""
    problems: List[str] = []
    pairs = _parse_pairs(text, problems)
    for k, v in (overrides or {}).items():
        pairs[k] = v
    values: Dict[str, object] = {}
    for key, raw in pairs.items():
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(raw)
            elif key in _INT_KEYS:
                values[key] = int(raw)
            elif key in _STR_KEYS:
                values[key] = raw
        except ValueError:
            problems.append(f"{key}: cannot parse {raw!r}")
    for key in REQUIRED:
        if key not in pairs:
            problems.append(f"missing required key {key!r}")

    given = [k for k in INITIAL_KEYS if k in pairs]
    if len(given) > 1:
        problems.append("conflicting initial conditions: " + ", ".join(given))
    elif given:
        key = given[0]
        raw = pairs[key]
        if key == "from_file":
            values["initial"], values["initial_args"] = key, (raw,)
        else:
            try:
                args = tuple(float(x) for x in raw.split(","))
            except ValueError:
                args = ()
                problems.append(f"{key}: cannot parse {raw!r}")
            want = 1 if key == "equilibrium" else 3
            if args and len(args) != want:
                problems.append(f"{key} takes {want} value(s), got {len(args)}")
            elif args and any(a <= 0 for a in args):
                problems.append(f"{key} values must be positive")
            values["initial"], values["initial_args"] = key, args

    n = values.get("n")
    if isinstance(n, int) and n < MIN_N:
        problems.append(f"n below minimum {MIN_N}")
    if isinstance(values.get("r_max"), float) and not values["r_max"] > 0:
        problems.append("r_max must be positive")
    if isinstance(values.get("t_end"), float) and values["t_end"] < 0:
        problems.append("t_end must be nonnegative")
    if values.get("spacing", "uniform") not in ("uniform", "log"):
        problems.append("spacing must be 'uniform' or 'log'")
    physical = [k for k in ("m", "g", "n_c") if k in values]
    if physical and len(physical) != 3:
        problems.append("m, g and n_c must be given together")
    if physical and ("kappa1" in values or "kappa2" in values):
        problems.append("give either kappa1/kappa2 or m/g/n_c, not both")
    if problems:
        raise ConfigProblems(problems)

    cfg = RunConfig(**values)
    try:
        cfg.params()
        cfg.integrator_config()
    except (ConfigurationError, ValueError) as exc:
        raise ConfigProblems([str(exc)]) from exc
    return cfg


def render_config(cfg: RunConfig) -> str:
    """Text that parses back to an equal configuration."""
    lines = []
    for f in fields(RunConfig):
        if f.name in ("initial", "initial_args"):
            continue
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name in ("kappa1", "kappa2") and cfg.m is not None:
            continue
        lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
    if cfg.initial == "from_file":
        lines.append(f"from_file = {cfg.initial_args[0]}")
    else:
        lines.append(f"{cfg.initial} = " + ", ".join(repr(float(a)) for a in cfg.initial_args))
    return "\n".join(lines) + "\n"


# -- file formats -------------------------------------------------------------

def write_snapshots(path: Path, states: Sequence[RadialState]):
    with open(path, "w") as fh:
        fh.write("t,rho,f\n")
        for s in states:
            t = repr(float(s.t))
            for r, v in zip(s.grid.nodes, s.values):
                fh.write(f"{t},{float(r)!r},{float(v)!r}\n")


def write_diagnostics(jsonl: Path, csv: Path, reports: Sequence[diagnostics.DiagnosticsReport]):
    with open(jsonl, "w") as fh:
        for rep in reports:
            fh.write(json.dumps(rep.as_record()) + "\n")
    with open(csv, "w") as fh:
        fh.write(",".join(diagnostics.DiagnosticsReport.FIELDS) + "\n")
        for rep in reports:
            fh.write(",".join(repr(float(v)) for v in rep.as_record().values()) + "\n")


def write_state(path: Path, state: RadialState):
    with open(path, "w") as fh:
        fh.write("rho,f\n")
        for r, v in zip(state.grid.nodes, state.values):
            fh.write(f"{float(r)!r},{float(v)!r}\n")


def read_state(path: Path, grid: RadialGrid) -> RadialState:
    """Read ``rho,f`` rows (or the last time of a ``t,rho,f`` snapshot file) on the given grid."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigurationError(f"cannot read initial state {path}: {exc}") from exc
    if data.shape[1] == 3:
        data = data[data[:, 0] == data[:, 0].max()][:, 1:]
    if data.shape[1] != 2:
        raise ConfigurationError(f"{path}: expected columns rho,f or t,rho,f")
    rho, f = data[:, 0], data[:, 1]
    if rho.shape != grid.nodes.shape or not np.allclose(rho, grid.nodes, rtol=1e-12, atol=0):
        raise ConfigurationError(f"{path}: radii do not match the configured grid")
    return RadialState(grid, f)


# -- commands --------------------------------------------------------------------

def _cadence(states, every):
    out = [states[0]]
    for s in states[1:-1]:
        if every == 0 or s.t - out[-1].t >= every * (1 - 1e-12):
            out.append(s)
    if len(states) > 1:
        out.append(states[-1])
    return out


def _setup(cfg: RunConfig):
    params = cfg.params()
    grid = cfg.grid()
    table = collision.build_kernel_table(grid, params, cfg.n_quad)
    return params, grid, table


def cmd_run(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    params, grid, table = _setup(cfg)
    traj = integrator.run(cfg.initial_state(grid), cfg.integrator_config(), table, params)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_snapshots(out_dir / "snapshots.csv", _cadence(traj.states, cfg.snapshot_every))
    by_time = {id(s): r for s, r in zip(traj.states, traj.reports)}
    kept = _cadence(traj.states, cfg.diagnostics_every)
    write_diagnostics(out_dir / "diagnostics.jsonl", out_dir / "summary.csv", [by_time[id(s)] for s in kept])
    print(f"accepted={traj.accepted} rejected={traj.rejected} t={traj.final.t!r} out={out_dir}", file=out)
    if traj.aborted:
        print("aborted: " + traj.abort_reason, file=out)
        return 2
    return 0


def verify_checks(cfg: RunConfig):
    """(name, passed, detail) for the checks feasible under the configuration."""
    params, grid, table = _setup(cfg)
    traj = integrator.run(cfg.initial_state(grid), cfg.integrator_config(), table, params)
    checks = []
    checks.append(("step control", not traj.aborted, traj.abort_reason or f"{traj.accepted} steps"))
    drift = max(abs(r.energy_drift) for r in traj.reports)
    checks.append(("energy conservation", drift <= 1e-3, f"max |drift| = {drift:.3e} (limit 1e-3)"))
    h = np.array([r.entropy for r in traj.reports])
    rel = np.diff(h) / np.maximum(np.abs(h[:-1]), 1e-300)
    worst = float(rel.max()) if rel.size else 0.0
    checks.append(("H-theorem", worst <= 1e-8, f"max relative H increase per step = {worst:.3e} (limit 1e-8)"))
    c = cfg.initial_args[0] if cfg.initial == "equilibrium" else 1.0
    eq = diagnostics.equilibrium_state(c, grid, params)
    g, nu, _ = collision.gain_and_loss(eq, table, params)
    resid = float(np.abs(g - nu * eq.values).max() / np.abs(nu * eq.values).max())
    checks.append(("equilibrium stationarity", resid <= 1e-3, f"c={c!r} normalized residual = {resid:.3e} (limit 1e-3)"))
    T = min(cfg.envelope_T, 0.5 * cfg.t_end) if cfg.t_end > 0 else 0.0
    verdict = diagnostics.lower_bound_report(traj, T)
    checks.append(("envelope positivity", verdict.holds,
                   f"inf theta1 over t >= {T!r} = {verdict.theta1_inf:.4e} at theta2 = {verdict.theta2:.4g}"))
    if cfg.mass_bound is not None:
        sup = max(r.mass for r in traj.reports)
        checks.append(("mass bound", sup <= cfg.mass_bound, f"sup mass = {sup:.6g} (bound {cfg.mass_bound!r})"))
    return checks


def cmd_verify(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    checks = verify_checks(cfg)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)
    return 0 if all(ok for _, ok, _ in checks) else 1


def cmd_surfaces(kind: str, rho: float, n_alpha: int, params: DispersionParams, out=None) -> int:
    out = sys.stdout if out is None else out
    k = surfaces.SurfaceKind.parse(kind)
    top = 1.0 if k is surfaces.SurfaceKind.DECAY else surfaces.alpha_max(rho, params)
    print("kind,rho,alpha,q_alpha,density,grad_norm", file=out)
    for j in range(n_alpha):
        a = top * (j + 0.5) / n_alpha
        s = surfaces.ring_sample(k, rho, a, params)
        print(f"{k.value},{rho!r},{a!r},{s.ring_radius!r},{s.measure_density!r},{s.grad_norm!r}", file=out)
    return 0


def cmd_oracle_check(cfg: RunConfig, radii: Sequence[float] = (0.5, 1.0, 2.0), eps: Optional[Sequence[float]] = None,
                     out=None) -> int:
    out = sys.stdout if out is None else out
    params = cfg.params()
    f = cfg.profile()
    print("rho,epsilon,value,reference,abs_error,rel_error,noise", file=out)
    status = 0
    for rho in radii:
        seq = oracle.default_eps(rho, params) if eps is None else eps
        st = oracle.epsilon_study(f, rho, seq, params, r_max=cfg.r_max)
        scale = st.scale if st.scale > 0 else 1.0
        for row in st.rows:
            print(f"{rho!r},{row.epsilon!r},{row.value!r},{st.reference!r},{row.error!r},"
                  f"{row.error / scale!r},{row.noise!r}", file=out)
        print(f"{rho!r},0.0,{st.extrapolated!r},{st.reference!r},{st.extrapolated_error!r},"
              f"{st.extrapolated_error / scale!r},", file=out)
        if not st.monotone:
            print(f"# rho={rho!r}: error sequence is not monotone", file=sys.stderr)
    return status


def cmd_equilibrium(cfg: RunConfig, c: float, path: Path, out=None) -> int:
    out = sys.stdout if out is None else out
    state = diagnostics.equilibrium_state(c, cfg.grid(), cfg.params())
    path.parent.mkdir(parents=True, exist_ok=True)
    write_state(path, state)
    print(f"wrote {path}", file=out)
    return 0


# -- entry point --------------------------------------------------------------------

_DEFAULT_TEXT = "n = 512\nr_max = 8.0\nt_end = 1.0\n"


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value configuration file")
    common.add_argument("--out", help="output directory (or file for 'equilibrium')")
    common.add_argument("--n", type=int)
    common.add_argument("--rmax", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--t-end", type=float)
    common.add_argument("--kappa0", type=float)
    common.add_argument("--kappa1", type=float)
    common.add_argument("--kappa2", type=float)

    p = argparse.ArgumentParser(prog="bogoliubov-qbe", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate and write snapshots and diagnostics")
    sub.add_parser("verify", parents=[common], help="run and check conservation, H, equilibrium, envelope")
    s = sub.add_parser("surfaces", parents=[common], help="ring samples of a resonance surface")
    s.add_argument("kind", help="decay | absorb | absorb_shifted")
    s.add_argument("rho", type=float)
    s.add_argument("n_alpha", type=int)
    o = sub.add_parser("oracle-check", parents=[common], help="mollified-delta convergence table")
    o.add_argument("--rho", type=float, action="append", help="probe radius (repeatable)")
    e = sub.add_parser("equilibrium", parents=[common], help="write an equilibrium state as rho,f")
    e.add_argument("--c", type=float, default=None, help="inverse temperature (default: config or 1)")
    return p


def _overrides(args) -> Dict[str, str]:
    mapping = {"n": "n", "rmax": "r_max", "dt": "dt", "t_end": "t_end",
               "kappa0": "kappa0", "kappa1": "kappa1", "kappa2": "kappa2"}
    ov = {key: repr(getattr(args, attr)) for attr, key in mapping.items() if getattr(args, attr) is not None}
    if args.out is not None and args.command in ("run", "verify"):
        ov["out_dir"] = args.out
    return ov


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else _DEFAULT_TEXT
        cfg = parse_config(text, _overrides(args))
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "surfaces":
            return cmd_surfaces(args.kind, args.rho, args.n_alpha, cfg.params())
        if args.command == "oracle-check":
            return cmd_oracle_check(cfg, radii=args.rho or (0.5, 1.0, 2.0))
        if args.command == "equilibrium":
            c = args.c if args.c is not None else (cfg.initial_args[0] if cfg.initial == "equilibrium" else 1.0)
            return cmd_equilibrium(cfg, c, Path(args.out or "equilibrium.csv"))
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
