"""Scenario configuration, orchestration and file output.

Configs are flat TOML documents (one ``key = value`` per line, no tables).
``run_scenario`` writes

* ``summary.json``: plan constants, every checked inequality with its
  expression and margin, the norms tables and the focusing report;
* ``profiles.csv``: ``t, r, rho, m, E`` with one row per (snapshot, grid edge);
* ``trajectories.csv`` (relaxed runs): ``t, id, r, w, l, envelope, margin``;
* ``plot/``: per-snapshot profiles and the focusing trace.

Exit codes: 0 success, 1 certification or target failure, 2 usage error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
import tomli
import tomli_w

from .errors import (ConfigError, DepositionError, DomainError, IntegrationError, LemmaHypothesisError,
                     PlanningError, SamplingError)
from .field_solver import RadialField, RadialGrid
from .initial_data.plans import (FocusingTimeLaw, plan_rvp, plan_vp, relaxed_rvp_plan, relaxed_vp_plan)
from .initial_data.profile import make_profile
from .radial_kinetics import RadialPhasePoint, StepControl, System, integrate_trajectory, rvp_bounds, vp_bounds
from .simulation import RunResult, SimState, focusing_experiment, monotonicity_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

PROFILE_COLUMNS = ("t", "r", "rho", "m", "E")
TRAJECTORY_COLUMNS = ("t", "id", "r", "w", "l", "envelope", "margin")
TRACE_COLUMNS = ("t", "sup_R", "rho_sup", "E_sup")
SWEEP_COLUMNS = ("k", "b", "T", "certified")

DEFAULT_SWEEP_B = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.5, 2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class ScenarioConfig:
    system: str
    eta: float
    N: float
    eps0: float
    k: int
    b: Optional[float] = None
    mode: str = "strict"
    profile: str = "bump"
    resolution: tuple = (2000, 10, 5)
    grid_cells: int = 2000
    grid_spacing: str = "geometric"
    grid_ratio: float = 1.005
    n_steps: int = 400
    dt: Optional[float] = None
    t_end: Optional[float] = None
    snapshot_times: tuple = ()
    relaxed_a0: Optional[float] = None
    relaxed_eps: Optional[float] = None
    growth_target: float = 10.0
    n_track: int = 256
    write_trajectories: bool = True
    sweep_b: tuple = DEFAULT_SWEEP_B
    trace_state: Optional[tuple] = None
    trace_M: float = 0.0
    trace_field: str = "ball"
    trace_R0: float = 1.0
    deterministic: bool = True


_REQUIRED = ("system", "eta", "N", "eps0", "k")
_CHOICES = {"system": ("vp", "rvp"), "mode": ("strict", "relaxed"), "profile": ("bump", "poly4"),
            "grid_spacing": ("uniform", "geometric"), "trace_field": ("none", "ball", "exp")}
_POSITIVE = ("eta", "N", "eps0", "b", "grid_ratio", "dt", "relaxed_a0", "relaxed_eps", "growth_target",
             "trace_R0")
_TUPLES = {"resolution": int, "snapshot_times": float, "sweep_b": float, "trace_state": float}


def _field_types():
    hints = {}
    for f in fields(ScenarioConfig):
        hints[f.name] = f.type.replace("Optional[", "").rstrip("]")
    return hints


def _coerce(key, value, typ):
    if typ == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key)
        return float(value)
    if typ == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return value
    if typ == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", key)
        return value
    if typ == "str":
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key)
        return value
    if typ == "tuple":
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", key)
        elem = _TUPLES[key]
        return tuple(_coerce(f"{key}[{i}]", v, elem.__name__) for i, v in enumerate(value))
    raise ConfigError(f"unsupported field type {typ}", key)


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    for key, choices in _CHOICES.items():
        if getattr(cfg, key) not in choices:
            raise ConfigError(f"must be one of {choices}, got {getattr(cfg, key)!r}", key)
    for key in _POSITIVE:
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            raise ConfigError("must be positive", key)
    if cfg.k < 1:
        raise ConfigError("k >= 1 is required (k is a positive integer)", "k")
    if not cfg.eta < 1:
        raise ConfigError("must lie in (0, 1)", "eta")
    if not cfg.N > 1:
        raise ConfigError("must exceed 1", "N")
    if cfg.system == "vp" and cfg.b is None:
        raise ConfigError("required for system = vp", "b")
    if len(cfg.resolution) != 3 or min(cfg.resolution) < 1:
        raise ConfigError("expected three positive counts [n_r, n_u, n_l]", "resolution")
    for key in ("grid_cells", "n_steps", "n_track"):
        if getattr(cfg, key) < 1:
            raise ConfigError("must be positive", key)
    if cfg.mode == "relaxed" and cfg.grid_cells < 2:
        raise ConfigError("need at least 2 cells", "grid_cells")
    upper = cfg.t_end
    for i, s in enumerate(cfg.snapshot_times):
        if s < 0 or (upper is not None and s > upper):
            raise ConfigError("snapshot times must lie in [0, t_end]", f"snapshot_times[{i}]")
    if cfg.t_end is not None and cfg.t_end < 0:
        raise ConfigError("must be nonnegative", "t_end")
    if cfg.trace_state is not None and len(cfg.trace_state) != 3:
        raise ConfigError("expected [r, w, l]", "trace_state")
    if cfg.trace_M < 0:
        raise ConfigError("must be nonnegative", "trace_M")
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a flat TOML scenario document."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed document: {exc}") from exc
    types = _field_types()
    for key, value in raw.items():
        if key not in types:
            raise ConfigError("unknown key", key)
        if isinstance(value, dict):
            raise ConfigError("nested tables are not allowed", key)
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError("missing required key", key)
    values = {key: _coerce(key, value, types[key]) for key, value in raw.items()}
    return validate(ScenarioConfig(**values))


def serialize(cfg: ScenarioConfig) -> str:
    """Flat TOML text; ``None`` entries are omitted and restored as defaults on parse."""
    out = {}
    for f in fields(ScenarioConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return tomli_w.dumps(out)


def config_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


# ------------------------------------------------------------- outputs


def _clean(x):
    """JSON-safe copy: NaN/inf become None, numpy scalars become Python numbers."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def edge_density(fld: RadialField) -> np.ndarray:
    """Cell densities averaged onto the edges (end cells copied outward)."""
    rho = fld.rho
    out = np.empty(rho.size + 1)
    out[0], out[-1] = rho[0], rho[-1]
    out[1:-1] = 0.5 * (rho[1:] + rho[:-1])
    return out


def _profile_rows(state: SimState):
    fld = state.field
    rho_e = edge_density(fld)
    for r, rho, m, E in zip(fld.grid.edges, rho_e, fld.m, fld.E):
        yield (repr(float(state.t)), repr(float(r)), repr(float(rho)), repr(float(m)), repr(float(E)))


def write_profiles(path: Path, snapshots):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_COLUMNS)
        for s in snapshots:
            w.writerows(_profile_rows(s))


def _trace_from_states(states):
    out = {c: [] for c in TRACE_COLUMNS}
    for s in states:
        out["t"].append(s.t)
        out["sup_R"].append(float(s.radius.max()) if s.n else 0.0)
        out["rho_sup"].append(float(np.max(s.field.rho)) if s.field is not None else 0.0)
        out["E_sup"].append(float(np.max(np.abs(s.field.E))) if s.field is not None else 0.0)
    return out


def emit_plot_data(series, path) -> list:
    """Write ``profile_XXXX.csv`` per snapshot and ``trace.csv``; returns the written paths."""
    if isinstance(series, RunResult):
        snaps, trace = series.snapshots, series.trace
    else:
        snaps = list(series)
        trace = None
    if not snaps:
        raise DomainError("emit_plot_data needs at least one snapshot")
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        written = []
        for i, s in enumerate(snaps):
            p = path / f"profile_{i:04d}.csv"
            write_profiles(p, [s])
            written.append(p)
        trace = trace if trace is not None else _trace_from_states(snaps)
        p = path / "trace.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for row in zip(*[trace[c] for c in TRACE_COLUMNS]):
                w.writerow([repr(float(v)) for v in row])
        written.append(p)
    except OSError as exc:
        raise OSError(f"{exc.filename or path}: {exc.strerror}") from exc
    return written


def write_trajectories(path: Path, result: RunResult, system: System, M: float):
    tr = result.tracked
    bounds = vp_bounds if system is System.VP else rvp_bounds
    t = tr["t"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for j, pid in enumerate(tr["index"]):
            r0, w0, l0 = float(tr["R"][0, j]), float(tr["W"][0, j]), float(tr["L"][0, j])
            env = bounds(r0, w0, l0, M).r_sq_envelope if (w0 < 0 and l0 > 0) else None
            for i in range(t.size):
                R = float(tr["R"][i, j])
                e = env(float(t[i])) if env else float("nan")
                margin = (e - R * R) / e if env else float("nan")
                w.writerow([repr(float(t[i])), int(pid), repr(R), repr(float(tr["W"][i, j])),
                            repr(float(tr["L"][i, j])), repr(e), repr(margin)])


# -------------------------------------------------------------- scenario


def build_plan(cfg: ScenarioConfig):
    if cfg.system == "vp":
        if cfg.mode == "strict":
            return plan_vp(cfg.eta, cfg.N, cfg.b, cfg.eps0, cfg.k)
        a0 = cfg.relaxed_a0 if cfg.relaxed_a0 is not None else 2.0 * cfg.b
        eps = cfg.relaxed_eps if cfg.relaxed_eps is not None else 0.01 * cfg.b
        return relaxed_vp_plan(b=cfg.b, a0=a0, eps=eps, k=cfg.k, eps0=cfg.eps0)
    if cfg.mode == "strict":
        return plan_rvp(cfg.eta, cfg.N, cfg.eps0, cfg.k)
    return relaxed_rvp_plan(eps=cfg.relaxed_eps if cfg.relaxed_eps is not None else 0.1, k=cfg.k)


def _summary_base(cfg):
    return {"config": config_dict(cfg),
            "csv_schema": {"profiles": list(PROFILE_COLUMNS), "trajectories": list(TRAJECTORY_COLUMNS),
                           "trace": list(TRACE_COLUMNS), "sweep": list(SWEEP_COLUMNS),
                           "profile_rho_location": "edge average of the adjacent cell densities"}}


def run_scenario(cfg: ScenarioConfig, out_dir) -> int:
    """Certify or simulate one scenario and write its artifacts; returns the exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = _summary_base(cfg)
    profile = make_profile(cfg.profile)
    try:
        plan = build_plan(cfg)
    except PlanningError as exc:
        summary.update(status="certification failure", error=str(exc),
                       checks=[c.as_dict() for c in exc.failed])
        write_json(out / "summary.json", summary)
        return EXIT_FAIL
    summary["plan"] = plan.summary()
    try:
        if cfg.mode == "strict":
            report = focusing_experiment(plan, "strict", (cfg.eta, cfg.N), profile)
            snaps = []
            if cfg.system == "vp":
                from .initial_data.sampling import sample_plan

                ps = sample_plan(plan, profile, resolution=cfg.resolution)
                grid = _grid(cfg, 2.0 * plan.b)
                snaps = [SimState.from_particles(ps, grid, System.VP)]
        else:
            T = plan.T if cfg.system == "vp" else float(plan.T)
            t_end = cfg.t_end if cfg.t_end is not None else T
            n_steps = cfg.n_steps if cfg.dt is None else max(1, math.ceil(T / cfg.dt))
            report = focusing_experiment(plan, "relaxed", (cfg.eta, cfg.N), profile, resolution=cfg.resolution,
                                         n_cells=cfg.grid_cells,
                                         ratio=cfg.grid_ratio if cfg.grid_spacing == "geometric" else 1.0,
                                         n_steps=n_steps, t_factor=t_end / T if T > 0 else 1.0,
                                         growth=cfg.growth_target, n_track=cfg.n_track)
            snaps = report.series.snapshots
    except (IntegrationError, DepositionError, SamplingError, FloatingPointError) as exc:
        summary.update(status="numerical failure", error=str(exc))
        write_json(out / "summary.json", summary)
        return EXIT_NUMERIC
    summary["report"] = report.as_dict()
    summary["checks"] = [c.as_dict() for c in report.checks]
    if snaps:
        write_profiles(out / "profiles.csv", snaps)
    if report.series is not None:
        emit_plot_data(report.series, out / "plot")
        if cfg.write_trajectories and report.series.tracked is not None:
            system = System.VP if cfg.system == "vp" else System.RVP
            write_trajectories(out / "trajectories.csv", report.series, system, report.series.snapshots[0].M)
    elif snaps:
        emit_plot_data(snaps, out / "plot")
    summary["status"] = "pass" if report.passed else "fail"
    write_json(out / "summary.json", summary)
    return EXIT_OK if report.passed else EXIT_FAIL


def _grid(cfg, r_max):
    if cfg.grid_spacing == "uniform":
        return RadialGrid.uniform(r_max, cfg.grid_cells)
    return RadialGrid.geometric(r_max, cfg.grid_cells, cfg.grid_ratio)


def run_plan(cfg: ScenarioConfig, out_dir) -> int:
    """Strict certification only: plan constants and checks, no sampling."""
    from .initial_data.plans import rvp_confinement_checks, vp_confinement_checks

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = _summary_base(cfg)
    try:
        plan = build_plan(replace(cfg, mode="strict"))
    except PlanningError as exc:
        summary.update(status="certification failure", error=str(exc), checks=[c.as_dict() for c in exc.failed])
        write_json(out / "summary.json", summary)
        return EXIT_FAIL
    conf = vp_confinement_checks(plan) if cfg.system == "vp" else rvp_confinement_checks(plan)
    checks = list(plan.checks) + list(conf)
    ok = all(c.passed for c in checks)
    summary.update(plan=plan.summary(), checks=[c.as_dict() for c in checks], status="pass" if ok else "fail")
    write_json(out / "summary.json", summary)
    return EXIT_OK if ok else EXIT_FAIL


def run_sweep(cfg: Optional[ScenarioConfig], out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    eta, N, eps0 = (0.5, 2.0, 1.0) if cfg is None else (cfg.eta, cfg.N, cfg.eps0)
    ks = range(1, 9) if cfg is None else [cfg.k]
    b_all = DEFAULT_SWEEP_B if cfg is None else cfg.sweep_b
    tables, monotone = [], True
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for k in ks:
            bs = [b for b in b_all if b >= 1 or k <= 5]
            law = FocusingTimeLaw.from_constants(eta, N, eps0, k)
            tab = monotonicity_sweep(bs, k, law, certify=True)
            monotone &= tab.monotone
            for b, T, cert in tab.rows:
                w.writerow([k, repr(b), repr(T), cert])
            tables.append({"k": k, "n": law.n, "C": law.C, "n_tilde": law.n_tilde, "C_tilde": law.C_tilde,
                           "decreases": tab.decreases, "junction": [c.as_dict() for c in law.junction_checks()]})
    write_json(out / "sweep.json", {"eta": eta, "N": N, "eps0": eps0, "tables": tables, "monotone": monotone})
    return EXIT_OK if monotone else EXIT_FAIL


def _trace_field(cfg):
    M, R0 = cfg.trace_M, cfg.trace_R0
    if cfg.trace_field == "none" or M == 0:
        return None
    if cfg.trace_field == "ball":
        return lambda t, r: M * min(1.0, (r / R0) ** 3)
    return lambda t, r: M * (1.0 - math.exp(-r / R0))


def run_trace(cfg: ScenarioConfig, out_dir) -> int:
    """Integrate one characteristic in a static field and compare with the lemma bounds."""
    if cfg.trace_state is None:
        raise ConfigError("required for the trace verb", "trace_state")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    system = System(cfg.system)
    r, w, l = cfg.trace_state
    bounds = (vp_bounds if system is System.VP else rvp_bounds)(r, w, l, cfg.trace_M)
    g = math.sqrt(1 + w * w + l / r**2) if system is System.RVP else 1.0
    t_end = cfg.t_end if cfg.t_end is not None else 1.2 * r / abs(w) * g + 0.1
    rec = integrate_trajectory(system, RadialPhasePoint(r, w, l), _trace_field(cfg), t_end, StepControl())
    t_turn = rec.turning_time if rec.turning_time is not None else math.inf
    worst = math.inf
    with open(out / "trajectories.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(TRAJECTORY_COLUMNS)
        for t, R, W, L in zip(rec.t, rec.r, rec.w, rec.l):
            e = bounds.r_sq_envelope(t)
            m = (e - R * R) / e
            if t < t_turn:
                worst = min(worst, m)
            wr.writerow([repr(t), 0, repr(R), repr(W), repr(L), repr(e), repr(m)])
    step = rec.step_near(t_turn) if math.isfinite(t_turn) else 0.0
    ok_env = worst >= -1e-6
    ok_turn = (not math.isfinite(t_turn)) or t_turn >= bounds.t0_lower - step
    summary = _summary_base(cfg)
    summary.update(trace={"turning_time": rec.turning_time, "t0_lower": bounds.t0_lower,
                          "min_envelope_margin": worst, "steps": rec.steps,
                          "r_minus": bounds.r_minus, "r_plus": bounds.r_plus, "D": bounds.d_value},
                   status="pass" if ok_env and ok_turn else "fail")
    write_json(out / "summary.json", summary)
    return EXIT_OK if ok_env and ok_turn else EXIT_FAIL


# ------------------------------------------------------------------- CLI


def _parser():
    p = argparse.ArgumentParser(prog="vpfocus", description="Focusing solutions of spherically symmetric VP/RVP.")
    p.add_argument("verb", choices=("plan", "run", "sweep", "trace"))
    p.add_argument("--config", type=Path, help="flat TOML scenario file")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--mode", choices=("strict", "relaxed"))
    p.add_argument("--system", choices=("vp", "rvp"))
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = None
        if args.config is not None:
            cfg = parse_config(args.config.read_text())
            over = {k: v for k, v in (("mode", args.mode), ("system", args.system)) if v is not None}
            cfg = validate(replace(cfg, **over)) if over else cfg
        elif args.verb != "sweep":
            raise ConfigError("--config is required for this verb", "config")
        if args.verb == "plan":
            return run_plan(cfg, args.out)
        if args.verb == "run":
            return run_scenario(cfg, args.out)
        if args.verb == "sweep":
            return run_sweep(cfg, args.out)
        return run_trace(cfg, args.out)
    except (ConfigError, OSError, LemmaHypothesisError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, DepositionError, SamplingError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
