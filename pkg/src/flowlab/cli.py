"""Reproducible command-line front end.

Subcommands: simulate, rosenau, verify, sweep, oracle-check.  Inputs come
from flags and/or a plain key=value config file; outputs are CSV and JSON
files written atomically with 17-significant-digit numbers, so identical
configs produce byte-identical files.

Exit codes: 0 success, 2 config error, 3 integration/quadrature failure,
4 internal invariant breach, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import closed_forms, evolution, frame_calculus as fc, norms, rosenau
from .closed_forms import UnsupportedBranchError
from .flow import FlowParams, StopReason, conserved_quantities, integrate
from .geometry import DiagonalMetric, Geometry
from .norms import ExtremumKind, MultipleExtremaError, Verdict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_INTERNAL = 4
EXIT_VERIFY = 5

DEFAULT_SEED = 20240801
DEFAULT_T_END = {
    Geometry.SU2: 1.0,
    Geometry.ISOM_R2: 30.0,
    Geometry.SL2R: 30.0,
    Geometry.HEISENBERG: 30.0,
    Geometry.ISOM_R11: 30.0,
    Geometry.R3: 5.0,
}

# Documented sample initial data for the one-shot verdict table.
TABLE1_SAMPLES: tuple[tuple[Geometry, tuple[float, float, float], Verdict], ...] = (
    (Geometry.SU2, (0.25, 1.0, 1.0), Verdict.HAS_INTERIOR_MAX),
    (Geometry.SU2, (0.6, 1.0, 1.0), Verdict.STRICTLY_DECREASING),
    (Geometry.SU2, (1.0, 1.0, 1.0), Verdict.IDENTICALLY_ZERO),
    (Geometry.SU2, (1.5, 1.0, 1.0), Verdict.STRICTLY_DECREASING),
    (Geometry.ISOM_R2, (1.0, 2.0, 3.0), Verdict.STRICTLY_DECREASING),
    (Geometry.ISOM_R2, (2.0, 2.0, 3.0), Verdict.IDENTICALLY_ZERO),
    (Geometry.SL2R, (0.1, 1.0, 1.0), Verdict.STRICTLY_DECREASING),
    (Geometry.HEISENBERG, (1.0, 1.0, 1.0), Verdict.STRICTLY_DECREASING),
    (Geometry.ISOM_R11, (1.0, 2.0, 3.0), Verdict.STRICTLY_DECREASING),
    (Geometry.R3, (1.0, 2.0, 3.0), Verdict.IDENTICALLY_ZERO),
)


class ConfigError(Exception):
    pass


class IntegrationFailure(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    geometry: str | None = None
    a0: float | None = None
    b0: float | None = None
    c0: float | None = None
    t_end: float | None = None
    rel_tol: float | None = None
    abs_tol: float | None = None
    sample_stride: float | None = None
    t_grid: list[float] | None = None
    slice_t: float | None = None
    output: str | None = None
    vol_factor: float | None = None
    seed: int | None = None
    n_random: int | None = None
    ratios: list[float] | None = None
    table1: bool | None = None
    jobs: int | None = None


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"malformed number for key '{key}': {raw!r}") from exc
    if not np.isfinite(value):
        raise ConfigError(f"non-finite value for key '{key}': {raw!r}")
    return value


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"malformed integer for key '{key}': {raw!r}") from exc


def _parse_float_list(key: str, raw: str) -> list[float]:
    items = [s for s in raw.replace(";", ",").split(",") if s.strip()]
    if not items:
        raise ConfigError(f"empty list for key '{key}'")
    return [_parse_float(key, s.strip()) for s in items]


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise ConfigError(f"malformed boolean for key '{key}': {raw!r}")


_KEY_PARSERS = {
    "geometry": lambda k, v: v.strip().lower(),
    "a0": _parse_float, "b0": _parse_float, "c0": _parse_float,
    "t_end": _parse_float, "rel_tol": _parse_float, "abs_tol": _parse_float,
    "sample_stride": _parse_float, "vol_factor": _parse_float, "slice_t": _parse_float,
    "t_grid": _parse_float_list, "ratios": _parse_float_list,
    "seed": _parse_int, "n_random": _parse_int, "jobs": _parse_int,
    "table1": _parse_bool,
    "output": lambda k, v: v.strip(),
}

_COMMAND_KEYS = {
    "simulate": {"geometry", "a0", "b0", "c0", "t_end", "rel_tol", "abs_tol",
                 "sample_stride", "vol_factor", "output"},
    "rosenau": {"t_grid", "slice_t", "output"},
    "verify": {"seed", "n_random", "output"},
    "sweep": {"geometry", "ratios", "b0", "c0", "t_end", "table1", "jobs", "output"},
    "oracle-check": {"seed", "n_random", "output"},
}


def _read_config_file(path: str, command: str) -> dict:
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        if key not in _COMMAND_KEYS[command]:
            raise ConfigError(f"{path}:{lineno}: key '{key}' not valid for '{command}'")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        values[key] = _KEY_PARSERS[key](key, raw)
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--force", action="store_true",
                       help="let flags override conflicting config-file values")
        p.add_argument("--output", default=None, help="output path base")

    p = sub.add_parser("simulate", help="integrate one flow and emit CSV + JSON")
    add_common(p)
    p.add_argument("--geometry", default=None)
    p.add_argument("--A0", dest="a0", type=float, default=None)
    p.add_argument("--B0", dest="b0", type=float, default=None)
    p.add_argument("--C0", dest="c0", type=float, default=None)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
    p.add_argument("--sample-stride", dest="sample_stride", type=float, default=None)
    p.add_argument("--vol-factor", dest="vol_factor", type=float, default=None)

    p = sub.add_parser("rosenau", help="L1 norm vs closed form and a slice table")
    add_common(p)
    p.add_argument("--t-grid", dest="t_grid", default=None,
                   help="comma-separated negative times")
    p.add_argument("--slice-t", dest="slice_t", type=float, default=None)

    p = sub.add_parser("verify", help="run the full residual verification suite")
    add_common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-random", dest="n_random", type=int, default=None)

    p = sub.add_parser("sweep", help="verdicts over a grid of initial data")
    add_common(p)
    p.add_argument("--geometry", default=None)
    p.add_argument("--ratios", default=None, help="comma-separated A0/B0 ratios")
    p.add_argument("--B0", dest="b0", type=float, default=None)
    p.add_argument("--C0", dest="c0", type=float, default=None)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--table1", action="store_const", const=True, default=None,
                   help="run the documented verdict table")
    p.add_argument("--jobs", type=int, default=None)

    p = sub.add_parser("oracle-check", help="closed forms vs frame oracle on random metrics")
    add_common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-random", dest="n_random", type=int, default=None)
    return parser


def parse_config(argv: list[str]) -> ExperimentConfig:
    """Flags plus optional key=value file; conflicts error unless --force."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise ConfigError("invalid command line") from exc

    command = ns.command
    if command == "rosenau" and ns.t_grid is not None:
        ns.t_grid = _parse_float_list("t_grid", ns.t_grid)
    if command == "sweep" and ns.ratios is not None:
        ns.ratios = _parse_float_list("ratios", ns.ratios)

    cfg = ExperimentConfig(command=command)
    file_values = _read_config_file(ns.config, command) if ns.config else {}
    for key in _COMMAND_KEYS[command]:
        flag_value = getattr(ns, key, None)
        file_value = file_values.get(key)
        if flag_value is not None and file_value is not None and flag_value != file_value:
            if not ns.force:
                raise ConfigError(
                    f"key '{key}': flag value {flag_value!r} conflicts with config "
                    f"file value {file_value!r} (pass --force to let the flag win)"
                )
            print(f"warning: --force: flag {key}={flag_value!r} overrides "
                  f"config value {file_value!r}", file=sys.stderr)
        value = flag_value if flag_value is not None else file_value
        if value is not None:
            setattr(cfg, key, value)
    _validate_config(cfg)
    return cfg


def _geometry(cfg: ExperimentConfig) -> Geometry:
    try:
        return Geometry(cfg.geometry)
    except ValueError as exc:
        names = ", ".join(g.value for g in Geometry)
        raise ConfigError(f"unknown geometry {cfg.geometry!r}; expected one of {names}") from exc


def _validate_config(cfg: ExperimentConfig):
    if cfg.command == "simulate":
        missing = [k for k in ("geometry", "a0", "b0", "c0") if getattr(cfg, k) is None]
        if missing:
            raise ConfigError(f"simulate: missing required keys: {', '.join(missing)}")
        _geometry(cfg)
        for key in ("a0", "b0", "c0"):
            if getattr(cfg, key) <= 0.0:
                raise ConfigError(f"simulate: {key} must be positive, got {getattr(cfg, key)}")
        if cfg.vol_factor is not None and cfg.vol_factor <= 0.0:
            raise ConfigError(f"simulate: vol_factor must be positive, got {cfg.vol_factor}")
    elif cfg.command == "rosenau":
        if cfg.t_grid is not None and any(t >= 0.0 for t in cfg.t_grid):
            raise ConfigError("rosenau: all t_grid entries must be negative")
        if cfg.slice_t is not None and cfg.slice_t >= 0.0:
            raise ConfigError(f"rosenau: slice_t must be negative, got {cfg.slice_t}")
    elif cfg.command == "sweep":
        if not cfg.table1:
            if cfg.geometry is None or cfg.ratios is None:
                raise ConfigError("sweep: need --table1, or --geometry with --ratios")
            _geometry(cfg)
            if any(r <= 0.0 for r in cfg.ratios):
                raise ConfigError("sweep: ratios must be positive")
    for key in ("seed", "n_random", "jobs"):
        value = getattr(cfg, key)
        if value is not None and value <= 0 and key != "seed":
            raise ConfigError(f"{key} must be positive, got {value}")


# ----------------------------------------------------------------------------
# Output helpers


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".flowlab_tmp_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header: list[str], rows: list[list]):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else v if isinstance(v, str) else _fmt(v)
                              for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def _write_json(path: str, payload: dict):
    _write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _density_closed_or_none(geometry: Geometry, metric: DiagonalMetric) -> float | None:
    try:
        return closed_forms.l1_density_closed(geometry, metric)
    except UnsupportedBranchError:
        return None


def _density_series(traj, vol_factor: float):
    """Closed-form series where tabulated, oracle otherwise; plus the source tag.

    The returned series is trimmed to its signal-dominated prefix so verdict
    and extremum scans never run over the cancellation-noise tail.
    """
    try:
        series = norms.norm_series(traj, source="closed", vol_factor=vol_factor)
        source = "closed"
    except UnsupportedBranchError:
        series = norms.norm_series(traj, source="oracle", vol_factor=vol_factor)
        source = "oracle"
    return norms.trim_to_signal(series, traj), source


# ----------------------------------------------------------------------------
# Runners


def run_simulate(cfg: ExperimentConfig) -> int:
    geometry = _geometry(cfg)
    initial = DiagonalMetric(cfg.a0, cfg.b0, cfg.c0)
    t_end = cfg.t_end if cfg.t_end is not None else DEFAULT_T_END[geometry]
    stride = cfg.sample_stride if cfg.sample_stride is not None else t_end / 500.0
    params = FlowParams(
        t_end=t_end,
        rel_tol=cfg.rel_tol if cfg.rel_tol is not None else 1e-10,
        abs_tol=cfg.abs_tol if cfg.abs_tol is not None else 1e-12,
        sample_stride=stride,
    )
    traj = integrate(geometry, initial, params)
    if traj.stop_reason is StopReason.STEP_UNDERFLOW:
        raise IntegrationFailure(
            f"step underflow at t={traj.t_last:.17g}; no output written"
        )

    sc = fc.frame_data(geometry)
    vol = cfg.vol_factor if cfg.vol_factor is not None else 1.0
    rows = []
    for state in traj.samples:
        _, scal = fc.ricci(state.metric, sc)
        closed = _density_closed_or_none(geometry, state.metric)
        oracle = norms.l1_density_oracle(state.metric, sc)
        rows.append([
            state.t, state.metric.a, state.metric.b, state.metric.c, scal,
            None if closed is None else vol * closed, vol * oracle,
        ])

    series, source = _density_series(traj, vol)
    verdict = norms.monotonicity_verdict(series)
    extremum = norms.find_extremum(series, traj, source=source)

    drift = None
    names = conserved_quantities(geometry, traj.samples[0].metric)
    if names:
        initial_values = dict(names)
        drift = 0.0
        for state in traj.samples:
            for name, value in conserved_quantities(geometry, state.metric):
                ref = initial_values[name]
                drift = max(drift, abs(value - ref) / max(abs(ref), 1e-300))

    summary = {
        "schema": 1,
        "command": "simulate",
        "geometry": geometry.value,
        "initial": [cfg.a0, cfg.b0, cfg.c0],
        "t_end_requested": t_end,
        "t_last": traj.t_last,
        "stop_reason": traj.stop_reason.value,
        "T_estimate": traj.t_estimate,
        "extremum": {
            "kind": extremum.kind.value,
            "t0": extremum.t0,
            "ratio": extremum.ratio_at_t0,
        },
        "monotonicity": verdict.value,
        "density_source": source,
        "vol_factor": vol,
        "conserved_max_drift": drift,
        "sample_count": len(traj.samples),
    }
    base = cfg.output or "flowlab_simulate"
    _write_csv(base + ".csv",
               ["t", "A", "B", "C", "R", "density_closed", "density_oracle"], rows)
    _write_json(base + ".json", summary)
    print(f"wrote {base}.csv and {base}.json")
    return EXIT_OK


def run_rosenau(cfg: ExperimentConfig) -> int:
    t_grid = cfg.t_grid if cfg.t_grid is not None else [-2.0, -1.0, -0.5, -0.1]
    slice_t = cfg.slice_t if cfg.slice_t is not None else t_grid[0]
    rows = []
    for t in t_grid:
        quadrature = rosenau.l1_norm(t)
        closed = rosenau.l1_closed_form(t)
        rows.append([t, quadrature, closed, abs(quadrature - closed) / closed])
    slice_rows = []
    for x in np.linspace(-6.0, 6.0, 121):
        slice_rows.append([
            x,
            rosenau.conformal_factor(x, slice_t),
            rosenau.scalar_curvature(x, slice_t),
            rosenau.cotton_york_23(x, slice_t),
        ])
    base = cfg.output or "flowlab_rosenau"
    _write_csv(base + "_l1.csv", ["t", "l1_quadrature", "l1_closed", "rel_diff"], rows)
    _write_csv(base + "_slice.csv", ["x", "u", "R", "C23"], slice_rows)
    print(f"wrote {base}_l1.csv and {base}_slice.csv")
    return EXIT_OK


def run_verify(cfg: ExperimentConfig) -> int:
    report = evolution.verification_report(
        n_random=cfg.n_random if cfg.n_random is not None else 200,
        seed=cfg.seed if cfg.seed is not None else DEFAULT_SEED,
    )
    base = cfg.output or "flowlab_verify"
    _write_json(base + ".json", report)
    print(f"wrote {base}.json")
    if not report["all_within_tolerance"]:
        print(f"verification failed: {report['failures'][0]}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all checks passed; L1 evolution verdict: {report['l1_verdict']}")
    return EXIT_OK


def run_oracle_check(cfg: ExperimentConfig) -> int:
    report = evolution.closed_form_sweep(
        n_random=cfg.n_random if cfg.n_random is not None else 1000,
        seed=cfg.seed if cfg.seed is not None else DEFAULT_SEED,
    )
    report["schema"] = 1
    failures = []
    for name, entry in report["geometries"].items():
        if entry["cotton_york_max_rel"] > 1e-10:
            failures.append(f"{name}.cotton_york")
        if entry.get("density_max_rel", 0.0) > 1e-10:
            failures.append(f"{name}.density")
    if report["heisenberg_ratio_spread"] > 1e-10:
        failures.append("heisenberg_ratio_spread")
    report["failures"] = failures
    report["all_within_tolerance"] = not failures
    base = cfg.output or "flowlab_oracle_check"
    _write_json(base + ".json", report)
    print(f"wrote {base}.json")
    if failures:
        print(f"oracle check failed: {failures[0]}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _sweep_item(geometry: Geometry, initial: tuple[float, float, float],
                t_end: float | None) -> dict:
    end = t_end if t_end is not None else DEFAULT_T_END[geometry]
    params = FlowParams(t_end=end, sample_stride=end / 500.0)
    traj = integrate(geometry, DiagonalMetric(*initial), params)
    series, source = _density_series(traj, 1.0)
    verdict = norms.monotonicity_verdict(series)
    extremum = norms.find_extremum(series, traj, source=source)
    return {
        "geometry": geometry.value,
        "initial": list(initial),
        "verdict": verdict.value,
        "extremum_kind": extremum.kind.value,
        "extremum_ratio": extremum.ratio_at_t0,
        "density_initial": float(series.density[0]),
        "density_final": float(series.density[-1]),
        "density_peak": float(np.max(series.density)),
        "stop_reason": traj.stop_reason.value,
    }


def run_sweep(cfg: ExperimentConfig) -> int:
    if cfg.table1:
        items = [(geo, init) for geo, init, _expected in TABLE1_SAMPLES]
    else:
        geometry = _geometry(cfg)
        b0 = cfg.b0 if cfg.b0 is not None else 1.0
        c0 = cfg.c0 if cfg.c0 is not None else 1.0
        items = [(geometry, (r * b0, b0, c0)) for r in cfg.ratios]

    jobs = cfg.jobs
    if jobs is None:
        jobs = int(os.environ.get("FLOWLAB_JOBS", "1"))
    jobs = max(1, jobs)

    if jobs == 1:
        results = [_sweep_item(geo, init, cfg.t_end) for geo, init in items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda it: _sweep_item(it[0], it[1], cfg.t_end), items))

    rows = [[r["geometry"], r["initial"][0], r["initial"][1], r["initial"][2],
             r["verdict"], r["density_initial"], r["density_peak"], r["density_final"]]
            for r in results]
    base = cfg.output or "flowlab_sweep"
    _write_csv(base + ".csv",
               ["geometry", "A0", "B0", "C0", "verdict",
                "density_initial", "density_peak", "density_final"], rows)
    _write_json(base + ".json", {"schema": 1, "command": "sweep", "items": results})

    if cfg.table1:
        width = max(len(r["geometry"]) for r in results)
        print("verdict table:")
        for r in results:
            init = "(" + ", ".join(f"{v:g}" for v in r["initial"]) + ")"
            print(f"  {r['geometry']:<{width}}  {init:<16} {r['verdict']}")
    print(f"wrote {base}.csv and {base}.json")
    return EXIT_OK


_RUNNERS = {
    "simulate": run_simulate,
    "rosenau": run_rosenau,
    "verify": run_verify,
    "sweep": run_sweep,
    "oracle-check": run_oracle_check,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # bad numerics reaching domain validation (e.g. non-positive metric)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationFailure, rosenau.QuadratureError) as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (MultipleExtremaError, evolution.HypothesisViolatedError, AssertionError) as exc:
        print(f"internal invariant breach: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
