"""
Command-line front end.

    relaxproj run -c config.json
    relaxproj verify --trials 1000 --seed 42
    relaxproj series --schedule paper_n2 --horizon 1000

Exit codes: 0 success, 1 property violation or no convergence, 2 bad input or IO.
Set RELAXPROJ_LOG to quiet, info or debug to control logging.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from relaxproj import diagnostics
from relaxproj.errors import InputError
from relaxproj.geometry import as_point, set_from_json
from relaxproj.schedule import (
    BUILTIN_KINDS,
    BlockPartition,
    Schedule,
    greedy_blocks,
    schedule_from_json,
    series_report,
)
from relaxproj.solver import RunConfig, RunResult, Status, run

log = logging.getLogger("relaxproj")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def fmt(v: float) -> str:
    return f"{v:.17g}"


@dataclass
class CliConfig:
    dimension: int
    sets: list
    schedule: Schedule
    x0: np.ndarray
    max_iter: int
    tol_feas: float
    tol_step: float
    trace_path: Optional[Path]
    summary_path: Optional[Path]
    reference_point: Optional[np.ndarray] = None
    trace_stride: int = 1

    def run_config(self) -> RunConfig:
        return RunConfig(
            sets=self.sets,
            schedule=self.schedule,
            x0=self.x0,
            max_iter=self.max_iter,
            tol_feas=self.tol_feas,
            tol_step=self.tol_step,
            reference_point=self.reference_point,
            trace_stride=self.trace_stride,
        )


def _number(raw: dict, key: str, kind=float, default=None, required=False):
    if key not in raw:
        if required:
            raise InputError(f"{key}: missing required field")
        return default
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{key}: expected a number, got {value!r}")
    if kind is int and value != int(value):
        raise InputError(f"{key}: expected an integer, got {value!r}")
    return kind(value)


def _vector(raw: dict, key: str, dim: int):
    try:
        return as_point(raw[key], dim)
    except InputError as exc:
        raise InputError(f"{key}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{key}: {exc}") from None


def parse_config(path) -> CliConfig:
    """Read and validate a run configuration; relative output paths resolve against the file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError("config: top level must be an object")

    dim = _number(raw, "dimension", int, required=True)
    if dim < 1:
        raise InputError("dimension: must be >= 1")
    if not isinstance(raw.get("sets"), list) or not raw["sets"]:
        raise InputError("sets: expected a non-empty list")
    sets = [set_from_json(obj, f"sets[{k}]") for k, obj in enumerate(raw["sets"])]
    for k, cset in enumerate(sets):
        if cset.dim is not None and cset.dim != dim:
            raise InputError(f"sets[{k}]: dimension {cset.dim} does not match dimension {dim}")
    if "schedule" not in raw:
        raise InputError("schedule: missing required field")
    schedule = schedule_from_json(raw["schedule"], len(sets))

    if "x0" not in raw:
        raise InputError("x0: missing required field")
    x0 = _vector(raw, "x0", dim)
    ref = _vector(raw, "reference_point", dim) if raw.get("reference_point") is not None else None

    def out_path(key):
        value = raw.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise InputError(f"{key}: expected a path string")
        p = Path(value)
        return p if p.is_absolute() else path.parent / p

    cfg = CliConfig(
        dimension=dim,
        sets=sets,
        schedule=schedule,
        x0=x0,
        max_iter=_number(raw, "max_iter", int, 10_000),
        tol_feas=_number(raw, "tol_feas", float, 1e-6),
        tol_step=_number(raw, "tol_step", float, 0.0),
        trace_path=out_path("trace_path"),
        summary_path=out_path("summary_path"),
        reference_point=ref,
        trace_stride=_number(raw, "trace_stride", int, 1),
    )
    # surface range errors (max_iter, tolerances, reference point) before any work
    cfg.run_config().validate()
    return cfg


def trace_header(n_sets: int, with_ref: bool) -> list[str]:
    cols = ["n"] + [f"d_{i}" for i in range(1, n_sets + 1)]
    cols += ["max_dist", "step_norm", "s", "nu_min_active", "cum_nu", "cum_mu"]
    if with_ref:
        cols.append("dist_to_ref")
    return cols


def write_trace(result: RunResult, n_sets: int, fh) -> None:
    with_ref = result.trace[0].dist_to_ref is not None
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(trace_header(n_sets, with_ref))
    for row in result.trace:
        values = row.dists + [row.max_dist, row.step_norm, row.s, row.nu_min_active, row.cum_nu, row.cum_mu]
        if with_ref:
            values.append(row.dist_to_ref)
        writer.writerow([row.n] + [fmt(v) for v in values])


def summary(result: RunResult) -> dict:
    last = result.final_row
    return {
        "status": result.status.value,
        "iterations": result.iterations,
        "final_point": result.final_point.tolist(),
        "final_max_dist": last.max_dist,
        "cum_nu": last.cum_nu,
        "cum_mu": last.cum_mu,
    }


def cmd_run(cfg: CliConfig) -> int:
    result = run(cfg.run_config())
    try:
        if cfg.trace_path is not None:
            with open(cfg.trace_path, "w", newline="") as fh:
                write_trace(result, len(cfg.sets), fh)
        text = json.dumps(summary(result), indent=2)
        if cfg.summary_path is not None:
            cfg.summary_path.write_text(text + "\n")
        else:
            print(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if result.status is Status.FEASIBLE else EXIT_FAIL


def cmd_verify(trials: int, seed: int) -> int:
    worst = diagnostics.sweep(trials, seed)
    failed = False
    for name, value in worst.items():
        ok = not math.isnan(value) and value >= -diagnostics.SLACK_TOL
        failed |= not ok
        print(f"{name:<20} min_slack={fmt(value):<25} {'ok' if ok else 'VIOLATED'}")
    return EXIT_FAIL if failed else EXIT_OK


def load_schedule(spec: str) -> Schedule:
    if spec in BUILTIN_KINDS:
        return BUILTIN_KINDS[spec]()
    path = Path(spec)
    if not path.exists():
        raise InputError(f"unknown schedule kind or missing file: {spec!r}")
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read schedule {path}: {exc}") from None
    return schedule_from_json(obj)


def cmd_series(schedule: str, horizon: int, p: Optional[int] = None) -> int:
    sched = load_schedule(schedule)
    if horizon < 1:
        raise InputError("horizon must be >= 1")
    if sched.horizon is not None:
        horizon = min(horizon, sched.horizon)
    blocks = BlockPartition.fixed(p, horizon) if p else greedy_blocks(sched, horizon)
    report = series_report(sched, blocks, horizon)
    out = {"schedule": sched.kind, "blocks": "fixed" if p else "greedy", **report.to_json()}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaxproj", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="iterate on a configured feasibility problem")
    p_run.add_argument("-c", "--config", required=True, help="JSON run configuration")

    p_verify = sub.add_parser("verify", help="random sweep of the descent and perturbation inequalities")
    p_verify.add_argument("--trials", type=int, default=1000)
    p_verify.add_argument("--seed", type=int, default=0)

    p_series = sub.add_parser("series", help="block and per-iteration series of a schedule")
    p_series.add_argument("--schedule", required=True, help="built-in kind or JSON schedule file")
    p_series.add_argument("--horizon", type=int, default=1000)
    p_series.add_argument("--p", type=int, default=None, help="fixed block length instead of greedy blocks")
    return parser


def setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("RELAXPROJ_LOG", "quiet").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.command == "run":
            return cmd_run(parse_config(args.config))
        if args.command == "verify":
            if args.trials < 1:
                raise InputError("--trials must be >= 1")
            return cmd_verify(args.trials, args.seed)
        return cmd_series(args.schedule, args.horizon, args.p)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
