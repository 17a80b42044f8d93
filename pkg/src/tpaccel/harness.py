"""Benchmark grid runner and CSV/JSON emitters."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .accelerators import anderson_solve, picard_solve, relaxed_solve, tpa_solve
from .core import ResidualTrace, SolveConfig, SolveReport, SolverError
from .problems import PROBLEMS, RANDOMISED, ParameterError, ProblemInstance, build_problem

__all__ = [
    "UsageError",
    "MethodSpec",
    "BenchmarkCell",
    "parse_method",
    "parse_methods",
    "default_methods",
    "run_cell",
    "run_benchmark",
    "emit_summary",
    "emit_traces",
    "emit_json",
    "SUMMARY_FIELDS",
    "TRACE_FIELDS",
]

SUMMARY_FIELDS = ["method", "n_evals", "final_residual_inf", "final_error_inf", "converged", "seed"]
TRACE_FIELDS = ["method", "evals_used", "residual_inf"]

SOLVERS = {
    "tpa": tpa_solve,
    "picard": picard_solve,
    "relaxed": relaxed_solve,
    "anderson": anderson_solve,
}

# method option -> (SolveConfig field, converter)
OPTIONS = {
    "omega": ("omega", float),
    "m": ("depth", int),
    "depth": ("depth", int),
    "theta": ("theta", float),
}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class MethodSpec:
    kind: str
    options: tuple = ()
    label: str = ""

    def config(self, protocol: SolveConfig) -> SolveConfig:
        return replace(protocol, **{OPTIONS[k][0]: v for k, v in self.options})


def parse_method(token: str) -> MethodSpec:
    """Parse ``name[:key=value[:key=value]]``, e.g. ``anderson:m=3``."""
    token = token.strip()
    kind, *parts = token.split(":")
    if kind not in SOLVERS:
        raise UsageError(f"unknown method {kind!r}; choose from {sorted(SOLVERS)}")
    options = []
    for part in parts:
        key, sep, value = part.partition("=")
        if not sep or key not in OPTIONS:
            raise UsageError(f"bad option {part!r} in method {token!r}")
        try:
            options.append((key, OPTIONS[key][1](value)))
        except ValueError:
            raise UsageError(f"bad value {value!r} for {key} in {token!r}") from None
    return MethodSpec(kind, tuple(options), token)


def parse_methods(text: str) -> list:
    tokens = [t for t in text.split(",") if t.strip()]
    if not tokens:
        raise UsageError("no methods given")
    return [parse_method(t) for t in tokens]


def default_methods(problem_name: str) -> list:
    grid = {
        "clustered": "tpa,picard,relaxed:omega=1.8,anderson:m=2,anderson:m=3,anderson:m=5",
        "tanh": "tpa,picard,relaxed:omega=1.5,anderson:m=2,anderson:m=3,anderson:m=5",
        "poisson": "tpa,picard,anderson:m=2,anderson:m=3,anderson:m=5",
    }
    return parse_methods(grid[problem_name])


@dataclass
class BenchmarkCell:
    problem: ProblemInstance
    method: MethodSpec
    cfg: SolveConfig
    report: Optional[SolveReport] = field(default=None)

    @property
    def executed(self) -> bool:
        return self.report is not None


def run_cell(cell: BenchmarkCell) -> BenchmarkCell:
    """Run one method on a fresh copy of the problem map; divergence is recorded, not raised."""
    solver = SOLVERS[cell.method.kind]
    fmap = cell.problem.fresh_map()
    x0 = [0.0] * fmap.dimension
    try:
        report = solver(fmap, x0, cell.cfg, x_star=cell.problem.x_star, name=cell.method.label)
    except SolverError as exc:
        report = exc.report
        if report is None:
            report = SolveReport(cell.method.label, False, fmap.eval_count, ResidualTrace(),
                                 None, float("nan"))
        report.message = str(exc)
    cell.report = report
    return cell


def run_benchmark(problem_name: str, method_specs, protocol: Optional[SolveConfig] = None,
                  seed: int = 0, out_dir=None, *, repeat: int = 1, traces: bool = True,
                  json_summary: bool = False, problem_kwargs: Optional[dict] = None) -> list:
    """Run every method on ``problem_name`` and optionally write the result files.

    Randomised problems are rebuilt for seeds ``seed .. seed + repeat - 1``;
    the Poisson problem is deterministic and runs once. Files written to
    ``out_dir``: ``summary.csv``, ``traces.csv`` (unless ``traces`` is false)
    and ``summary.json`` (if ``json_summary``).
    """
    if problem_name not in PROBLEMS:
        raise UsageError(f"unknown problem {problem_name!r}; choose from {sorted(PROBLEMS)}")
    if repeat < 1:
        raise UsageError("repeat must be >= 1")
    if protocol is None:
        protocol = SolveConfig()
    if isinstance(method_specs, str):
        method_specs = parse_methods(method_specs)
    specs = [parse_method(s) if isinstance(s, str) else s for s in method_specs]
    try:
        configs = [spec.config(protocol) for spec in specs]
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    seeds = [seed + k for k in range(repeat)] if problem_name in RANDOMISED else [None]
    cells = []
    for s in seeds:
        try:
            problem = build_problem(problem_name, seed=s, **(problem_kwargs or {}))
        except (ParameterError, TypeError) as exc:
            raise UsageError(str(exc)) from None
        for spec, cfg in zip(specs, configs):
            cells.append(run_cell(BenchmarkCell(problem, spec, cfg)))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        emit_summary(cells, os.path.join(out_dir, "summary.csv"))
        if traces:
            emit_traces(cells, os.path.join(out_dir, "traces.csv"), with_seed=repeat > 1)
        if json_summary:
            emit_json(cells, os.path.join(out_dir, "summary.json"))
    return cells


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _summary_record(cell: BenchmarkCell) -> dict:
    if not cell.executed:
        raise ValueError(f"cell {cell.method.label!r} has not been run")
    r = cell.report
    return {
        "method": cell.method.label,
        "n_evals": r.total_evals,
        "final_residual_inf": float(r.final_residual_inf),
        "final_error_inf": None if r.final_error_inf is None else float(r.final_error_inf),
        "converged": bool(r.converged),
        "seed": cell.problem.seed,
    }


def _open(path):
    return open(path, "w", newline="", encoding="utf-8")


def emit_summary(cells, path):
    records = [_summary_record(c) for c in cells]
    with _open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        for rec in records:
            writer.writerow([_fmt(rec[k]) for k in SUMMARY_FIELDS])
    return path


def emit_traces(cells, path, with_seed: bool = False):
    fields = TRACE_FIELDS + (["seed"] if with_seed else [])
    for c in cells:
        _summary_record(c)
    with _open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for c in cells:
            tail = [_fmt(c.problem.seed)] if with_seed else []
            for evals, res in c.report.trace:
                writer.writerow([c.method.label, evals, _fmt(res)] + tail)
    return path


def emit_json(cells, path):
    records = [_summary_record(c) for c in cells]
    with _open(path) as fh:
        json.dump(records, fh, indent=2, allow_nan=True)
        fh.write("\n")
    return path
