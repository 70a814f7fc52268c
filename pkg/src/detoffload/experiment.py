"""Seeded experiment runs, parameter sweeps and oracle comparisons."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .engine import Assignment, Problem, SimulationResult, simulate
from .metrics import MetricsReport, aggregate, build_report
from .objective import ConstraintReport, check_constraints
from .solvers import OBJECTIVES, exhaustive_oracle, ga_solve, random_allocate
from .taskgen import Task, generate_tasks
from .topology import Topology, build_topology

log = logging.getLogger(__name__)

# order of the child streams spawned from each master seed
STREAMS = ("taskgen", "solver", "train_fading", "eval_fading")


def seed_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


@dataclass
class SeedOutcome:
    seed: int
    tasks: list[Task]
    assignment: Assignment
    result: SimulationResult
    report: MetricsReport
    constraints: ConstraintReport
    ga_trace: list[tuple[int, float, float]] = field(default_factory=list)
    solver_fitness: float = math.nan


@dataclass
class RunResult:
    config: ScenarioConfig
    fingerprint: str
    outcomes: list[SeedOutcome]

    @property
    def reports(self) -> list[MetricsReport]:
        return [o.report for o in self.outcomes]

    @property
    def aggregate(self) -> dict[str, float]:
        return aggregate(self.reports)


def build(config: ScenarioConfig) -> Topology:
    return build_topology(config.topology, config.capacity_window)


def run_seed(config: ScenarioConfig, seed: int, trace: bool = False) -> SeedOutcome:
    streams = seed_streams(seed)
    topology = build(config)
    tasks = generate_tasks(config.tasks, topology, streams["taskgen"])
    problem = Problem(topology, tasks, config)
    train = problem.channel(streams["train_fading"])

    trace_rows: list = []
    fit = math.nan
    if config.scheme == "random":
        assignment = random_allocate(problem, streams["solver"])
    else:
        ga = ga_solve(problem, config.ga, config.scheme, streams["solver"], train)
        assignment, trace_rows, fit = ga.assignment, ga.trace, ga.fitness

    channel = train if config.clairvoyant else problem.channel(streams["eval_fading"])
    result = simulate(topology, tasks, assignment, problem=problem, channel=channel, trace=trace)
    report = build_report(result, tasks, assignment, topology)
    constraints = check_constraints(topology, tasks, assignment, result)
    return SeedOutcome(seed, tasks, assignment, result, report, constraints, trace_rows, fit)


def run(config: ScenarioConfig, trace: bool = False) -> RunResult:
    config.validate()
    build(config)
    outcomes = []
    for seed in config.seeds:
        outcomes.append(run_seed(config, seed, trace))
        log.info("seed %d: satisfied %.3f", seed, outcomes[-1].report.satisfied_ratio)
    return RunResult(config, config.fingerprint(), outcomes)


# ---------------------------------------------------------------- output tables

def _fmt(v: Any) -> Any:
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def cell_columns(config: ScenarioConfig) -> dict[str, Any]:
    return {
        "fingerprint": config.fingerprint(),
        "scheme": config.scheme,
        "task_count": config.tasks.task_count,
        "parent_sinr_db": config.topology.parent_sinr_db,
    }


def write_run(res: RunResult, out: Path, trace: bool = False) -> None:
    """Write the per-run tables; the manifest goes last and marks the directory complete."""
    out.mkdir(parents=True, exist_ok=True)
    cell = cell_columns(res.config)
    scalars = [o.report.scalars() for o in res.outcomes]
    keys = list(scalars[0]) if scalars else []
    _write_csv(out / "metrics.csv", [*cell, "seed", "solver_fitness", "constraints_ok", *keys],
               [[*cell.values(), o.seed, o.solver_fitness, o.constraints.passed, *[s[k] for k in keys]]
                for o, s in zip(res.outcomes, scalars)])
    agg = res.aggregate
    _write_csv(out / "aggregate.csv", [*cell, *agg], [[*cell.values(), *agg.values()]])
    _write_csv(out / "ga_trace.csv", [*cell, "seed", "generation", "best", "mean"],
               [[*cell.values(), o.seed, g, b, m] for o in res.outcomes for g, b, m in o.ga_trace])
    _write_csv(out / "budget_samples.csv", [*cell, "seed", "budget"],
               [[*cell.values(), o.seed, b] for o in res.outcomes for b in o.report.time_budget_samples])
    _write_csv(out / "offload_samples.csv", [*cell, "seed", "size_bits", "workload_cycles"],
               [[*cell.values(), o.seed, s, w] for o in res.outcomes
                for s, w in zip(o.report.offloaded_sizes, o.report.offloaded_workloads)])
    if trace:
        _write_csv(out / "trace.csv", [*cell, "seed", "slot", "event", "task", "link", "first_resource",
                                       "resources", "value"],
                   [[*cell.values(), o.seed, *row] for o in res.outcomes for row in o.result.trace])
    manifest = {"tool": "detoffload", "version": __version__, "fingerprint": res.fingerprint,
                "config": res.config.to_dict()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- sweeps

TABLES = ("metrics.csv", "aggregate.csv", "ga_trace.csv", "budget_samples.csv", "offload_samples.csv")


def sweep_cells(config: ScenarioConfig, axes: dict[str, Sequence[Any]]) -> list[ScenarioConfig]:
    if not axes:
        raise ValueError("sweep needs at least one axis")
    for key, values in axes.items():
        if not values:
            raise ValueError(f"sweep axis {key!r} is empty")
    keys = list(axes)
    cells = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        cfg = config.replace(**dict(zip(keys, combo)))
        cfg.validate()
        cells.append(cfg)
    return cells


def _run_cell(args) -> tuple[str, str | None]:
    cfg, cell_dir, trace = args
    try:
        write_run(run(cfg, trace), Path(cell_dir), trace)
        return cfg.fingerprint(), None
    except Exception as exc:  # recorded per cell, the sweep goes on
        return cfg.fingerprint(), f"{type(exc).__name__}: {exc}"


def sweep(config: ScenarioConfig, axes: dict[str, Sequence[Any]], out: Path,
          jobs: int = 1, trace: bool = False) -> dict[str, str | None]:
    """Run every cell of the Cartesian product of ``axes`` and merge the tables.

    Cells already present under ``out/cells/<fingerprint>`` are skipped.
    Returns fingerprint -> error message (None on success) for each cell.
    """
    out = Path(out)
    cells = sweep_cells(config, axes)
    todo = []
    status: dict[str, str | None] = {}
    for cfg in cells:
        cell_dir = out / "cells" / cfg.fingerprint()
        if (cell_dir / "manifest.json").exists():
            status[cfg.fingerprint()] = None
            log.info("cell %s already complete, skipping", cfg.fingerprint())
        else:
            todo.append((cfg, str(cell_dir), trace))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for fp, err in pool.map(_run_cell, todo):
                status[fp] = err
    else:
        for item in todo:
            fp, err = _run_cell(item)
            status[fp] = err
    merge_cells(out, cells, status)
    return status


def merge_cells(out: Path, cells: Sequence[ScenarioConfig], status: dict[str, str | None]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name in TABLES:
        header = None
        body: list[str] = []
        for cfg in cells:
            f = out / "cells" / cfg.fingerprint() / name
            if status.get(cfg.fingerprint()) is None and f.exists():
                lines = f.read_text().splitlines(keepends=True)
                header = header or lines[0]
                body.extend(lines[1:])
        if header:
            (out / name).write_text(header + "".join(body))
    _write_csv(out / "errors.csv", ["fingerprint", "error"],
               [[fp, err] for fp, err in status.items() if err is not None])
    manifest = {"tool": "detoffload", "version": __version__,
                "cells": [{"fingerprint": c.fingerprint(), "config": c.to_dict()} for c in cells]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- oracle check

@dataclass
class OracleRow:
    seed: int
    oracle_fitness: float
    ga_fitness: float
    exact: bool

    @property
    def match(self) -> bool:
        return math.isclose(self.oracle_fitness, self.ga_fitness, rel_tol=1e-9, abs_tol=1e-12)


def oracle_check(config: ScenarioConfig) -> list[OracleRow]:
    """GA against exhaustive search on each seed's instance (training fading for both)."""
    config.validate()
    objective = config.scheme if config.scheme in OBJECTIVES else "deterministic"
    rows = []
    for seed in config.seeds:
        streams = seed_streams(seed)
        topology = build(config)
        tasks = generate_tasks(config.tasks, topology, streams["taskgen"])
        problem = Problem(topology, tasks, config)
        channel = problem.channel(streams["train_fading"])
        best = exhaustive_oracle(problem, objective, channel, config.oracle_budget)
        ga = ga_solve(problem, config.ga, objective, streams["solver"], channel)
        rows.append(OracleRow(seed, best.fitness, ga.fitness, best.exact))
    return rows


def write_oracle_rows(rows: Sequence[OracleRow], path: Path) -> None:
    _write_csv(path, ["seed", "oracle_fitness", "ga_fitness", "match", "exact"],
               [[r.seed, r.oracle_fitness, r.ga_fitness, r.match, r.exact] for r in rows])


def default_jobs() -> int:
    return max(1, (os.cpu_count() or 1))
