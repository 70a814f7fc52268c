"""Deadline-penalty and summed-latency objectives, plus constraint reporting."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .config import PenaltyConfig
from .engine import Assignment, ExecutionRecord, SimulationResult
from .taskgen import Task
from .topology import Topology, allowed_targets


def penalty(x: float, cfg: PenaltyConfig | None = None) -> float:
    """Step penalty on the execution-time-to-deadline ratio; finishing exactly on time is free."""
    cfg = cfg or PenaltyConfig()
    if x < 0:
        raise ValueError("ratio must be non-negative")
    return 0.0 if x <= 1.0 else cfg.M


def deterministic_objective(records: Sequence[ExecutionRecord], tasks: Sequence[Task],
                            cfg: PenaltyConfig | None = None) -> float:
    by_id = {t.id: t for t in tasks}
    total = 0.0
    for r in records:
        x = r.total_time / by_id[r.task_id].deadline if r.completed_by_deadline else math.inf
        total += penalty(x, cfg)
    return total


def min_latency_objective(records: Sequence[ExecutionRecord], miss_cost: float = 0.2) -> float:
    """Sum of execution times; a task that never completed counts ``miss_cost`` seconds."""
    return float(sum(r.total_time if r.completed_by_deadline else miss_cost for r in records))


@dataclass
class ConstraintCheck:
    name: str
    passed: bool
    witness: str | None = None


@dataclass
class ConstraintReport:
    checks: list[ConstraintCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def indicator_matrix(assignment: Assignment, n_units: int) -> np.ndarray:
    a = np.zeros((len(assignment.targets), n_units), dtype=int)
    a[np.arange(len(assignment.targets)), list(assignment.targets)] = 1
    return a


def check_constraints(topology: Topology, tasks: Sequence[Task], assignment: Assignment | np.ndarray,
                      result: SimulationResult | None = None) -> ConstraintReport:
    """Report single placement, resource exclusivity, link-rate budget and unit capacity.

    ``assignment`` may also be a binary task-by-unit indicator matrix, which
    can express the multi-target placements the single-placement check exists to catch.
    """
    n_units = len(topology.units)
    a = indicator_matrix(assignment, n_units) if isinstance(assignment, Assignment) else np.asarray(assignment)
    report = ConstraintReport()

    witness = None
    for i, t in enumerate(tasks):
        chosen = np.flatnonzero(a[i])
        if len(chosen) != 1:
            witness = f"task {t.id} placed on {len(chosen)} units {chosen.tolist()}"
            break
        if int(chosen[0]) not in allowed_targets(topology, t.origin):
            witness = f"task {t.id} placed on unit {int(chosen[0])}, not reachable from its origin"
            break
    report.checks.append(ConstraintCheck("single_placement", witness is None, witness))

    if result is not None:
        v = result.violations
        report.checks.append(ConstraintCheck(
            "resource_exclusivity", v["resource_exclusivity"] == 0,
            None if v["resource_exclusivity"] == 0 else f"{v['resource_exclusivity']} double-booked resource slots"))
        report.checks.append(ConstraintCheck(
            "link_rate", v["link_rate"] == 0,
            None if v["link_rate"] == 0 else f"{v['link_rate']} link-slots above the available rate"))
        report.checks.append(ConstraintCheck(
            "bit_conservation", v["bit_conservation"] == 0,
            None if v["bit_conservation"] == 0 else f"{v['bit_conservation']} hops delivered the wrong bit count"))

    work = np.array([t.workload for t in tasks], dtype=float)
    load = work @ a if len(tasks) else np.zeros(n_units)
    witness = None
    for u in topology.units:
        if load[u.id] > u.max_capacity * (1 + 1e-12):
            witness = f"{u.name}: {load[u.id]:.6g} cycles assigned > capacity {u.max_capacity:.6g}"
            break
    report.checks.append(ConstraintCheck("unit_capacity", witness is None, witness))
    return report


def capacity_violations(topology: Topology, tasks: Sequence[Task], targets: Sequence[int]) -> int:
    """Number of units whose assigned workload exceeds their window capacity."""
    load = np.zeros(len(topology.units))
    for t, x in zip(tasks, targets):
        load[x] += t.workload
    return int(sum(load[u.id] > u.max_capacity * (1 + 1e-12) for u in topology.units))
