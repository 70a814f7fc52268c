"""Evaluation quantities computed from execution records and utilisation traces."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .engine import Assignment, ExecutionRecord, SimulationResult
from .taskgen import Task
from .topology import PROCESSING_KINDS, Topology, UnitKind

SATURATION_THRESHOLD = 0.8
BUDGET_PERCENTILES = tuple(range(10, 101, 10))


def satisfied_ratio(records: Sequence[ExecutionRecord]) -> float:
    if not records:
        raise ValueError("satisfied ratio undefined for an empty record set")
    return sum(r.completed_by_deadline for r in records) / len(records)


def normalized_time_budget(records: Sequence[ExecutionRecord], tasks: Sequence[Task]) -> list[float]:
    """Share of the deadline left over, for completed tasks only."""
    by_id = {t.id: t for t in tasks}
    out = []
    for r in records:
        if r.completed_by_deadline:
            dl = by_id[r.task_id].deadline
            out.append(min(1.0, max(0.0, (dl - r.total_time) / dl)))
    return out


def saturation_probability(utilization: Sequence[float], threshold: float = SATURATION_THRESHOLD) -> float:
    """Fraction of arrival instants whose utilisation is strictly above ``threshold``."""
    u = np.asarray(utilization, dtype=float)
    if u.size == 0:
        return 0.0
    return float(np.mean(u > threshold))


def comm_utilization_at_arrivals(result: SimulationResult, tasks: Sequence[Task], topology: Topology) -> np.ndarray:
    """Busiest pool's granted share during the slot in which each task is generated."""
    sizes = np.array([max(topology.K1, 1), max(topology.K2, 1)], dtype=float)
    util = (result.busy / sizes).max(axis=1)
    slots = np.array([int(t.generation_time // result.slot) for t in tasks], dtype=int)
    slots = np.clip(slots, 0, len(util) - 1)
    return util[slots]


def compute_utilization_at_arrivals(records: Sequence[ExecutionRecord], tasks: Sequence[Task],
                                    assignment: Assignment, topology: Topology) -> np.ndarray:
    """Most loaded unit's unprocessed committed cycles over its remaining window capacity.

    A task commits its workload to its target unit from generation until
    it finishes processing or is dropped; while in service only the
    unprocessed part counts. The arriving task itself is included. The
    remaining capacity of unit x at time t is P_x * (window - t); a unit
    with work but no capacity left counts as fully utilised.
    """
    units = [u for u in topology.units if u.kind in PROCESSING_KINDS]
    rec = {r.task_id: r for r in records}
    out = []
    for arriving in tasks:
        now = arriving.generation_time
        committed = {u.id: 0.0 for u in units}
        for t, x in zip(tasks, assignment.targets):
            if t.generation_time > now:
                continue
            r = rec[t.id]
            end = r.processing_end if not math.isnan(r.processing_end) else r.release_time
            if end <= now or r.release_time <= now:
                continue
            if not math.isnan(r.processing_start) and r.processing_start <= now:
                committed[x] += (end - now) * topology.unit(x).processing_power
            else:
                committed[x] += t.workload
        util = 0.0
        for u in units:
            if committed[u.id] <= 0:
                continue
            remaining = u.processing_power * (u.capacity_window - now)
            util = max(util, 1.0 if remaining <= 0 else min(committed[u.id] / remaining, 1.0))
        out.append(util)
    return np.array(out)


def allocation_shares(assignment: Assignment, topology: Topology) -> dict[str, float]:
    counts = {k.value: 0 for k in PROCESSING_KINDS}
    for x in assignment.targets:
        counts[topology.unit(x).kind.value] += 1
    n = len(assignment.targets)
    return {k: (v / n if n else 0.0) for k, v in counts.items()}


def offload_distributions(assignment: Assignment, tasks: Sequence[Task],
                          topology: Topology) -> tuple[list[float], list[float]]:
    """Sizes and workloads of the tasks sent to the parent network (edge or cloud)."""
    sizes, works = [], []
    for t, x in zip(tasks, assignment.targets):
        if topology.unit(x).kind in (UnitKind.EDGE, UnitKind.CLOUD):
            sizes.append(t.size)
            works.append(t.workload)
    return sizes, works


def makespan(records: Sequence[ExecutionRecord]) -> float:
    """Absolute completion time of the last satisfied task (0 if none)."""
    done = [r.completion_time for r in records if r.completed_by_deadline]
    return max(done) if done else 0.0


def common_makespans(runs: dict[str, Sequence[ExecutionRecord]]) -> dict[str, float]:
    """Each scheme's makespan over only the tasks that every scheme completed.

    Comparing full makespans would reward a scheme for dropping its slowest
    tasks; restricting to the common set keeps the comparison like for like.
    """
    common = None
    for records in runs.values():
        done = {r.task_id for r in records if r.completed_by_deadline}
        common = done if common is None else common & done
    common = common or set()
    return {name: makespan([r for r in records if r.task_id in common]) for name, records in runs.items()}


@dataclass
class MetricsReport:
    task_count: int
    satisfied_count: int
    satisfied_ratio: float
    comm_saturation: float
    compute_saturation: float
    allocation_shares: dict[str, float]
    makespan: float
    time_budget_samples: list[float] = field(default_factory=list)
    offloaded_sizes: list[float] = field(default_factory=list)
    offloaded_workloads: list[float] = field(default_factory=list)

    def scalars(self) -> dict[str, float]:
        """Flat key/value view for tables."""
        row = {
            "task_count": self.task_count,
            "satisfied_count": self.satisfied_count,
            "satisfied_ratio": self.satisfied_ratio,
            "comm_saturation": self.comm_saturation,
            "compute_saturation": self.compute_saturation,
            "makespan": self.makespan,
            "offloaded_count": len(self.offloaded_sizes),
        }
        for k, v in self.allocation_shares.items():
            row[f"share_{k}"] = v
        samples = self.time_budget_samples
        for p in BUDGET_PERCENTILES:
            row[f"budget_p{p}"] = float(np.percentile(samples, p)) if samples else math.nan
        row["budget_below_0.6"] = float(np.mean(np.array(samples) < 0.6)) if samples else math.nan
        return row

    def to_dict(self) -> dict:
        return asdict(self)


def build_report(result: SimulationResult, tasks: Sequence[Task], assignment: Assignment,
                 topology: Topology, threshold: float = SATURATION_THRESHOLD) -> MetricsReport:
    records = result.records
    n_ok = sum(r.completed_by_deadline for r in records)
    sizes, works = offload_distributions(assignment, tasks, topology)
    if records:
        comm = saturation_probability(comm_utilization_at_arrivals(result, tasks, topology), threshold)
        comp = saturation_probability(compute_utilization_at_arrivals(records, tasks, assignment, topology), threshold)
        ratio = satisfied_ratio(records)
    else:
        comm = comp = 0.0
        ratio = 1.0
    return MetricsReport(
        task_count=len(records),
        satisfied_count=n_ok,
        satisfied_ratio=ratio,
        comm_saturation=comm,
        compute_saturation=comp,
        allocation_shares=allocation_shares(assignment, topology),
        makespan=makespan(records),
        time_budget_samples=normalized_time_budget(records, tasks),
        offloaded_sizes=sizes,
        offloaded_workloads=works,
    )


def aggregate(reports: Sequence[MetricsReport]) -> dict[str, float]:
    """Mean and (population) standard deviation of every scalar across runs."""
    rows = [r.scalars() for r in reports]
    out: dict[str, float] = {"runs": len(rows)}
    if not rows:
        return out
    for key in rows[0]:
        vals = np.array([row[key] for row in rows], dtype=float)
        finite = vals[~np.isnan(vals)]
        out[f"{key}_mean"] = float(finite.mean()) if finite.size else math.nan
        out[f"{key}_std"] = float(finite.std()) if finite.size else math.nan
    return out
