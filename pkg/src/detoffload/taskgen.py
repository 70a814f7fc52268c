"""Task model and the random task-set generator."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioParams
from .topology import Topology, UnitKind


@dataclass(frozen=True)
class Task:
    id: int
    generation_time: float  # s
    workload: float  # cycles
    size: float  # bits
    result_size: float  # bits
    deadline: float  # s, relative to generation_time
    origin: int

    @property
    def due(self) -> float:
        return self.generation_time + self.deadline

    def validate(self) -> None:
        if not (self.workload > 0 and self.size > 0 and self.deadline > 0):
            raise ValueError(f"task {self.id}: workload, size and deadline must be positive")
        if not 0 < self.result_size < self.size:
            raise ValueError(f"task {self.id}: result size must lie in (0, size)")


ORIGIN_KINDS = (UnitKind.SNE, UnitKind.LC, UnitKind.HC)


def generate_tasks(params: ScenarioParams, topology: Topology, rng: np.random.Generator) -> list[Task]:
    """Draw ``params.task_count`` tasks.

    Each attribute comes from its own child stream, so the first ``n``
    tasks of a larger set equal the ``n``-task set drawn from the same
    generator state. Sweeps over the task count rely on this.
    """
    params.validate()
    I = params.task_count
    s_gen, s_work, s_size, s_dl, s_kind, s_unit = rng.spawn(6)

    gen = s_gen.uniform(0.0, params.horizon, I)
    work = s_work.uniform(*params.workload_range, I)
    size = s_size.uniform(*params.size_range, I)
    deadline = s_dl.uniform(*params.deadline_range, I)
    kind_u = s_kind.random(I)
    unit_u = s_unit.random(I)

    pools = [topology.of_kind(k) for k in ORIGIN_KINDS]
    cum = np.cumsum(params.origin_shares)
    cum[-1] = 1.0
    tasks = []
    for i in range(I):
        k = int(np.searchsorted(cum, kind_u[i], side="right"))
        candidates = pools[k]
        if not candidates:
            raise ConfigError("tasks.origin_shares", f"tasks drawn from {ORIGIN_KINDS[k].value} but topology has none")
        unit = candidates[min(int(unit_u[i] * len(candidates)), len(candidates) - 1)]
        tasks.append(Task(
            id=i,
            generation_time=float(gen[i]),
            workload=float(work[i]),
            size=float(size[i]),
            result_size=float(params.result_fraction * size[i]),
            deadline=float(deadline[i]),
            origin=unit.id,
        ))
    return tasks


def expected_totals(params: ScenarioParams) -> tuple[float, float]:
    """Mean total cycles and mean total bits of a generated task set."""
    I = params.task_count
    return I * sum(params.workload_range) / 2.0, I * sum(params.size_range) / 2.0


_COLUMNS = [f.name for f in fields(Task)]


def write_tasks(tasks: list[Task], dest) -> None:
    """Write one task per CSV row; ``dest`` is a path or text stream."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_tasks(tasks, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(_COLUMNS)
    for t in tasks:
        w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(t)])


def read_tasks(src) -> list[Task]:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_tasks(fh)
    rows = list(csv.DictReader(src))
    out = []
    for r in rows:
        out.append(Task(int(r["id"]), float(r["generation_time"]), float(r["workload"]), float(r["size"]),
                        float(r["result_size"]), float(r["deadline"]), int(r["origin"])))
    return out


def tasks_to_csv(tasks: list[Task]) -> str:
    buf = io.StringIO()
    write_tasks(tasks, buf)
    return buf.getvalue()
