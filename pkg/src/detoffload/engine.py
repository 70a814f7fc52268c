"""Slot-based execution of an offloading assignment.

Time advances in fixed slots. Transmissions are store-and-forward over
the hierarchical path; every slot the free resources of each pool are
granted greedily to active transmissions in assignment priority order.
Computing units serve one task at a time, earliest due time first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernel
from .channel import db_to_linear, rate_array
from .config import ChannelParams, EngineParams, ScenarioConfig
from .taskgen import Task
from .topology import LinkDomain, Topology, UnitKind, allowed_targets, route

TRACE_EVENTS = ("grant", "hop", "arrive", "start", "done", "fail")


def processing_time(workload: float, power: float) -> float:
    if power <= 0:
        raise ValueError("processing power must be positive (SNEs cannot process tasks)")
    return workload / power


def transmission_slots(size: float, per_slot_rates: Sequence[float], slot: float = 0.5e-3) -> int | None:
    """Slots needed to push ``size`` bits at the given per-slot rates.

    Returns None when the rates run out (or are all zero) first.
    """
    if size < 0:
        raise ValueError("size must be >= 0")
    if size == 0:
        return 0
    sent = np.cumsum(np.asarray(per_slot_rates, dtype=float) * slot)
    hit = np.nonzero(sent >= size * (1 - _kernel.BIT_TOL))[0]
    return int(hit[0]) + 1 if hit.size else None


@dataclass(frozen=True)
class Assignment:
    """Processing unit and transmission priority rank (1 = first) per task."""

    targets: tuple[int, ...]
    priority: tuple[int, ...]

    @classmethod
    def from_order(cls, targets: Sequence[int], order: Sequence[int]) -> "Assignment":
        rank = [0] * len(order)
        for r, i in enumerate(order):
            rank[int(i)] = r + 1
        return cls(tuple(int(t) for t in targets), tuple(rank))

    @property
    def order(self) -> list[int]:
        """Task ids sorted from highest to lowest priority."""
        return sorted(range(len(self.priority)), key=lambda i: self.priority[i])

    def validate(self, topology: Topology, tasks: Sequence[Task]) -> None:
        if len(self.targets) != len(tasks) or len(self.priority) != len(tasks):
            raise ValueError("assignment length does not match the task set")
        if sorted(self.priority) != list(range(1, len(tasks) + 1)):
            raise ValueError("priority ranks must be a permutation of 1..I")
        for t, x in zip(tasks, self.targets):
            if x not in allowed_targets(topology, t.origin):
                raise ValueError(f"task {t.id}: unit {x} is not a legal target for origin {t.origin}")


@dataclass(frozen=True)
class ExecutionRecord:
    task_id: int
    processing_time: float
    uplink_time: float
    downlink_time: float
    queue_time: float
    total_time: float  # inf when the task missed its due time
    completed_by_deadline: bool
    completion_time: float  # absolute; nan when missed
    processing_start: float
    processing_end: float
    release_time: float  # absolute instant the task stopped holding resources


@dataclass
class ChannelRealization:
    """Cumulative per-resource rates, indexed [link row, slot, resource + 1]."""

    cum1: np.ndarray
    cum2: np.ndarray
    n_slots: int

    def link_rates(self, pool: int, row: int, slot_idx: int) -> np.ndarray:
        cum = self.cum1 if pool == 1 else self.cum2
        return np.diff(cum[row, slot_idx])


def _cum(rates: np.ndarray) -> np.ndarray:
    out = np.zeros(rates.shape[:-1] + (rates.shape[-1] + 1,))
    np.cumsum(rates, axis=-1, out=out[..., 1:])
    return out


def realize_channel(topology: Topology, n_slots: int, rng: np.random.Generator | None,
                    params: ChannelParams | None = None) -> ChannelRealization:
    """Draw i.i.d. per-slot, per-resource Rayleigh fading for every wireless link.

    ``rng`` may be None only when fading is disabled. The unit-mean
    fading draws do not depend on the mean SINRs, so two realizations
    from equal generator states differ only through the SINR scaling.
    """
    params = params or ChannelParams()
    intra = [lk for lk in topology.links if lk.domain is LinkDomain.INTRA]
    parent = [lk for lk in topology.links if lk.domain is LinkDomain.PARENT]
    tables = []
    streams = rng.spawn(2) if (params.fading and rng is not None) else (None, None)
    if params.fading and rng is None:
        raise ValueError("fading enabled but no random generator given")
    for links, pool, stream in ((intra, topology.pool1, streams[0]), (parent, topology.pool2, streams[1])):
        shape = (len(links), n_slots, len(pool))
        bw = pool[0].bandwidth if pool else 1.0
        if params.fading:
            x = stream.standard_exponential(shape)
        else:
            x = np.ones(shape)
        mean = np.array([db_to_linear(lk.mean_sinr_db) for lk in links]).reshape(-1, 1, 1)
        x *= mean
        tables.append(_cum(rate_array(bw, x, params)))
    return ChannelRealization(tables[0], tables[1], n_slots)


class Problem:
    """A topology, a task set and the engine settings, flattened for the kernel."""

    def __init__(self, topology: Topology, tasks: Sequence[Task], config: ScenarioConfig | None = None):
        cfg = config or ScenarioConfig()
        self.topology = topology
        self.tasks = list(tasks)
        self.config = cfg
        self.engine: EngineParams = cfg.engine
        self.slot = cfg.engine.slot
        window = cfg.tasks.horizon + cfg.tasks.deadline_range[1]
        if self.tasks:
            window = max(window, max(t.due for t in self.tasks))
        self.n_slots = int(math.ceil(window / self.slot - 1e-9))
        self.window = self.n_slots * self.slot
        self.M = cfg.penalty.M
        # charged as execution time of a task that never completes
        self.miss_cost = cfg.tasks.horizon + cfg.tasks.deadline_range[1]

        for t in self.tasks:
            t.validate()
        I = len(self.tasks)
        self.gen = np.array([t.generation_time for t in self.tasks], dtype=float)
        self.work = np.array([t.workload for t in self.tasks], dtype=float)
        self.size = np.array([t.size for t in self.tasks], dtype=float)
        self.rsize = np.array([t.result_size for t in self.tasks], dtype=float)
        self.deadline = np.array([t.deadline for t in self.tasks], dtype=float)
        self.due = self.gen + self.deadline
        self.origin = np.array([t.origin for t in self.tasks], dtype=np.int64)

        self.allowed = [allowed_targets(topology, t.origin) for t in self.tasks]
        self.n_allowed = np.array([len(a) for a in self.allowed], dtype=np.int64)
        width = int(self.n_allowed.max()) if I else 1
        self.allowed_tab = np.zeros((I, width), dtype=np.int64)
        for i, a in enumerate(self.allowed):
            self.allowed_tab[i, : len(a)] = a

        U = len(topology.units)
        self.power = np.array([u.processing_power for u in topology.units], dtype=float)
        self.cmax = np.array([u.max_capacity for u in topology.units], dtype=float)
        paths = {(a, b): route(topology, a, b) for a in range(U) for b in range(U)}
        max_hops = max(len(p) for p in paths.values())
        self.path_tab = np.full((U, U, max(max_hops, 1)), -1, dtype=np.int64)
        self.nhops_tab = np.zeros((U, U), dtype=np.int64)
        for (a, b), p in paths.items():
            self.path_tab[a, b, : len(p)] = p
            self.nhops_tab[a, b] = len(p)

        self.link_pool = np.zeros(topology.L, dtype=np.int64)
        self.link_row = np.zeros(topology.L, dtype=np.int64)
        rows = {LinkDomain.INTRA: 0, LinkDomain.PARENT: 0}
        for lk in topology.links:
            if lk.domain is LinkDomain.BACKHAUL:
                self.link_pool[lk.id] = 2
                self.backhaul_rate = float(lk.fixed_rate)
            else:
                self.link_pool[lk.id] = 0 if lk.domain is LinkDomain.INTRA else 1
                self.link_row[lk.id] = rows[lk.domain]
                rows[lk.domain] += 1

    @property
    def I(self) -> int:
        return len(self.tasks)

    def channel(self, rng: np.random.Generator | None) -> ChannelRealization:
        return realize_channel(self.topology, self.n_slots, rng, self.config.channel)

    def decode(self, target_genes: np.ndarray) -> np.ndarray:
        """Map per-task target-gene indices to unit ids (works on populations)."""
        return np.take_along_axis(
            np.broadcast_to(self.allowed_tab, target_genes.shape + (self.allowed_tab.shape[1],)),
            target_genes[..., None], axis=-1)[..., 0]

    def evaluate(self, targets: np.ndarray, orders: np.ndarray, channel: ChannelRealization):
        """Batch-simulate; returns (misses, summed time, Eq.-12 violating units) per row."""
        targets = np.ascontiguousarray(targets, dtype=np.int64)
        orders = np.ascontiguousarray(orders, dtype=np.int64)
        P = targets.shape[0]
        misses = np.zeros(P, dtype=np.int64)
        total = np.zeros(P)
        capv = np.zeros(P, dtype=np.int64)
        if self.I == 0:
            return misses, total, capv
        _kernel.evaluate_population(
            targets, orders, self.gen, self.work, self.size, self.rsize, self.due, self.origin,
            self.path_tab, self.nhops_tab, self.link_pool, self.link_row,
            channel.cum1, channel.cum2, self.backhaul_rate, self.power, self.cmax,
            self.slot, self.n_slots, self.engine.cap_per_task, self.miss_cost,
            misses, total, capv)
        return misses, total, capv


@dataclass
class SimulationResult:
    records: list[ExecutionRecord]
    busy: np.ndarray  # [slot, pool-1/pool-2] granted resources
    violations: dict[str, int]
    trace: list[tuple] = field(default_factory=list)
    slot: float = 0.5e-3


def simulate(topology: Topology, tasks: Sequence[Task], assignment: Assignment,
             rng: np.random.Generator | None = None, *, config: ScenarioConfig | None = None,
             channel: ChannelRealization | None = None, problem: Problem | None = None,
             check: bool | None = None, trace: bool = False) -> SimulationResult:
    """Execute ``assignment`` and return per-task records.

    Fading comes from ``channel`` when given, otherwise it is drawn from
    ``rng``. ``check`` turns on the per-slot exclusivity, link-rate and
    bit-conservation assertions (counted in ``violations``).
    """
    prob = problem or Problem(topology, tasks, config)
    assignment.validate(topology, prob.tasks)
    ch = channel or prob.channel(rng)
    I = prob.I
    check = prob.engine.check if check is None else check

    status = np.zeros(I, dtype=np.int64)
    t_arrive, t_pstart, t_pend, t_done = (np.empty(I) for _ in range(4))
    busy = np.zeros((prob.n_slots, 2), dtype=np.int64)
    viol = np.zeros(3, dtype=np.int64)
    trace_buf = np.zeros(((prob.n_slots + 8) * max(I, 1) * 2 if trace else 1, 7))
    trace_n = np.zeros(1, dtype=np.int64)
    if I:
        _kernel.run_slots(
            prob.gen, prob.work, prob.size, prob.rsize, prob.due, prob.origin,
            np.array(assignment.targets, dtype=np.int64), np.array(assignment.order, dtype=np.int64),
            prob.path_tab, prob.nhops_tab, prob.link_pool, prob.link_row,
            ch.cum1, ch.cum2, prob.backhaul_rate, prob.power, prob.slot, prob.n_slots,
            prob.engine.cap_per_task, check, trace,
            status, t_arrive, t_pstart, t_pend, t_done, busy, viol, trace_buf, trace_n)

    records = []
    for i, t in enumerate(prob.tasks):
        ok = bool(status[i])
        local = prob.nhops_tab[t.origin, assignment.targets[i]] == 0
        up = 0.0 if local else t_arrive[i] - t.generation_time
        records.append(ExecutionRecord(
            task_id=t.id,
            processing_time=float(t_pend[i] - t_pstart[i]),
            uplink_time=float(up),
            downlink_time=float(0.0 if local else t_done[i] - t_pend[i]) if ok else math.nan,
            queue_time=float(t_pstart[i] - t_arrive[i]),
            total_time=float(t_done[i] - t.generation_time) if ok else math.inf,
            completed_by_deadline=ok,
            completion_time=float(t_done[i]) if ok else math.nan,
            processing_start=float(t_pstart[i]),
            processing_end=float(t_pend[i]),
            release_time=float(t_done[i]),
        ))
    rows = []
    if trace:
        n = min(int(trace_n[0]), trace_buf.shape[0])
        for r in trace_buf[:n]:
            rows.append((int(r[0]), TRACE_EVENTS[int(r[1])], int(r[2]), int(r[3]), int(r[4]), int(r[5]), float(r[6])))
    return SimulationResult(
        records=records,
        busy=busy,
        violations={"resource_exclusivity": int(viol[0]), "link_rate": int(viol[1]), "bit_conservation": int(viol[2])},
        trace=rows,
        slot=prob.slot,
    )
