"""Assignment search: genetic algorithm, random baseline and brute-force oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import GaParams
from .engine import Assignment, ChannelRealization, Problem

OBJECTIVES = ("deterministic", "benchmark")


class InstanceTooLarge(RuntimeError):
    pass


@dataclass
class Chromosome:
    target_genes: np.ndarray  # index into the task's allowed targets
    priority_genes: np.ndarray  # reals in [0, 1); lower = earlier

    def decode(self, problem: Problem) -> Assignment:
        targets = problem.decode(self.target_genes)
        return Assignment.from_order(targets, priority_order(self.priority_genes))


def priority_order(genes: np.ndarray) -> np.ndarray:
    """Tasks sorted by priority gene; ties keep task-id order."""
    return np.argsort(genes, axis=-1, kind="stable")


def scores(problem: Problem, targets: np.ndarray, orders: np.ndarray,
           channel: ChannelRealization, objective: str) -> np.ndarray:
    """Fitness (lower is better) for rows of unit-id targets and priority orders.

    Every unit loaded beyond its window capacity adds one penalty ``M``.
    """
    misses, total, capv = problem.evaluate(targets, orders, channel)
    if objective == "deterministic":
        return problem.M * misses + problem.M * capv
    if objective == "benchmark":
        return total + problem.M * capv
    raise ValueError(f"unknown objective {objective!r}")


def fitness(chromosome: Chromosome, problem: Problem, objective: str, channel: ChannelRealization) -> float:
    targets = problem.decode(chromosome.target_genes)[None, :]
    orders = priority_order(chromosome.priority_genes)[None, :]
    return float(scores(problem, targets, orders, channel, objective)[0])


@dataclass
class GaResult:
    assignment: Assignment
    fitness: float
    trace: list[tuple[int, float, float]] = field(default_factory=list)  # (generation, best, mean)
    evaluations: int = 0


def _random_genes(problem: Problem, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    u = rng.random((n, problem.I))
    tg = np.minimum((u * problem.n_allowed).astype(np.int64), problem.n_allowed - 1)
    pg = rng.random((n, problem.I))
    return tg, pg


def ga_solve(problem: Problem, params: GaParams, objective: str, rng: np.random.Generator,
             channel: ChannelRealization) -> GaResult:
    """Tournament selection, one-point crossover, reset mutation, elitism.

    ``channel`` is the one fading realization every chromosome is scored
    on, so fitness differences come from decisions only.
    """
    params.validate()
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    I = problem.I
    if I == 0:
        return GaResult(Assignment((), ()), 0.0, [(g, 0.0, 0.0) for g in range(params.generations + 1)])

    P = params.population
    n_elite = min(P, max(1, int(math.ceil(params.elite_fraction * P))))

    def evaluate(tg, pg):
        return scores(problem, problem.decode(tg), priority_order(pg), channel, objective)

    tg, pg = _random_genes(problem, rng, P)
    fit = evaluate(tg, pg)
    evaluations = P
    trace = [(0, float(fit.min()), float(fit.mean()))]

    for gen in range(1, params.generations + 1):
        elite = np.argsort(fit, kind="stable")[:n_elite]
        n_child = P - n_elite

        contenders = rng.integers(0, P, size=(2 * n_child, params.tournament_size))
        winners = contenders[np.arange(2 * n_child), np.argmin(fit[contenders], axis=1)]
        pa, pb = winners[:n_child], winners[n_child:]

        ctg, cpg = tg[pa].copy(), pg[pa].copy()
        if I > 1:
            do_cross = rng.random(n_child) < params.crossover_prob
            cut = rng.integers(1, I, size=n_child)
            tail = (np.arange(I)[None, :] >= cut[:, None]) & do_cross[:, None]
            ctg = np.where(tail, tg[pb], ctg)
            cpg = np.where(tail, pg[pb], cpg)

        mt = rng.random((n_child, I)) < params.mutation_prob
        mp = rng.random((n_child, I)) < params.mutation_prob
        new_tg, new_pg = _random_genes(problem, rng, n_child)
        ctg = np.where(mt, new_tg, ctg)
        cpg = np.where(mp, new_pg, cpg)

        cfit = evaluate(ctg, cpg)
        evaluations += n_child
        tg = np.concatenate([tg[elite], ctg])
        pg = np.concatenate([pg[elite], cpg])
        fit = np.concatenate([fit[elite], cfit])
        trace.append((gen, float(fit.min()), float(fit.mean())))

    best = int(np.argmin(fit))
    chrom = Chromosome(tg[best], pg[best])
    return GaResult(chrom.decode(problem), float(fit[best]), trace, evaluations)


def random_allocate(problem: Problem, rng: np.random.Generator) -> Assignment:
    """Uniform target among the legal ones and a uniformly random priority order."""
    if problem.I == 0:
        return Assignment((), ())
    tg, pg = _random_genes(problem, rng, 1)
    return Chromosome(tg[0], pg[0]).decode(problem)


def reduced_orders(problem: Problem) -> list[tuple[int, ...]]:
    """Earliest-due-first, generation order and reversed generation order."""
    edf = tuple(int(i) for i in np.argsort(problem.due, kind="stable"))
    fifo = tuple(int(i) for i in np.argsort(problem.gen, kind="stable"))
    out = []
    for o in (edf, fifo, fifo[::-1]):
        if o not in out:
            out.append(o)
    return out


@dataclass
class OracleResult:
    assignment: Assignment
    fitness: float
    evaluations: int
    exact: bool  # False when priorities came from the reduced alphabet


FULL_PERMUTATION_LIMIT = 7


def oracle_size(problem: Problem) -> int:
    combos = int(np.prod(problem.n_allowed)) if problem.I else 1
    perms = math.factorial(problem.I) if problem.I <= FULL_PERMUTATION_LIMIT else len(reduced_orders(problem))
    return combos * perms


def exhaustive_oracle(problem: Problem, objective: str, channel: ChannelRealization,
                      budget: int = 1_000_000, batch: int = 20_000) -> OracleResult:
    """Score every target combination under every priority order and keep the best.

    Above seven tasks only the three reduced orders are tried and the
    result is flagged as not exact.
    """
    I = problem.I
    if I == 0:
        return OracleResult(Assignment((), ()), 0.0, 1, True)
    total = oracle_size(problem)
    if total > budget:
        raise InstanceTooLarge(f"instance too large: {total} evaluations exceed budget {budget}")
    exact = I <= FULL_PERMUTATION_LIMIT
    orders = (list(itertools.permutations(range(I))) if exact else reduced_orders(problem))
    orders = np.array(orders, dtype=np.int64)
    combos = np.array(list(itertools.product(*problem.allowed)), dtype=np.int64)

    best_fit = math.inf
    best = None
    n_o = len(orders)
    flat = itertools.product(range(len(combos)), range(n_o))
    while True:
        chunk = list(itertools.islice(flat, batch))
        if not chunk:
            break
        idx = np.array(chunk)
        f = scores(problem, combos[idx[:, 0]], orders[idx[:, 1]], channel, objective)
        k = int(np.argmin(f))
        if f[k] < best_fit:
            best_fit = float(f[k])
            best = (combos[idx[k, 0]], orders[idx[k, 1]])
    return OracleResult(Assignment.from_order(best[0], best[1]), best_fit, total, exact)
