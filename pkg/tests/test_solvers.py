import numpy as np
import pytest

from conftest import ids, make_task
from detoffload.config import GaParams, ScenarioConfig
from detoffload.engine import Problem
from detoffload.solvers import (
    Chromosome,
    InstanceTooLarge,
    exhaustive_oracle,
    fitness,
    ga_solve,
    oracle_size,
    priority_order,
    random_allocate,
    scores,
)
from detoffload.taskgen import generate_tasks
from detoffload.topology import UnitKind, build_topology

SMALL_GA = GaParams(population=60, generations=6)


def _problem(tasks, **overrides):
    cfg = ScenarioConfig().replace(**overrides) if overrides else ScenarioConfig()
    topo = build_topology(cfg.topology)
    prob = Problem(topo, tasks, cfg)
    return prob, prob.channel(np.random.default_rng(0))


def _random_problem(seed, n_tasks, **overrides):
    cfg = ScenarioConfig().replace(**{"topology.n_sne": 3, "topology.n_lc": 1, "tasks.task_count": n_tasks,
                                      **overrides})
    topo = build_topology(cfg.topology)
    tasks = generate_tasks(cfg.tasks, topo, np.random.default_rng(seed))
    prob = Problem(topo, tasks, cfg)
    return prob, prob.channel(np.random.default_rng(1000 + seed))


def test_priority_order_stable_ties():
    assert priority_order(np.array([0.5, 0.1, 0.5, 0.0])).tolist() == [3, 1, 0, 2]


def test_fitness_examples():
    topo = build_topology()
    lc = ids(topo, UnitKind.LC)[0]
    tasks = [make_task(i, lc, workload=20e6, gen=0.01 * i) for i in range(3)]
    prob, ch = _problem(tasks)
    local = Chromosome(np.zeros(3, dtype=np.int64), np.array([0.1, 0.2, 0.3]))
    assert fitness(local, prob, "deterministic", ch) == 0
    assert fitness(local, prob, "benchmark", ch) == pytest.approx(3 * 20e6 / 2.5e9)


def test_fitness_capacity_and_miss():
    topo = build_topology()
    lc = ids(topo, UnitKind.LC)[0]
    # 7 x 40 Mcycles = 280 > 250 Mcycles; serial 16 ms each, so only the 7th misses 100 ms
    tasks = [make_task(i, lc, workload=40e6) for i in range(7)]
    prob, ch = _problem(tasks)
    chrom = Chromosome(np.zeros(7, dtype=np.int64), np.linspace(0, 0.6, 7))
    assert fitness(chrom, prob, "deterministic", ch) == 200


def test_ga_picks_the_only_feasible_target():
    topo = build_topology()
    task = make_task(0, topo.hc.id, size=2e6, workload=50e6, deadline=0.02)
    prob, ch = _problem([task], **{"topology.parent_sinr_db": -20.0})
    res = ga_solve(prob, GaParams(population=20, generations=3), "deterministic", np.random.default_rng(0), ch)
    assert res.assignment.targets == (topo.hc.id,)
    assert res.fitness == 0


def test_ga_zero_tasks():
    prob, ch = _problem([])
    res = ga_solve(prob, SMALL_GA, "deterministic", np.random.default_rng(0), ch)
    assert res.assignment.targets == () and res.fitness == 0


@pytest.mark.parametrize("objective", ["deterministic", "benchmark"])
def test_ga_trace_monotone(objective):
    prob, ch = _random_problem(3, 12)
    res = ga_solve(prob, SMALL_GA, objective, np.random.default_rng(1), ch)
    best = [b for _, b, _ in res.trace]
    assert len(res.trace) == SMALL_GA.generations + 1
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert res.fitness == best[-1]
    assert res.evaluations == SMALL_GA.population + SMALL_GA.generations * (SMALL_GA.population - 1)


def test_ga_result_is_consistent_with_fitness():
    prob, ch = _random_problem(4, 10)
    res = ga_solve(prob, SMALL_GA, "benchmark", np.random.default_rng(2), ch)
    targets = np.array(res.assignment.targets)[None]
    order = np.array(res.assignment.order)[None]
    assert scores(prob, targets, order, ch, "benchmark")[0] == pytest.approx(res.fitness)


def test_ga_deterministic():
    prob, ch = _random_problem(5, 10)
    a = ga_solve(prob, SMALL_GA, "deterministic", np.random.default_rng(7), ch)
    b = ga_solve(prob, SMALL_GA, "deterministic", np.random.default_rng(7), ch)
    assert a.assignment == b.assignment and a.trace == b.trace


@pytest.mark.parametrize("objective", ["deterministic", "benchmark"])
def test_ga_never_beats_oracle(objective):
    for seed in range(6):
        prob, ch = _random_problem(seed, 4, **{"topology.parent_sinr_db": 3.0})
        oracle = exhaustive_oracle(prob, objective, ch)
        ga = ga_solve(prob, GaParams(population=100, generations=10), objective, np.random.default_rng(seed), ch)
        assert oracle.exact
        assert ga.fitness >= oracle.fitness - 1e-12


def test_oracle_counts():
    topo = build_topology()
    lc = ids(topo, UnitKind.LC)[0]
    prob, ch = _problem([make_task(0, lc)])
    assert oracle_size(prob) == 4
    assert exhaustive_oracle(prob, "benchmark", ch).evaluations == 4
    hc_tasks = [make_task(i, topo.hc.id) for i in range(3)]
    prob, ch = _problem(hc_tasks)
    # three targets each, 3! orders
    assert oracle_size(prob) == 27 * 6
    assert exhaustive_oracle(prob, "deterministic", ch).evaluations == 162


def test_oracle_refuses_large_instances():
    prob, ch = _random_problem(0, 7)
    with pytest.raises(InstanceTooLarge, match="too large"):
        exhaustive_oracle(prob, "deterministic", ch, budget=1000)


def test_oracle_reduced_alphabet_above_seven_tasks():
    prob, ch = _random_problem(1, 8, **{"tasks.origin_shares": (0.0, 0.0, 1.0)})
    res = exhaustive_oracle(prob, "deterministic", ch)
    assert not res.exact
    assert res.evaluations == oracle_size(prob)


def test_random_allocate_uniform_over_targets():
    topo = build_topology()
    prob, _ = _problem([make_task(0, topo.hc.id)])
    rng = np.random.default_rng(0)
    draws = [random_allocate(prob, rng).targets[0] for _ in range(10_000)]
    for u in (topo.hc.id, topo.edge.id, topo.cloud.id):
        assert abs(draws.count(u) / 1e4 - 1 / 3) < 0.02


def test_random_allocate_edge_cases():
    prob, _ = _problem([])
    assert random_allocate(prob, np.random.default_rng(0)).targets == ()
    prob, _ = _random_problem(2, 9)
    a = random_allocate(prob, np.random.default_rng(3))
    assert a == random_allocate(prob, np.random.default_rng(3))
    a.validate(prob.topology, prob.tasks)
