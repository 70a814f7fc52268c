import math
from dataclasses import astuple

import numpy as np
import pytest

from conftest import constant_channel, ids, make_task
from detoffload.channel import ber, db_to_linear, resource_rate, select_mcs
from detoffload.config import ScenarioConfig
from detoffload.engine import Assignment, Problem, processing_time, simulate, transmission_slots
from detoffload.experiment import run_seed
from detoffload.taskgen import generate_tasks
from detoffload.topology import UnitKind, build_topology, route

SLOT = 0.5e-3


def test_processing_time_examples():
    assert processing_time(50e6, 2.5e9) == pytest.approx(0.020, rel=1e-15)
    assert processing_time(0, 2.5e9) == 0
    assert processing_time(20e6, 150e9) == pytest.approx(1.3333333333333333e-4, rel=1e-12)


def test_processing_time_rejects_sne():
    with pytest.raises(ValueError):
        processing_time(1e6, 0.0)


def test_transmission_slots_examples():
    assert transmission_slots(0, [1e6]) == 0
    assert transmission_slots(1e6, [4e6] * 1000) == 500
    assert transmission_slots(1e6, [3.588e6] * 1000) == 558
    assert transmission_slots(1e6, [0.0] * 1000) is None


def test_local_task_is_pure_processing():
    topo = build_topology()
    lc = ids(topo, UnitKind.LC)[0]
    task = make_task(0, lc, workload=30e6, gen=0.0123)
    res = simulate(topo, [task], Assignment((lc,), (1,)), np.random.default_rng(0))
    r = res.records[0]
    assert r.uplink_time == 0 and r.downlink_time == 0 and r.queue_time == 0
    assert r.total_time == pytest.approx(30e6 / 2.5e9, rel=1e-12)
    assert r.completed_by_deadline


def test_one_hop_constant_rate_uplink():
    cfg = ScenarioConfig().replace(**{"engine.cap_per_task": 20})
    topo = build_topology(cfg.topology)
    lc = ids(topo, UnitKind.LC)[0]
    task = make_task(0, lc, size=1e6)
    prob = Problem(topo, [task], cfg)
    res = simulate(topo, [task], Assignment((topo.hc.id,), (1,)), problem=prob,
                   channel=constant_channel(prob, 5e6))
    r = res.records[0]
    # 20 resources x 5 Mbit/s = 100 Mbit/s -> 50 kbit per slot -> 20 slots
    assert r.uplink_time == pytest.approx(0.010, abs=1e-12)
    assert r.processing_time == pytest.approx(20e6 / 5e9)
    # 150 kbit result: 3 slots, starting at the first boundary after processing
    assert r.downlink_time == pytest.approx(3 * SLOT, abs=1e-12)


def _single_resource_setup(tasks, priorities):
    cfg = ScenarioConfig().replace(**{"topology.intra_bandwidth": 360e3})
    topo = build_topology(cfg.topology)
    prob = Problem(topo, tasks, cfg)
    a = Assignment(tuple(topo.hc.id for _ in tasks), priorities)
    return simulate(topo, tasks, a, problem=prob, channel=constant_channel(prob, 5e6), check=True)


def test_two_tasks_contend_for_one_resource():
    topo = build_topology()
    lc = ids(topo, UnitKind.LC)[0]
    tasks = [make_task(0, lc, size=0.1e6), make_task(1, lc, size=0.1e6)]
    both = _single_resource_setup(tasks, (1, 2))
    # 2500 bit per slot: 40 slots of uplink each. Task 0 finishes processing at slot 48 and its
    # 6-slot result downlink shares the resource with higher priority, pausing task 1.
    assert both.records[0].uplink_time == pytest.approx(40 * SLOT)
    assert both.records[1].uplink_time == pytest.approx(86 * SLOT)
    swapped = _single_resource_setup(tasks, (2, 1))
    assert swapped.records[1].uplink_time < swapped.records[0].uplink_time
    alone = _single_resource_setup(tasks[:1], (1,))
    single_busy = int((alone.busy[:, 0] > 0).sum())
    assert single_busy == 46
    assert int((both.busy[:, 0] > 0).sum()) == 2 * single_busy
    assert both.violations == {"resource_exclusivity": 0, "link_rate": 0, "bit_conservation": 0}


def _closed_form_rate(db, n):
    g = db_to_linear(db)
    return n * resource_rate(360e3, g, ber(select_mcs(g), g))


@pytest.mark.parametrize("origin_kind, target_kind", [
    (UnitKind.SNE, UnitKind.CLOUD), (UnitKind.SNE, UnitKind.HC), (UnitKind.LC, UnitKind.EDGE),
    (UnitKind.HC, UnitKind.CLOUD), (UnitKind.SNE, UnitKind.LC)])
def test_unfaded_single_task_matches_closed_form(origin_kind, target_kind):
    cfg = ScenarioConfig().replace(**{"channel.fading": False, "topology.parent_sinr_db": 21.0})
    topo = build_topology(cfg.topology)
    origin = topo.of_kind(origin_kind)[0].id
    target = {UnitKind.HC: topo.hc.id, UnitKind.EDGE: topo.edge.id, UnitKind.CLOUD: topo.cloud.id,
              UnitKind.LC: topo.sne_attachment.get(origin)}[target_kind]
    power = topo.unit(target).processing_power
    work = power * 4 * SLOT  # processing ends on a slot boundary
    task = make_task(0, origin, size=1.3e6, workload=work, deadline=0.2)
    res = simulate(topo, [task], Assignment((target,), (1,)), config=cfg)
    r = res.records[0]

    hops = [topo.links[k] for k in route(topo, origin, target)]
    closed = work / power
    for lk in hops:
        rate = lk.fixed_rate or _closed_form_rate(lk.mean_sinr_db, len(lk.resource_pool))
        closed += (task.size + task.result_size) / rate
    assert r.completed_by_deadline
    assert closed - 1e-12 <= r.total_time <= closed + 2 * len(hops) * SLOT + 1e-12


def test_missed_deadline_releases_at_due_time():
    cfg = ScenarioConfig()
    topo = build_topology()
    sne = ids(topo, UnitKind.SNE)[0]
    task = make_task(0, sne, size=2e6, deadline=0.004, gen=0.001)
    res = simulate(topo, [task], Assignment((topo.cloud.id,), (1,)), np.random.default_rng(0), config=cfg)
    r = res.records[0]
    assert not r.completed_by_deadline
    assert math.isinf(r.total_time)
    assert r.release_time == pytest.approx(0.005)


def test_processing_past_deadline_is_cut():
    topo = build_topology()
    lc = ids(topo, UnitKind.LC)[0]
    task = make_task(0, lc, workload=50e6, deadline=0.01)  # needs 20 ms
    r = simulate(topo, [task], Assignment((lc,), (1,)), np.random.default_rng(0)).records[0]
    assert not r.completed_by_deadline
    assert r.release_time == pytest.approx(0.01)


def test_unit_serves_earliest_due_first():
    topo = build_topology()
    lc = ids(topo, UnitKind.LC)[0]
    tasks = [make_task(0, lc, workload=25e6, gen=0.0),  # busy until 10 ms
             make_task(1, lc, workload=5e6, gen=0.001, deadline=0.09),
             make_task(2, lc, workload=5e6, gen=0.002, deadline=0.05)]
    res = simulate(topo, tasks, Assignment((lc, lc, lc), (1, 2, 3)), np.random.default_rng(0))
    r = res.records
    assert r[0].processing_start == 0.0
    assert r[2].processing_start == pytest.approx(0.010)
    assert r[1].processing_start == pytest.approx(0.012)
    assert r[1].queue_time == pytest.approx(0.011)
    assert all(x.completed_by_deadline for x in r)


def test_generation_time_respected():
    topo = build_topology()
    sne = ids(topo, UnitKind.SNE)[0]
    task = make_task(0, sne, gen=0.0301)
    r = simulate(topo, [task], Assignment((topo.sne_attachment[sne],), (1,)), np.random.default_rng(1)).records[0]
    assert r.processing_start >= 0.0301 + 1e-12
    # transmission starts at the next slot boundary (30.5 ms)
    assert r.uplink_time >= 0.0305 - 0.0301 - 1e-12


def test_records_decompose_total_time():
    cfg = ScenarioConfig()
    out = run_seed(cfg.replace(**{"ga.population": 30, "ga.generations": 2}), 3)
    for r, t in zip(out.result.records, out.tasks):
        if r.completed_by_deadline:
            parts = r.uplink_time + r.queue_time + r.processing_time + r.downlink_time
            assert parts == pytest.approx(r.total_time, abs=1e-12)
            assert r.total_time <= t.deadline + 1e-12


def test_simulation_deterministic():
    cfg = ScenarioConfig()
    topo = build_topology()
    tasks = generate_tasks(cfg.tasks, topo, np.random.default_rng(9))
    prob = Problem(topo, tasks, cfg)
    a = Assignment.from_order([al[-1] for al in prob.allowed], range(len(tasks)))
    r1 = simulate(topo, tasks, a, np.random.default_rng(4), problem=prob)
    r2 = simulate(topo, tasks, a, np.random.default_rng(4), problem=prob)
    np.testing.assert_equal([astuple(r) for r in r1.records], [astuple(r) for r in r2.records])
    assert np.array_equal(r1.busy, r2.busy)


def test_invalid_assignment_rejected():
    topo = build_topology()
    hc = topo.hc.id
    task = make_task(0, hc)
    lc = ids(topo, UnitKind.LC)[0]
    with pytest.raises(ValueError):
        simulate(topo, [task], Assignment((lc,), (1,)), np.random.default_rng(0))
    with pytest.raises(ValueError):
        simulate(topo, [task], Assignment((hc,), (2,)), np.random.default_rng(0))


def test_batch_path_matches_record_path():
    cfg = ScenarioConfig()
    topo = build_topology()
    tasks = generate_tasks(cfg.tasks, topo, np.random.default_rng(11))
    prob = Problem(topo, tasks, cfg)
    ch = prob.channel(np.random.default_rng(12))
    rng = np.random.default_rng(13)
    targets = np.array([[rng.choice(a) for a in prob.allowed] for _ in range(5)])
    orders = np.array([rng.permutation(len(tasks)) for _ in range(5)])
    misses, total, _ = prob.evaluate(targets, orders, ch)
    for p in range(5):
        res = simulate(topo, tasks, Assignment.from_order(targets[p], orders[p]), problem=prob, channel=ch)
        assert misses[p] == sum(not r.completed_by_deadline for r in res.records)
        expect = sum(r.total_time if r.completed_by_deadline else prob.miss_cost for r in res.records)
        assert total[p] == pytest.approx(expect, rel=1e-12)


def test_checked_random_runs_have_no_violations():
    cfg = ScenarioConfig().replace(**{"tasks.task_count": 60})
    topo = build_topology()
    for seed in range(5):
        rng = np.random.default_rng(seed)
        tasks = generate_tasks(cfg.tasks, topo, rng)
        prob = Problem(topo, tasks, cfg)
        targets = [rng.choice(a) for a in prob.allowed]
        a = Assignment.from_order(targets, rng.permutation(len(tasks)))
        res = simulate(topo, tasks, a, rng, problem=prob, check=True)
        assert res.violations == {"resource_exclusivity": 0, "link_rate": 0, "bit_conservation": 0}
        assert (res.busy[:, 0] <= topo.K1).all() and (res.busy[:, 1] <= topo.K2).all()


def test_trace_rows():
    topo = build_topology()
    sne = ids(topo, UnitKind.SNE)[0]
    task = make_task(0, sne)
    res = simulate(topo, [task], Assignment((topo.hc.id,), (1,)), np.random.default_rng(0), trace=True)
    events = [row[1] for row in res.trace]
    assert events[0] == "grant"
    assert {"grant", "hop", "arrive", "start", "done"} <= set(events)
    assert events[-1] == "done"
