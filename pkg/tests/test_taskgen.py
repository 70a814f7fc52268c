import io

import numpy as np
import pytest
from scipy import stats

from detoffload.config import ConfigError, ScenarioParams
from detoffload.taskgen import expected_totals, generate_tasks, read_tasks, write_tasks
from detoffload.topology import UnitKind, build_topology


@pytest.fixture(scope="module")
def topo():
    return build_topology()


def test_default_ranges(topo):
    tasks = generate_tasks(ScenarioParams(), topo, np.random.default_rng(0))
    assert len(tasks) == 45
    for t in tasks:
        assert 20e6 <= t.workload <= 50e6
        assert 0.75e6 <= t.size <= 2.25e6
        assert 0.020 <= t.deadline <= 0.100
        assert 0 <= t.generation_time <= 0.100
        assert t.result_size == 0.15 * t.size
        t.validate()


def test_large_set_stays_in_range(topo):
    p = ScenarioParams(task_count=100_000)
    tasks = generate_tasks(p, topo, np.random.default_rng(1))
    w = np.array([t.workload for t in tasks])
    s = np.array([t.size for t in tasks])
    d = np.array([t.deadline for t in tasks])
    g = np.array([t.generation_time for t in tasks])
    assert w.min() >= 20e6 and w.max() <= 50e6
    assert s.min() >= 0.75e6 and s.max() <= 2.25e6
    assert d.min() >= 0.02 and d.max() <= 0.1
    assert g.min() >= 0 and g.max() <= 0.1


def test_origin_shares(topo):
    tasks = generate_tasks(ScenarioParams(task_count=10_000), topo, np.random.default_rng(2))
    kinds = [topo.unit(t.origin).kind for t in tasks]
    shares = [kinds.count(k) / len(kinds) for k in (UnitKind.SNE, UnitKind.LC, UnitKind.HC)]
    assert np.allclose(shares, (0.6, 0.2, 0.2), atol=0.02)


def test_deadlines_uniform_ks(topo):
    tasks = generate_tasks(ScenarioParams(task_count=10_000), topo, np.random.default_rng(3))
    d = [t.deadline for t in tasks]
    assert stats.kstest(d, stats.uniform(loc=0.02, scale=0.08).cdf).pvalue > 0.01


def test_reproducible(topo):
    a = generate_tasks(ScenarioParams(), topo, np.random.default_rng(4))
    b = generate_tasks(ScenarioParams(), topo, np.random.default_rng(4))
    assert a == b


def test_smaller_set_is_prefix(topo):
    big = generate_tasks(ScenarioParams(task_count=30), topo, np.random.default_rng(5))
    small = generate_tasks(ScenarioParams(task_count=10), topo, np.random.default_rng(5))
    assert big[:10] == small


def test_rejects_bad_shares(topo):
    with pytest.raises(ConfigError):
        generate_tasks(ScenarioParams(origin_shares=(0.5, 0.2, 0.2)), topo, np.random.default_rng(0))


def test_expected_totals():
    assert expected_totals(ScenarioParams(task_count=45)) == pytest.approx((1.575e9, 45 * 1.5e6))
    assert expected_totals(ScenarioParams(task_count=0)) == (0, 0)
    assert expected_totals(ScenarioParams(task_count=1))[0] == pytest.approx(35e6)


def test_csv_round_trip(topo):
    tasks = generate_tasks(ScenarioParams(task_count=12), topo, np.random.default_rng(6))
    buf = io.StringIO()
    write_tasks(tasks, buf)
    buf.seek(0)
    assert read_tasks(buf) == tasks
