import numpy as np

from detoffload.engine import ChannelRealization, Problem
from detoffload.taskgen import Task
from detoffload.topology import LinkDomain


def constant_channel(problem: Problem, rate: float) -> ChannelRealization:
    """Every resource of every wireless link carries ``rate`` bit/s in every slot."""
    topo = problem.topology
    n1 = sum(lk.domain is LinkDomain.INTRA for lk in topo.links)
    n2 = sum(lk.domain is LinkDomain.PARENT for lk in topo.links)
    S = problem.n_slots
    cum1 = np.broadcast_to(np.arange(topo.K1 + 1) * rate, (n1, S, topo.K1 + 1)).copy()
    cum2 = np.broadcast_to(np.arange(topo.K2 + 1) * rate, (n2, S, topo.K2 + 1)).copy()
    return ChannelRealization(cum1, cum2, S)


def make_task(i, origin, size=1e6, workload=20e6, deadline=0.1, gen=0.0):
    return Task(i, gen, workload, size, 0.15 * size, deadline, origin)


def ids(topo, kind):
    return [u.id for u in topo.of_kind(kind)]


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
