"""Subnetwork, edge and cloud units, their links and the OFDMA resource pools."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .config import ConfigError, TopologyParams


class UnitKind(str, Enum):
    SNE = "SNE"
    LC = "LC"
    HC = "HC"
    EDGE = "Edge"
    CLOUD = "Cloud"


class LinkDomain(str, Enum):
    INTRA = "IntraSubnetwork"
    PARENT = "ToParent"
    BACKHAUL = "EdgeCloudBackhaul"


# pool index used by each link domain; backhaul has none
POOL_OF_DOMAIN = {LinkDomain.INTRA: 1, LinkDomain.PARENT: 2, LinkDomain.BACKHAUL: None}

PROCESSING_KINDS = (UnitKind.LC, UnitKind.HC, UnitKind.EDGE, UnitKind.CLOUD)


@dataclass(frozen=True)
class ComputingUnit:
    id: int
    name: str
    kind: UnitKind
    processing_power: float
    capacity_window: float

    @property
    def max_capacity(self) -> float:
        return self.processing_power * self.capacity_window


@dataclass(frozen=True)
class CommResource:
    index: int
    bandwidth: float
    pool: int


@dataclass(frozen=True)
class Link:
    id: int
    endpoints: tuple[int, int]  # (child, parent)
    domain: LinkDomain
    mean_sinr_db: float
    resource_pool: tuple[CommResource, ...] = ()
    fixed_rate: float | None = None

    @property
    def pool(self) -> int | None:
        return POOL_OF_DOMAIN[self.domain]


@dataclass(frozen=True)
class Topology:
    units: tuple[ComputingUnit, ...]
    links: tuple[Link, ...]
    sne_attachment: dict[int, int]
    pool1: tuple[CommResource, ...]
    pool2: tuple[CommResource, ...]

    # parent_link[u] is the link from u towards the cloud, None at the cloud
    @property
    def parent_link(self) -> dict[int, Link]:
        return {lk.endpoints[0]: lk for lk in self.links}

    def of_kind(self, kind: UnitKind) -> list[ComputingUnit]:
        return [u for u in self.units if u.kind is kind]

    def unit(self, uid: int) -> ComputingUnit:
        return self.units[uid]

    @property
    def hc(self) -> ComputingUnit:
        return self.of_kind(UnitKind.HC)[0]

    @property
    def edge(self) -> ComputingUnit:
        return self.of_kind(UnitKind.EDGE)[0]

    @property
    def cloud(self) -> ComputingUnit:
        return self.of_kind(UnitKind.CLOUD)[0]

    @property
    def n_sne(self) -> int:
        return len(self.of_kind(UnitKind.SNE))

    @property
    def n_lc(self) -> int:
        return len(self.of_kind(UnitKind.LC))

    @property
    def n_hc(self) -> int:
        return len(self.of_kind(UnitKind.HC))

    @property
    def J(self) -> int:
        return self.n_lc + self.n_hc

    @property
    def Q(self) -> int:
        return len(self.of_kind(UnitKind.EDGE))

    @property
    def K1(self) -> int:
        return len(self.pool1)

    @property
    def K2(self) -> int:
        return len(self.pool2)

    @property
    def L(self) -> int:
        return len(self.links)

    def pool_size(self, pool: int) -> int:
        return self.K1 if pool == 1 else self.K2


def build_topology(params: TopologyParams | None = None, capacity_window: float = 0.1) -> Topology:
    """Build the hierarchical SNE -> LC -> HC -> edge -> cloud topology.

    SNEs attach to LC units round-robin by index. One communication
    resource is ``params.resource_bandwidth`` wide; each pool holds as many
    whole resources as fit in its bandwidth.
    """
    p = params or TopologyParams()
    if p.n_hc != 1:
        raise ConfigError("topology.n_hc", "only a single HC unit is supported")
    if p.n_edge != 1:
        raise ConfigError("topology.n_edge", "only a single edge node is supported")
    if p.n_cloud != 1:
        raise ConfigError("topology.n_cloud", "exactly one cloud server is modelled")
    if p.n_lc < 1:
        raise ConfigError("topology.n_lc", "at least one LC unit required")
    if p.n_sne < 0:
        raise ConfigError("topology.n_sne", "must be >= 0")
    for name in ("power_lc", "power_hc", "power_edge", "power_cloud", "resource_bandwidth", "backhaul_rate"):
        if not getattr(p, name) > 0:
            raise ConfigError(f"topology.{name}", "must be > 0")
    for name in ("intra_bandwidth", "parent_bandwidth"):
        if getattr(p, name) < p.resource_bandwidth:
            raise ConfigError(f"topology.{name}", "pool narrower than one communication resource")
    if not capacity_window > 0:
        raise ConfigError("topology.capacity_window", "must be > 0")

    units: list[ComputingUnit] = []

    def add(kind: UnitKind, name: str, power: float) -> int:
        units.append(ComputingUnit(len(units), name, kind, power, capacity_window))
        return len(units) - 1

    sne_ids = [add(UnitKind.SNE, f"SNE_{k}", 0.0) for k in range(p.n_sne)]
    lc_ids = [add(UnitKind.LC, f"LC_{k}", p.power_lc) for k in range(p.n_lc)]
    hc = add(UnitKind.HC, "HC_0", p.power_hc)
    edge = add(UnitKind.EDGE, "Edge_0", p.power_edge)
    cloud = add(UnitKind.CLOUD, "Cloud_0", p.power_cloud)

    # tiny epsilon guards 100e6/360e3 style ratios against float truncation
    k1 = math.floor(p.intra_bandwidth / p.resource_bandwidth + 1e-9)
    k2 = math.floor(p.parent_bandwidth / p.resource_bandwidth + 1e-9)
    pool1 = tuple(CommResource(k, p.resource_bandwidth, 1) for k in range(k1))
    pool2 = tuple(CommResource(k, p.resource_bandwidth, 2) for k in range(k2))

    links: list[Link] = []

    def connect(child: int, parent: int, domain: LinkDomain) -> None:
        if domain is LinkDomain.INTRA:
            links.append(Link(len(links), (child, parent), domain, p.intra_sinr_db, pool1))
        elif domain is LinkDomain.PARENT:
            links.append(Link(len(links), (child, parent), domain, p.parent_sinr_db, pool2))
        else:
            links.append(Link(len(links), (child, parent), domain, math.inf, (), p.backhaul_rate))

    attachment = {}
    for k, s in enumerate(sne_ids):
        attachment[s] = lc_ids[k % len(lc_ids)]
        connect(s, attachment[s], LinkDomain.INTRA)
    for lc in lc_ids:
        connect(lc, hc, LinkDomain.INTRA)
    connect(hc, edge, LinkDomain.PARENT)
    connect(edge, cloud, LinkDomain.BACKHAUL)

    return Topology(tuple(units), tuple(links), attachment, pool1, pool2)


def _ancestry(topo: Topology, uid: int) -> list[tuple[int, Link | None]]:
    """[(uid, link to parent), (parent, ...), ..., (cloud, None)]."""
    up = topo.parent_link
    chain = []
    node = uid
    while True:
        lk = up.get(node)
        chain.append((node, lk))
        if lk is None:
            return chain
        node = lk.endpoints[1]


def route(topo: Topology, src: int, dst: int) -> list[int]:
    """Link ids of the unique hierarchical path from ``src`` to ``dst``."""
    n = len(topo.units)
    if not (0 <= src < n and 0 <= dst < n):
        raise KeyError(f"unknown unit in route({src}, {dst})")
    if src == dst:
        return []
    a = _ancestry(topo, src)
    b = _ancestry(topo, dst)
    b_nodes = [u for u, _ in b]
    up: list[int] = []
    for node, lk in a:
        if node in b_nodes:
            down = [lk2.id for _, lk2 in b[: b_nodes.index(node)]]
            return up + down[::-1]
        up.append(lk.id)
    raise ValueError(f"no hierarchical path between units {src} and {dst}")


def allowed_targets(topo: Topology, origin: int) -> list[int]:
    """Units that may process a task generated at ``origin``, local unit first."""
    u = topo.unit(origin)
    tail = [topo.edge.id, topo.cloud.id]
    if u.kind is UnitKind.SNE:
        return [topo.sne_attachment[origin], topo.hc.id] + tail
    if u.kind is UnitKind.LC:
        return [origin, topo.hc.id] + tail
    if u.kind is UnitKind.HC:
        return [origin] + tail
    raise ValueError(f"{u.name} does not generate tasks")
