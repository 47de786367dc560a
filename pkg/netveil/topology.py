"""Layer-3 topology extraction, degree sequences and the K-S rationality metric.

A Topology wraps an undirected ``networkx.Graph`` whose nodes carry a ``kind``
attribute (``router`` or ``host``). Router-to-router edges may carry the link
subnet and the interface used at each end.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from ipaddress import IPv4Address
from pathlib import Path
from typing import Iterable

import networkx as nx
from pydantic import BaseModel, Field, computed_field
from scipy import stats

from .errors import AmbiguousSubnet, EmptySequence, OrphanHost
from .parsers import cisco
from .snapshot import NetworkSnapshot

logger = logging.getLogger(__name__)

ROUTER = "router"
HOST = "host"


class Topology:
    """Router/host graph with AS membership."""

    def __init__(self, graph: nx.Graph | None = None, name: str = ""):
        self.graph = graph if graph is not None else nx.Graph()
        self.name = name
        self.as_of: dict[str, int] = {}

    # --- construction ---

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], nodes: Iterable[str] = (), name: str = "") -> Topology:
        topo = cls(name=name)
        for node in nodes:
            topo.add_router(node)
        for u, v in edges:
            topo.add_router(u)
            topo.add_router(v)
            topo.graph.add_edge(u, v)
        return topo

    @classmethod
    def from_graph(cls, graph: nx.Graph, name: str = "") -> Topology:
        """Treat every node of a plain graph as a router (reference topologies)."""
        simple = nx.Graph()
        simple.add_nodes_from(str(n) for n in graph.nodes)
        simple.add_edges_from((str(u), str(v)) for u, v in graph.edges if u != v)
        nx.set_node_attributes(simple, ROUTER, "kind")
        return cls(simple, name=name)

    def add_router(self, node: str, asn: int | None = None) -> None:
        if node not in self.graph:
            self.graph.add_node(node, kind=ROUTER)
        if asn is not None:
            self.as_of[node] = asn

    def add_host(self, node: str, gateway: str) -> None:
        self.graph.add_node(node, kind=HOST)
        self.graph.add_edge(node, gateway)

    def add_edge(self, u: str, v: str, **attrs) -> None:
        if u == v:
            raise ValueError(f"self-loop on {u}")
        self.graph.add_edge(u, v, **attrs)

    def copy(self) -> Topology:
        other = Topology(self.graph.copy(), name=self.name)
        other.as_of = dict(self.as_of)
        return other

    # --- queries ---

    def kind(self, node: str) -> str:
        return self.graph.nodes[node].get("kind", ROUTER)

    @property
    def routers(self) -> list[str]:
        return sorted(n for n in self.graph.nodes if self.kind(n) == ROUTER)

    @property
    def hosts(self) -> list[str]:
        return sorted(n for n in self.graph.nodes if self.kind(n) == HOST)

    def router_graph(self) -> nx.Graph:
        return self.graph.subgraph(self.routers)

    def router_edges(self) -> set[frozenset[str]]:
        return {frozenset(e) for e in self.router_graph().edges}

    def degree(self, node: str) -> int:
        """Router degree: number of adjacent routers."""
        return sum(1 for n in self.graph.neighbors(node) if self.kind(n) == ROUTER)

    def gateway(self, host: str) -> str:
        return next(iter(self.graph.neighbors(host)))

    def has_edge(self, u: str, v: str) -> bool:
        return self.graph.has_edge(u, v)

    def link(self, u: str, v: str) -> dict:
        return self.graph.edges[u, v]

    def asns(self) -> list[int]:
        return sorted(set(self.as_of.values()))

    def as_members(self, asn: int) -> list[str]:
        return sorted(r for r in self.routers if self.as_of.get(r) == asn)

    def __len__(self) -> int:
        return len(self.routers)

    def __repr__(self) -> str:
        return f"Topology({self.name!r}, routers={len(self.routers)}, edges={len(self.router_edges())})"


class DegreeSequence(BaseModel):
    values: list[int] = Field(default_factory=list)

    @computed_field
    @property
    def sorted_desc(self) -> list[int]:
        return sorted(self.values, reverse=True)

    def __len__(self) -> int:
        return len(self.values)


class RationalityScore(BaseModel):
    ks_distance: float = Field(ge=0.0, le=1.0)
    reference_name: str = ""


# --- operations ---


def extract_topology(snapshot: NetworkSnapshot) -> Topology:
    """Build the Layer-3 graph of a snapshot.

    Two routers are adjacent iff they own up interfaces in the same subnet.
    Hosts attach to their gateway router.

    Raises:
        AmbiguousSubnet: three or more routers share a subnet
        OrphanHost: a host's gateway router is missing or does not own the gateway IP
    """
    topo = Topology(name="snapshot")
    by_subnet: dict = defaultdict(list)
    for name in snapshot.routers:
        topo.add_router(name)
        for iface in cisco.interfaces(snapshot.configs[name]):
            if iface.up and iface.network is not None:
                by_subnet[iface.network].append((name, iface.name, iface.ip))

    for subnet in sorted(by_subnet, key=lambda n: (int(n.network_address), n.prefixlen)):
        owners = by_subnet[subnet]
        routers = sorted({owner[0] for owner in owners})
        if len(routers) > 2:
            raise AmbiguousSubnet(f"{subnet} is shared by {', '.join(routers)}")
        if len(routers) == 2:
            ends = {owner[0]: (owner[1], owner[2]) for owner in owners}
            a, b = routers
            topo.add_edge(
                a,
                b,
                subnet=str(subnet),
                ifaces={a: ends[a][0], b: ends[b][0]},
                ips={a: ends[a][1], b: ends[b][1]},
            )

    for host_name in snapshot.host_names:
        host = snapshot.hosts[host_name]
        if host.gateway_router not in snapshot.configs:
            raise OrphanHost(f"{host_name}: unknown gateway router {host.gateway_router!r}")
        owned = [
            i for i in cisco.interfaces(snapshot.configs[host.gateway_router])
            if i.up and i.ip == host.gateway_ip
        ]
        if not owned or IPv4Address(host.iface_ip) not in owned[0].network:
            raise OrphanHost(f"{host_name}: {host.gateway_router} does not own {host.gateway_ip}")
        topo.add_host(host_name, host.gateway_router)

    topo.as_of = _as_membership(snapshot, topo)
    logger.debug(f"Extracted topology: {topo}")
    return topo


def _as_membership(snapshot: NetworkSnapshot, topo: Topology) -> dict[str, int]:
    """BGP speakers take their ASN; other routers inherit it over OSPF adjacencies."""
    asn: dict[str, int] = {}
    for name in snapshot.routers:
        process = cisco.bgp(snapshot.configs[name])
        if process is not None:
            asn[name] = process.asn

    igp = nx.Graph()
    for name in snapshot.routers:
        igp.add_node(name)
    for u, v in topo.router_graph().edges:
        if _ospf_on_link(snapshot, topo, u, v):
            igp.add_edge(u, v)

    for component in nx.connected_components(igp):
        speakers = sorted({asn[r] for r in component if r in asn})
        for router in component:
            if router not in asn:
                asn[router] = speakers[0] if speakers else 0
    return asn


def _ospf_on_link(snapshot: NetworkSnapshot, topo: Topology, u: str, v: str) -> bool:
    link = topo.link(u, v)
    for router in (u, v):
        process = cisco.ospf(snapshot.configs[router])
        if process is None or not process.enabled_on(link["ips"][router]):
            return False
    return True


def degree_sequence(t: Topology, routers_only: bool = True) -> DegreeSequence:
    if routers_only:
        return DegreeSequence(values=[t.degree(r) for r in t.routers])
    return DegreeSequence(values=[d for _, d in sorted(t.graph.degree)])


def ks_distance(a: DegreeSequence, b: DegreeSequence) -> float:
    """Two-sample Kolmogorov-Smirnov statistic between degree sequences.

    Raises:
        EmptySequence: either sequence is empty
    """
    if not a.values or not b.values:
        raise EmptySequence("K-S distance needs two non-empty degree sequences")
    return float(stats.ks_2samp(a.values, b.values).statistic)


def rationality(anonym: Topology, reference: Topology) -> RationalityScore:
    distance = ks_distance(degree_sequence(anonym), degree_sequence(reference))
    return RationalityScore(ks_distance=distance, reference_name=reference.name)


# --- GraphML reference corpus ---


def load_graphml(path: Path | str) -> Topology:
    """Read a GraphML file as a router-only topology; attributes are ignored."""
    path = Path(path)
    graph = nx.read_graphml(path)
    return Topology.from_graph(nx.Graph(graph), name=path.stem)


def load_library(directory: Path | str) -> list[Topology]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Reference directory not found: {directory}")
    library = [load_graphml(file) for file in sorted(directory.glob("*.graphml"))]
    logger.info(f"Loaded {len(library)} reference topologies from {directory}")
    return library

