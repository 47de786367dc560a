"""Control-plane simulator: connected, static, OSPF and BGP routes to FIBs,
then host-to-host traceroute over the FIBs.

The simulator is the verification oracle for repair and functional
equivalence. It is deterministic: identical snapshots give identical FIBs.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from enum import Enum
from ipaddress import IPv4Address, IPv4Network

import networkx as nx
from pydantic import BaseModel, Field

from .config import (
    DEFAULT_OSPF_COST,
    REPORT_SCHEMA,
    TRACE_MAX_BRANCHES,
    TRACE_MAX_HOPS,
)
from .errors import LoopDetected, NoRoute, SessionMismatch
from .parsers import cisco
from .parsers.schema import BgpNeighbor, InterfaceConfig, RouterConfig
from .parsers.utils import is_ipv4
from .snapshot import NetworkSnapshot
from .topology import Topology, extract_topology

logger = logging.getLogger(__name__)

NextHop = tuple[str, str]
Path = tuple[str, ...]


class Protocol(str, Enum):
    CONNECTED = "connected"
    STATIC = "static"
    OSPF = "ospf"
    OSPF_EXTERNAL = "ospf-external"
    EBGP = "ebgp"
    IBGP = "ibgp"


ADMIN_DISTANCE = {
    Protocol.CONNECTED: 0,
    Protocol.STATIC: 1,
    Protocol.EBGP: 20,
    Protocol.OSPF: 110,
    Protocol.OSPF_EXTERNAL: 110,
    Protocol.IBGP: 200,
}

# equal admin distance: intra-area OSPF beats external
_PROTOCOL_RANK = {
    Protocol.CONNECTED: 0,
    Protocol.STATIC: 1,
    Protocol.EBGP: 2,
    Protocol.OSPF: 3,
    Protocol.OSPF_EXTERNAL: 4,
    Protocol.IBGP: 5,
}

EXTERNAL_METRIC = 20
IGP_PROTOCOLS = frozenset({Protocol.CONNECTED, Protocol.STATIC, Protocol.OSPF, Protocol.OSPF_EXTERNAL})


def prefix_key(prefix: str) -> tuple[int, int]:
    network = IPv4Network(prefix)
    return int(network.network_address), network.prefixlen


class Route(BaseModel):
    prefix: str
    protocol: Protocol
    admin_distance: int
    metric: int = 0
    next_hops: list[NextHop] = Field(description="(neighbor router or '', outgoing interface)")
    as_path: list[int] = Field(default_factory=list)
    learned_from: str | None = None
    bgp_next_hop: str | None = None

    @property
    def preference(self) -> tuple[int, int, int]:
        return self.admin_distance, _PROTOCOL_RANK[self.protocol], self.metric

    def to_dict(self) -> dict:
        data = {
            "prefix": self.prefix,
            "protocol": self.protocol.value,
            "admin_distance": self.admin_distance,
            "metric": self.metric,
            "next_hops": [list(hop) for hop in self.next_hops],
        }
        if self.as_path:
            data["as_path"] = self.as_path
        if self.learned_from is not None:
            data["learned_from"] = self.learned_from
        if self.bgp_next_hop is not None:
            data["bgp_next_hop"] = self.bgp_next_hop
        return data

    @classmethod
    def from_dict(cls, data: dict) -> Route:
        return cls(
            prefix=data["prefix"],
            protocol=Protocol(data["protocol"]),
            admin_distance=data["admin_distance"],
            metric=data.get("metric", 0),
            next_hops=[tuple(hop) for hop in data["next_hops"]],
            as_path=data.get("as_path", []),
            learned_from=data.get("learned_from"),
            bgp_next_hop=data.get("bgp_next_hop"),
        )


RouteTable = dict[str, Route]


def _offer(table: RouteTable, route: Route) -> None:
    current = table.get(route.prefix)
    if current is None or route.preference < current.preference:
        table[route.prefix] = route


class Fib:
    """Best route per prefix with longest-prefix-match lookup."""

    def __init__(self, router: str, routes: RouteTable):
        self.router = router
        self.routes: RouteTable = {p: routes[p] for p in sorted(routes, key=prefix_key)}
        self._by_length: dict[int, dict[int, Route]] = defaultdict(dict)
        for prefix, route in self.routes.items():
            network = IPv4Network(prefix)
            self._by_length[network.prefixlen][int(network.network_address)] = route
        self._lengths = sorted(self._by_length, reverse=True)

    def lookup(self, ip: str | IPv4Address) -> Route | None:
        address = int(IPv4Address(str(ip)))
        for length in self._lengths:
            mask = (0xFFFFFFFF << (32 - length)) & 0xFFFFFFFF
            route = self._by_length[length].get(address & mask)
            if route is not None:
                return route
        return None

    def get(self, prefix: str) -> Route | None:
        return self.routes.get(prefix)

    def to_list(self) -> list[dict]:
        return [route.to_dict() for route in self.routes.values()]


class ScostTable(BaseModel):
    """Shortest costs and predecessor sets from one source router."""

    source: str
    scost: dict[str, int] = Field(default_factory=dict)
    preds: dict[str, list[str]] = Field(default_factory=dict)


class DataPlane(BaseModel):
    paths: dict[tuple[str, str], list[Path]] = Field(default_factory=dict)
    errors: dict[tuple[str, str], str] = Field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "paths": {f"{s}->{d}": [list(p) for p in paths] for (s, d), paths in sorted(self.paths.items())},
            "errors": {f"{s}->{d}": err for (s, d), err in sorted(self.errors.items())},
        }


class BgpPath(BaseModel):
    prefix: str
    as_path: tuple[int, ...] = ()
    next_hop: str | None = None
    peer: str | None = None
    peer_router_id: int = 0
    ebgp: bool = False
    local: bool = False

    def rank(self) -> tuple:
        distance = ADMIN_DISTANCE[Protocol.EBGP] if self.ebgp else ADMIN_DISTANCE[Protocol.IBGP]
        return (0 if self.local else 1, distance, len(self.as_path), self.peer_router_id, self.peer or "")


class Session(BaseModel):
    """One direction of a BGP session: ``local`` exports to ``remote``."""

    local: str
    remote: str
    local_ip: str
    remote_ip: str
    ebgp: bool
    neighbor: BgpNeighbor


class OspfDomain(BaseModel):
    """A connected OSPF adjacency component."""

    routers: list[str]
    links: dict[tuple[str, str], int] = Field(description="Directed (u, v) -> cost of u's interface")
    stubs: dict[str, dict[str, int]] = Field(description="router -> prefix -> interface cost")

    def digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.routers)
        for (u, v), cost in sorted(self.links.items()):
            graph.add_edge(u, v, cost=cost)
        return graph


class RouterView:
    """Pre-parsed views of one router config."""

    def __init__(self, cfg: RouterConfig):
        self.name = cfg.hostname
        self.interfaces: list[InterfaceConfig] = [
            i for i in cisco.interfaces(cfg) if i.up and i.network is not None
        ]
        self.ospf = cisco.ospf(cfg)
        self.bgp = cisco.bgp(cfg)
        self.statics = cisco.static_routes(cfg)
        self.policies = cisco.policies(cfg)
        self.router_id = int(IPv4Address(cisco.router_id(cfg)))
        self._warn_undefined_filters()

    def _warn_undefined_filters(self) -> None:
        if self.bgp is None:
            return
        for neighbor in self.bgp.neighbors.values():
            for name, table in (
                (neighbor.route_map_in, self.policies.route_maps),
                (neighbor.route_map_out, self.policies.route_maps),
                (neighbor.prefix_list_in, self.policies.prefix_lists),
                (neighbor.prefix_list_out, self.policies.prefix_lists),
                (neighbor.distribute_list_in, self.policies.acls),
                (neighbor.distribute_list_out, self.policies.acls),
            ):
                if name is not None and name not in table:
                    logger.warning(f"{self.name}: filter {name} referenced by neighbor {neighbor.key} is undefined")

    def interface(self, name: str) -> InterfaceConfig | None:
        for iface in self.interfaces:
            if iface.name == name:
                return iface
        return None

    def interface_for(self, ip: str) -> InterfaceConfig | None:
        address = IPv4Address(ip)
        for iface in self.interfaces:
            if address in iface.network:
                return iface
        return None

    def ospf_interfaces(self) -> list[InterfaceConfig]:
        if self.ospf is None:
            return []
        return [i for i in self.interfaces if self.ospf.enabled_on(i.ip)]

    def cost(self, iface: InterfaceConfig) -> int:
        return iface.ospf_cost or DEFAULT_OSPF_COST

    def distribute_in_permits(self, binding_lists, prefix: str, interface: str | None = None) -> bool:
        network = IPv4Network(prefix)
        for binding in binding_lists:
            if binding.direction != "in":
                continue
            if binding.interface is not None and interface is not None and binding.interface != interface:
                continue
            if binding.interface is not None and interface is None:
                continue
            kwargs = {"prefix_list": binding.target} if binding.is_prefix_list else {"acl": binding.target}
            if not self.policies.permits(network, **kwargs):
                return False
        return True


class Simulation:
    """Result of simulating a snapshot."""

    def __init__(self, snapshot: NetworkSnapshot):
        self.snapshot = snapshot
        self.topology: Topology = extract_topology(snapshot)
        self.views = {name: RouterView(snapshot.configs[name]) for name in snapshot.routers}
        self.owner: dict[str, tuple[str, str]] = {}
        for name, view in self.views.items():
            for iface in view.interfaces:
                self.owner[iface.ip] = (name, iface.name)
        self.domains: list[OspfDomain] = []
        self.ospf_tables: dict[str, ScostTable] = {}
        self.sessions: dict[tuple[str, str], Session] = {}
        self.bgp_best: dict[str, dict[str, BgpPath]] = {}
        self.fibs: dict[str, Fib] = {}

    def neighbor_on(self, router: str, iface: str) -> str:
        """Router at the other end of a point-to-point interface, or ''."""
        for nbr in self.topology.graph.neighbors(router):
            if self.topology.kind(nbr) != "router":
                continue
            if self.topology.link(router, nbr)["ifaces"][router] == iface:
                return nbr
        return ""


# --- OSPF ---


def ospf_domains(sim: Simulation) -> list[OspfDomain]:
    adjacency = nx.Graph()
    for name, view in sim.views.items():
        if view.ospf is not None:
            adjacency.add_node(name)
    links: dict[tuple[str, str], int] = {}
    for u, v in sorted(tuple(sorted(e)) for e in sim.topology.router_graph().edges):
        if u not in adjacency or v not in adjacency:
            continue
        link = sim.topology.link(u, v)
        ends = []
        for router in (u, v):
            view = sim.views[router]
            iface = view.interface(link["ifaces"][router])
            if iface is None or not view.ospf.enabled_on(iface.ip) or iface.name in view.ospf.passive_interfaces:
                break
            ends.append((router, iface))
        if len(ends) != 2:
            continue
        adjacency.add_edge(u, v)
        (a, ia), (b, ib) = ends
        links[(a, b)] = sim.views[a].cost(ia)
        links[(b, a)] = sim.views[b].cost(ib)

    domains = []
    for component in sorted(nx.connected_components(adjacency), key=lambda c: sorted(c)):
        members = sorted(component)
        stubs = {
            r: {str(i.network): sim.views[r].cost(i) for i in sim.views[r].ospf_interfaces()}
            for r in members
        }
        domain_links = {(a, b): c for (a, b), c in links.items() if a in component}
        domains.append(OspfDomain(routers=members, links=domain_links, stubs=stubs))
    return domains


def spf(graph: nx.DiGraph, source: str) -> ScostTable:
    """Dijkstra from ``source`` keeping every equal-cost predecessor."""
    pred, dist = nx.dijkstra_predecessor_and_distance(graph, source, weight="cost")
    return ScostTable(
        source=source,
        scost={v: int(d) for v, d in sorted(dist.items())},
        preds={v: sorted(p) for v, p in sorted(pred.items())},
    )


def first_hops(table: ScostTable) -> dict[str, set[str]]:
    """Neighbors of the source that start a shortest path to each node."""
    hops: dict[str, set[str]] = {table.source: set()}
    for node in sorted(table.scost, key=lambda v: (table.scost[v], v)):
        if node == table.source:
            continue
        found: set[str] = set()
        for p in table.preds[node]:
            found |= {node} if p == table.source else hops[p]
        hops[node] = found
    return hops


def compute_ospf(
    domain: OspfDomain, sim: Simulation | None = None
) -> tuple[dict[str, ScostTable], dict[str, RouteTable]]:
    """SPF from every router of a domain; returns tables and OSPF routes.

    A prefix is reached through the advertisers minimizing
    scost(advertiser) + stub cost; next hops are the first hops of every
    shortest path. ``sim`` supplies interface names and distribute-lists.
    """
    graph = domain.digraph()
    tables = {r: spf(graph, r) for r in domain.routers}
    advertisers: dict[str, dict[str, int]] = defaultdict(dict)
    for router, stubs in domain.stubs.items():
        for prefix, cost in stubs.items():
            advertisers[prefix][router] = cost

    routes: dict[str, RouteTable] = {}
    for source in domain.routers:
        table = tables[source]
        hops = first_hops(table)
        own: RouteTable = {}
        for prefix in sorted(advertisers, key=prefix_key):
            origins = advertisers[prefix]
            if source in origins:
                continue
            reachable = {a: table.scost[a] + c for a, c in origins.items() if a in table.scost}
            if not reachable:
                continue
            best = min(reachable.values())
            neighbors = set()
            for a, total in reachable.items():
                if total == best:
                    neighbors |= hops[a]
            next_hops = _hops_with_interfaces(sim, source, neighbors)
            if sim is not None:
                view = sim.views[source]
                next_hops = [
                    hop for hop in next_hops
                    if view.distribute_in_permits(view.ospf.distribute_lists, prefix)
                    and view.distribute_in_permits(view.ospf.distribute_lists, prefix, hop[1])
                ]
            if not next_hops:
                continue
            own[prefix] = Route(
                prefix=prefix,
                protocol=Protocol.OSPF,
                admin_distance=ADMIN_DISTANCE[Protocol.OSPF],
                metric=best,
                next_hops=next_hops,
            )
        routes[source] = own
    return tables, routes


def _hops_with_interfaces(sim: Simulation | None, router: str, neighbors: set[str]) -> list[NextHop]:
    if sim is None:
        return sorted((n, "") for n in neighbors)
    return sorted((n, sim.topology.link(router, n)["ifaces"][router]) for n in neighbors)


def _external_routes(
    sim: Simulation,
    domain: OspfDomain,
    exported: dict[str, set[str]],
) -> dict[str, RouteTable]:
    """OSPF external routes for prefixes redistributed by ASBRs of the domain."""
    by_prefix: dict[str, set[str]] = defaultdict(set)
    for asbr, prefixes in exported.items():
        for prefix in prefixes:
            by_prefix[prefix].add(asbr)
    routes: dict[str, RouteTable] = {}
    for source in domain.routers:
        table = sim.ospf_tables[source]
        hops = first_hops(table)
        view = sim.views[source]
        own: RouteTable = {}
        for prefix in sorted(by_prefix, key=prefix_key):
            asbrs = {a: table.scost[a] for a in by_prefix[prefix] if a in table.scost and a != source}
            if not asbrs or source in by_prefix[prefix]:
                continue
            nearest = min(asbrs.values())
            neighbors = set()
            for a, distance in asbrs.items():
                if distance == nearest:
                    neighbors |= hops[a]
            next_hops = [
                hop for hop in _hops_with_interfaces(sim, source, neighbors)
                if view.distribute_in_permits(view.ospf.distribute_lists, prefix)
                and view.distribute_in_permits(view.ospf.distribute_lists, prefix, hop[1])
            ]
            if next_hops:
                own[prefix] = Route(
                    prefix=prefix,
                    protocol=Protocol.OSPF_EXTERNAL,
                    admin_distance=ADMIN_DISTANCE[Protocol.OSPF_EXTERNAL],
                    metric=EXTERNAL_METRIC,
                    next_hops=next_hops,
                )
        routes[source] = own
    return routes


# --- connected / static ---


def _connected(sim: Simulation, router: str) -> RouteTable:
    table: RouteTable = {}
    for iface in sim.views[router].interfaces:
        _offer(table, Route(
            prefix=str(iface.network),
            protocol=Protocol.CONNECTED,
            admin_distance=ADMIN_DISTANCE[Protocol.CONNECTED],
            next_hops=[("", iface.name)],
        ))
    return table


def _static(sim: Simulation, router: str) -> RouteTable:
    view = sim.views[router]
    table: RouteTable = {}
    for static in view.statics:
        target = static.next_hop
        if target.lower() == "null0":
            hops = [("", "Null0")]
        elif is_ipv4(target):
            iface = view.interface_for(target)
            if iface is None:
                logger.warning(f"{router}: static route {static.prefix} via unconnected {target} ignored")
                continue
            owner = sim.owner.get(target, ("", ""))[0]
            hops = [(owner, iface.name)]
        else:
            iface = view.interface(target)
            if iface is None:
                logger.warning(f"{router}: static route {static.prefix} via unknown interface {target} ignored")
                continue
            hops = [(sim.neighbor_on(router, iface.name), iface.name)]
        _offer(table, Route(
            prefix=static.prefix,
            protocol=Protocol.STATIC,
            admin_distance=static.distance,
            next_hops=hops,
        ))
    return table


def _merge(*tables: RouteTable) -> RouteTable:
    merged: RouteTable = {}
    for table in tables:
        for route in table.values():
            _offer(merged, route)
    return merged


# --- BGP ---


def bgp_sessions(sim: Simulation, rib: dict[str, RouteTable]) -> dict[tuple[str, str], Session]:
    """Established sessions, keyed (exporter, importer).

    Raises:
        SessionMismatch: a neighbor's remote-as disagrees with the peer's ASN
    """
    sessions: dict[tuple[str, str], Session] = {}
    for a, view in sim.views.items():
        if view.bgp is None:
            continue
        for peer_ip in sorted(view.bgp.peer_ips()):
            neighbor = view.bgp.resolve(peer_ip)
            if neighbor is None or peer_ip not in sim.owner:
                logger.debug(f"{a}: BGP neighbor {peer_ip} has no owner")
                continue
            b = sim.owner[peer_ip][0]
            peer_view = sim.views[b]
            if peer_view.bgp is None:
                logger.debug(f"{a}: BGP neighbor {peer_ip} ({b}) runs no BGP")
                continue
            if neighbor.remote_as != peer_view.bgp.asn:
                raise SessionMismatch(
                    f"{a} expects AS {neighbor.remote_as} at {peer_ip}, {b} is AS {peer_view.bgp.asn}"
                )
            local_ips = [ip for ip in peer_view.bgp.peer_ips() if sim.owner.get(ip, ("",))[0] == a]
            if not local_ips:
                logger.debug(f"{a}->{b}: no reciprocal neighbor statement")
                continue
            ebgp = view.bgp.asn != peer_view.bgp.asn
            if ebgp and view.interface_for(peer_ip) is None:
                logger.debug(f"{a}->{b}: eBGP peer {peer_ip} not directly connected")
                continue
            if not ebgp and Fib(a, rib[a]).lookup(peer_ip) is None:
                logger.debug(f"{a}->{b}: iBGP peer {peer_ip} unreachable")
                continue
            sessions[(a, b)] = Session(
                local=a, remote=b, local_ip=sorted(local_ips)[0], remote_ip=peer_ip, ebgp=ebgp, neighbor=neighbor
            )
    return {key: s for key, s in sessions.items() if (s.remote, s.local) in sessions}


def _session_permits(view: RouterView, neighbor: BgpNeighbor, prefix: str, direction: str) -> bool:
    network = IPv4Network(prefix)
    if direction == "in":
        names = dict(route_map=neighbor.route_map_in, prefix_list=neighbor.prefix_list_in, acl=neighbor.distribute_list_in)
    else:
        names = dict(route_map=neighbor.route_map_out, prefix_list=neighbor.prefix_list_out, acl=neighbor.distribute_list_out)
    if not view.policies.permits(network, **names):
        return False
    for binding in view.bgp.distribute_lists:
        if binding.direction != direction:
            continue
        kwargs = {"prefix_list": binding.target} if binding.is_prefix_list else {"acl": binding.target}
        if not view.policies.permits(network, **kwargs):
            return False
    return True


def _local_bgp_paths(view: RouterView, rib: RouteTable) -> dict[str, BgpPath]:
    local: dict[str, BgpPath] = {}
    for prefix in view.bgp.networks:
        if prefix in rib:
            local[prefix] = BgpPath(prefix=prefix, local=True)
    redistributed = {
        "ospf": {Protocol.OSPF, Protocol.OSPF_EXTERNAL},
        "connected": {Protocol.CONNECTED},
        "static": {Protocol.STATIC},
    }
    for source in view.bgp.redistributes:
        protocols = redistributed.get(source, set())
        for prefix, route in rib.items():
            if route.protocol in protocols:
                local.setdefault(prefix, BgpPath(prefix=prefix, local=True))
    return local


def compute_bgp(sim: Simulation, rib: dict[str, RouteTable]) -> dict[str, RouteTable]:
    """Synchronous BGP rounds to a fixed point; returns installable BGP routes.

    Only IGP routes in ``rib`` are used for origination and next-hop
    resolution.

    Raises:
        SessionMismatch: from session establishment
    """
    speakers = sorted(name for name, view in sim.views.items() if view.bgp is not None)
    sim.sessions = bgp_sessions(sim, rib)
    local = {r: _local_bgp_paths(sim.views[r], rib[r]) for r in speakers}
    igp_fib = {r: Fib(r, rib[r]) for r in speakers}
    best: dict[str, dict[str, BgpPath]] = {r: dict(local[r]) for r in speakers}

    cap = 10 * max(1, len(speakers)) + 10
    for _ in range(cap):
        candidates: dict[str, dict[str, list[BgpPath]]] = {r: defaultdict(list) for r in speakers}
        for (a, b), session in sorted(sim.sessions.items()):
            view_a, view_b = sim.views[a], sim.views[b]
            inbound = sim.sessions[(b, a)].neighbor
            for prefix, path in sorted(best[a].items()):
                learned_ibgp = not path.local and not path.ebgp
                if learned_ibgp and not session.ebgp:
                    continue
                if not _session_permits(view_a, session.neighbor, prefix, "out"):
                    continue
                if session.ebgp:
                    as_path = (view_a.bgp.asn, *path.as_path)
                    if view_b.bgp.asn in as_path:
                        continue
                    next_hop = session.local_ip
                else:
                    as_path = path.as_path
                    next_hop = session.local_ip if path.local or session.neighbor.next_hop_self else path.next_hop
                if not _session_permits(view_b, inbound, prefix, "in"):
                    continue
                candidates[b][prefix].append(BgpPath(
                    prefix=prefix,
                    as_path=as_path,
                    next_hop=next_hop,
                    peer=a,
                    peer_router_id=view_a.router_id,
                    ebgp=session.ebgp,
                ))

        new_best: dict[str, dict[str, BgpPath]] = {}
        for r in speakers:
            chosen = dict(local[r])
            for prefix, paths in candidates[r].items():
                if prefix in chosen:
                    continue
                usable = [p for p in paths if p.ebgp or (p.next_hop and igp_fib[r].lookup(p.next_hop))]
                if usable:
                    chosen[prefix] = min(usable, key=BgpPath.rank)
            new_best[r] = chosen
        if new_best == best:
            break
        best = new_best
    else:
        logger.warning(f"BGP did not converge within {cap} rounds")

    sim.bgp_best = best
    installed: dict[str, RouteTable] = {}
    for r in speakers:
        table: RouteTable = {}
        for prefix, path in best[r].items():
            if path.local:
                continue
            route = _install_bgp(sim, r, path, igp_fib[r])
            if route is not None:
                table[prefix] = route
        installed[r] = table
    return installed


def _install_bgp(sim: Simulation, router: str, path: BgpPath, igp: Fib) -> Route | None:
    protocol = Protocol.EBGP if path.ebgp else Protocol.IBGP
    if path.ebgp:
        iface = sim.views[router].interface_for(path.next_hop)
        if iface is None:
            return None
        hops = [(path.peer, iface.name)]
    else:
        via = igp.lookup(path.next_hop)
        if via is None:
            return None
        if via.protocol == Protocol.CONNECTED:
            hops = [(sim.owner.get(path.next_hop, ("", ""))[0], via.next_hops[0][1])]
        else:
            hops = list(via.next_hops)
    return Route(
        prefix=path.prefix,
        protocol=protocol,
        admin_distance=ADMIN_DISTANCE[protocol],
        metric=len(path.as_path),
        next_hops=hops,
        as_path=list(path.as_path),
        learned_from=path.peer,
        bgp_next_hop=path.next_hop,
    )


# --- assembly ---


def simulate(snapshot: NetworkSnapshot) -> Simulation:
    """Run every protocol and build the FIBs of all routers."""
    sim = Simulation(snapshot)
    routers = snapshot.routers
    connected = {r: _connected(sim, r) for r in routers}
    static = {r: _static(sim, r) for r in routers}
    ospf: dict[str, RouteTable] = {r: {} for r in routers}

    sim.domains = ospf_domains(sim)
    for domain in sim.domains:
        tables, routes = compute_ospf(domain, sim)
        sim.ospf_tables.update(tables)
        for r, table in routes.items():
            ospf[r] = table

    def exported(domain: OspfDomain, source: str, tables: dict[str, RouteTable]) -> dict[str, set[str]]:
        result = {}
        for r in domain.routers:
            if source in sim.views[r].ospf.redistributes:
                result[r] = set(tables[r])
        return result

    pre_external: dict[str, RouteTable] = {r: {} for r in routers}
    for domain in sim.domains:
        redistributed = exported(domain, "static", static)
        for r, prefixes in exported(domain, "connected", connected).items():
            redistributed.setdefault(r, set()).update(prefixes)
        for r, table in _external_routes(sim, domain, redistributed).items():
            pre_external[r] = table

    rib = {r: _merge(connected[r], static[r], ospf[r], pre_external[r]) for r in routers}
    bgp = compute_bgp(sim, rib)

    post_external: dict[str, RouteTable] = {r: {} for r in routers}
    for domain in sim.domains:
        redistributed = exported(domain, "bgp", bgp)
        if redistributed:
            for r, table in _external_routes(sim, domain, redistributed).items():
                post_external[r] = table

    for r in routers:
        sim.fibs[r] = Fib(r, _merge(rib[r], bgp.get(r, {}), post_external[r]))
    logger.debug(f"Simulated {len(routers)} routers, {len(sim.sessions) // 2} BGP sessions")
    return sim


def compute_fibs(snapshot: NetworkSnapshot) -> dict[str, Fib]:
    return simulate(snapshot).fibs


def dump_fibs(fibs: dict[str, Fib]) -> str:
    """Serialize FIBs as JSON sorted by router, then prefix."""
    payload = {
        "schema": REPORT_SCHEMA,
        "routers": {name: fibs[name].to_list() for name in sorted(fibs)},
    }
    return json.dumps(payload, indent=2) + "\n"


def load_fibs(text: str) -> dict[str, Fib]:
    """Inverse of dump_fibs."""
    payload = json.loads(text)
    return {
        name: Fib(name, {r["prefix"]: Route.from_dict(r) for r in routes})
        for name, routes in payload["routers"].items()
    }


# --- traceroute / data plane ---


def traceroute(snapshot: NetworkSnapshot, fibs: dict[str, Fib], src: str, dst: str) -> list[Path]:
    """Every forwarding path from host ``src`` to host ``dst``.

    Raises:
        KeyError: unknown host
        NoRoute: some branch has no route or ends in a discard
        LoopDetected: some branch revisits a router or exceeds the hop limit
    """
    source, target = snapshot.hosts[src], snapshot.hosts[dst]
    destination = target.iface_ip
    paths: list[Path] = []

    def walk(router: str, trail: tuple[str, ...]) -> None:
        if len(trail) > TRACE_MAX_HOPS:
            raise LoopDetected(f"{src}->{dst}: more than {TRACE_MAX_HOPS} hops")
        if len(paths) >= TRACE_MAX_BRANCHES:
            return
        fib = fibs.get(router)
        route = fib.lookup(destination) if fib is not None else None
        if route is None:
            raise NoRoute(f"{src}->{dst}: no route at {router}")
        if route.protocol == Protocol.CONNECTED:
            if target.gateway_router == router and IPv4Address(destination) in IPv4Network(route.prefix):
                paths.append(trail + (dst,))
                return
            raise NoRoute(f"{src}->{dst}: {router} has no host {destination} on {route.prefix}")
        for neighbor, iface in route.next_hops:
            if not neighbor:
                raise NoRoute(f"{src}->{dst}: {router} discards via {iface}")
            if neighbor in trail:
                raise LoopDetected(f"{src}->{dst}: loop at {neighbor} via {router}")
            walk(neighbor, trail + (neighbor,))

    walk(source.gateway_router, (src, source.gateway_router))
    if len(paths) >= TRACE_MAX_BRANCHES:
        logger.warning(f"{src}->{dst}: path enumeration truncated at {TRACE_MAX_BRANCHES}")
    return sorted(set(paths))


def dataplane(snapshot: NetworkSnapshot, fibs: dict[str, Fib] | None = None) -> DataPlane:
    """Traceroute over all ordered host pairs; per-pair failures are recorded."""
    if fibs is None:
        fibs = compute_fibs(snapshot)
    dp = DataPlane()
    hosts = snapshot.host_names
    for src in hosts:
        for dst in hosts:
            if src == dst:
                continue
            try:
                dp.paths[(src, dst)] = traceroute(snapshot, fibs, src, dst)
            except (NoRoute, LoopDetected) as e:
                dp.paths[(src, dst)] = []
                dp.errors[(src, dst)] = f"{e.__class__.__name__}: {e}"
    return dp
