"""Route repair after expansion.

Intra-AS: the original data-plane paths are turned into path requirements,
encoded as integer constraints over the OSPF costs of the anonymized AS graph
and solved with z3 in a counterexample-guided loop. Only costs of links that
did not exist in the original network are free.

Inter-AS: the anonymized network is simulated, the FIBs of the watched routers
are compared with the stored original FIBs, and discrepancies are removed by
deny filters on BGP sessions or by raising fake link costs, until no
discrepancy is left.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from enum import Enum
from ipaddress import IPv4Network

import networkx as nx
import z3
from pydantic import BaseModel, Field, model_validator

from .config import COST_MAX, DEFAULT_SEARCH_BOUND, get_interas_cap, get_solver_timeout_ms
from .errors import ConflictingRequirement, NonConvergence, PathNotInGraph, SolverTimeout, Unsat
from .parsers import cisco
from .parsers.schema import RouterConfig, Stanza, StanzaKind
from .parsers.utils import prefixlen_to_wildcard
from .simulator import (
    DataPlane,
    Fib,
    OspfDomain,
    Protocol,
    Route,
    Simulation,
    dataplane,
    simulate,
)
from .snapshot import NetworkSnapshot

logger = logging.getLogger(__name__)

Edge = tuple[str, str]


class RequirementKind(str, Enum):
    PRIMARY = "primary"
    ECMP = "ecmp"


class IbgpStrategy(str, Enum):
    FILTER_NEXTHOP = "filter-nexthop"
    BLOCK_IGP = "block-igp"


class PathRequirement(BaseModel):
    """Routing paths that must be the exact shortest-path set from src to dst."""

    kind: RequirementKind
    src: str
    dst: str
    paths: list[tuple[str, ...]] = Field(min_length=1)
    as_id: int = 0

    @model_validator(mode="after")
    def _endpoints(self) -> PathRequirement:
        for path in self.paths:
            if len(path) < 2 or path[0] != self.src or path[-1] != self.dst:
                raise ValueError(f"path {path} does not run from {self.src} to {self.dst}")
        if self.kind == RequirementKind.PRIMARY and len(self.paths) != 1:
            raise ValueError("a primary requirement has exactly one path")
        return self

    @property
    def path(self) -> tuple[str, ...]:
        return self.paths[0]

    @classmethod
    def primary(cls, path: list[str] | tuple[str, ...], as_id: int = 0) -> PathRequirement:
        path = tuple(path)
        return cls(kind=RequirementKind.PRIMARY, src=path[0], dst=path[-1], paths=[path], as_id=as_id)

    @classmethod
    def ecmp(cls, paths: list, as_id: int = 0) -> PathRequirement:
        ordered = sorted({tuple(p) for p in paths})
        return cls(kind=RequirementKind.ECMP, src=ordered[0][0], dst=ordered[0][-1], paths=ordered, as_id=as_id)

    def predecessors(self) -> dict[str, set[str]]:
        """Requested predecessor set of every non-source node on the paths."""
        preds: dict[str, set[str]] = defaultdict(set)
        for path in self.paths:
            for u, v in zip(path, path[1:]):
                preds[v].add(u)
        return dict(preds)


class FilterRecord(BaseModel):
    router: str
    kind: str = Field(description="prefix-list, acl or ospf-distribute-list")
    name: str
    prefix: str
    attached_to: str = Field(description="Neighbor IP, interface name or 'router'")
    direction: str = "in"


class RepairLog(BaseModel):
    iterations: int = 0
    filters_added: list[FilterRecord] = Field(default_factory=list)
    costs_assigned: dict[str, int] = Field(default_factory=dict, description="'u->v' -> cost of u's interface")
    converged: bool = False
    as_id: int | None = None


# --- requirements ---


def shortest_path_set(graph: nx.DiGraph, src: str, dst: str) -> set[tuple[str, ...]]:
    """Every minimum-cost path from src to dst (empty if unreachable)."""
    try:
        return {tuple(p) for p in nx.all_shortest_paths(graph, src, dst, weight="cost")}
    except nx.NetworkXNoPath:
        return set()


def _domain_index(domains: list[OspfDomain]) -> dict[str, int]:
    return {router: i for i, domain in enumerate(domains) for router in domain.routers}


def _segments(path: tuple[str, ...], sim: Simulation, domain_of: dict[str, int]) -> list[tuple[str, ...]]:
    """Maximal runs of a router path that stay on OSPF adjacencies of one domain."""
    routers = path[1:-1]
    runs: list[list[str]] = []
    current: list[str] = []
    for router in routers:
        if current:
            prev = current[-1]
            index = domain_of.get(prev)
            same = index is not None and domain_of.get(router) == index
            if same and (prev, router) in sim.domains[index].links:
                current.append(router)
                continue
            runs.append(current)
        current = [router]
    if current:
        runs.append(current)
    return [tuple(run) for run in runs if len(run) >= 2]


def extract_requirements(original: NetworkSnapshot | Simulation, dp: DataPlane | None = None) -> list[PathRequirement]:
    """Path requirements from the original data plane.

    Each host-to-host path is cut into per-AS segments on OSPF adjacencies;
    segments with the same AS and endpoints are grouped. One path gives a
    primary requirement, several give an ECMP requirement. A group is kept
    only when it equals the OSPF shortest-path set between its endpoints.
    """
    sim = original if isinstance(original, Simulation) else simulate(original)
    if dp is None:
        dp = dataplane(sim.snapshot, sim.fibs)
    domain_of = _domain_index(sim.domains)
    graphs = [domain.digraph() for domain in sim.domains]

    groups: dict[tuple[int, str, str], set[tuple[str, ...]]] = defaultdict(set)
    for pair in sorted(dp.paths):
        for path in dp.paths[pair]:
            for segment in _segments(path, sim, domain_of):
                asn = sim.topology.as_of.get(segment[0], 0)
                groups[(asn, segment[0], segment[-1])].add(segment)

    requirements: list[PathRequirement] = []
    for (asn, src, dst), paths in sorted(groups.items()):
        expected = shortest_path_set(graphs[domain_of[src]], src, dst)
        if paths != expected:
            logger.debug(f"Skipping {src}->{dst}: data-plane paths differ from the OSPF shortest paths")
            continue
        if len(paths) == 1:
            requirements.append(PathRequirement.primary(next(iter(paths)), as_id=asn))
        else:
            requirements.append(PathRequirement.ecmp(list(paths), as_id=asn))
    logger.info(f"Extracted {len(requirements)} path requirements")
    return requirements


# --- cost model and encoding ---


class CostModel:
    """Integer cost per directed edge of one AS graph.

    Edges in ``pinned`` keep their current cost; every other edge gets a z3
    variable bounded by [1, bound] at solve time.
    """

    def __init__(self, graph: nx.DiGraph, pinned: set[Edge] | None = None):
        self.graph = graph
        self.pinned = {e for e in (pinned or set()) if graph.has_edge(*e)}
        self.current: dict[Edge, int] = {(u, v): int(data.get("cost", 1)) for u, v, data in graph.edges(data=True)}
        self.vars: dict[Edge, z3.ArithRef] = {
            e: z3.Int(f"c_{e[0]}_{e[1]}") for e in sorted(self.current) if e not in self.pinned
        }

    @classmethod
    def for_domain(cls, domain: OspfDomain, original_links: set[frozenset[str]]) -> CostModel:
        pinned = {e for e in domain.links if frozenset(e) in original_links}
        return cls(domain.digraph(), pinned)

    @property
    def free(self) -> list[Edge]:
        return list(self.vars)

    @property
    def max_pinned(self) -> int:
        return max((self.current[e] for e in self.pinned), default=1)

    def cost(self, u: str, v: str) -> z3.ArithRef:
        if (u, v) in self.vars:
            return self.vars[(u, v)]
        return z3.IntVal(self.current[(u, v)])

    def weighted(self, costs: dict[Edge, int] | None = None) -> nx.DiGraph:
        """Copy of the graph carrying ``costs`` (default: the current costs)."""
        costs = costs or {}
        graph = nx.DiGraph()
        graph.add_nodes_from(self.graph.nodes)
        for edge, current in self.current.items():
            graph.add_edge(*edge, cost=costs.get(edge, current))
        return graph


class ConstraintSet:
    """z3 constraints over one CostModel; shortest distances are shared per source."""

    def __init__(self, model: CostModel):
        self.model = model
        self.constraints: list[z3.BoolRef] = []
        self._distances: dict[str, dict[str, z3.ArithRef]] = {}

    def __len__(self) -> int:
        return len(self.constraints)

    def add(self, *constraints: z3.BoolRef) -> None:
        self.constraints.extend(constraints)

    def distances(self, source: str) -> dict[str, z3.ArithRef]:
        """Distance variables from ``source``, constrained to the exact shortest costs.

        Every reachable node v satisfies d(v) <= d(u) + c(u, v) for all
        in-neighbors u and is tight for at least one of them; with positive
        costs this pins d to the shortest-path distances.
        """
        if source in self._distances:
            return self._distances[source]
        graph = self.model.graph
        reachable = sorted(nx.descendants(graph, source) | {source})
        d = {v: z3.Int(f"d_{source}_{v}") for v in reachable}
        self.add(d[source] == 0)
        for v in reachable:
            if v == source:
                continue
            incoming = [u for u in sorted(graph.predecessors(v)) if u in d]
            via = [d[u] + self.model.cost(u, v) for u in incoming]
            self.add(*(d[v] <= expr for expr in via))
            self.add(z3.Or(*(d[v] == expr for expr in via)))
        self._distances[source] = d
        return d


def _check_paths(req: PathRequirement, graph: nx.DiGraph) -> None:
    for path in req.paths:
        for u, v in zip(path, path[1:]):
            if not graph.has_edge(u, v):
                raise PathNotInGraph(f"{u}->{v} of {' '.join(path)} is not an edge of the AS graph")


def _encode_predecessors(req: PathRequirement, model: CostModel, into: ConstraintSet) -> ConstraintSet:
    d = into.distances(req.src)
    for v, wanted in sorted(req.predecessors().items()):
        for u in sorted(model.graph.predecessors(v)):
            if u not in d:
                continue
            through = d[u] + model.cost(u, v)
            into.add(d[v] == through if u in wanted else through > d[v])
    return into


def encode_primary(
    req: PathRequirement, graph: nx.DiGraph, model: CostModel, into: ConstraintSet | None = None
) -> ConstraintSet:
    """Constraints making ``req.path`` the unique shortest path.

    Each node on the path is reached through its path predecessor at exactly
    the shortest cost, and through every other in-neighbor at a strictly
    higher cost.

    Raises:
        PathNotInGraph: a hop of the path is not an edge of ``graph``
    """
    if req.kind != RequirementKind.PRIMARY:
        raise ValueError(f"expected a primary requirement, got {req.kind.value}")
    _check_paths(req, graph)
    return _encode_predecessors(req, model, into or ConstraintSet(model))


def encode_ecmp(
    req: PathRequirement, graph: nx.DiGraph, model: CostModel, into: ConstraintSet | None = None
) -> ConstraintSet:
    """Constraints making the requested paths exactly the equal-cost shortest paths.

    Raises:
        PathNotInGraph: a hop of some path is not an edge of ``graph``
    """
    if req.kind != RequirementKind.ECMP:
        raise ValueError(f"expected an ECMP requirement, got {req.kind.value}")
    _check_paths(req, graph)
    return _encode_predecessors(req, model, into or ConstraintSet(model))


def encode(req: PathRequirement, model: CostModel, into: ConstraintSet | None = None) -> ConstraintSet:
    if req.kind == RequirementKind.PRIMARY:
        return encode_primary(req, model.graph, model, into)
    return encode_ecmp(req, model.graph, model, into)


def solve_costs(constraints: ConstraintSet, model: CostModel, timeout_ms: int | None = None) -> dict[Edge, int]:
    """Costs satisfying ``constraints``, closest to the current costs.

    The search bound starts at DEFAULT_SEARCH_BOUND (or the largest pinned
    cost) and is raised to COST_MAX when that is unsatisfiable.

    Returns:
        cost per directed edge, pinned edges included

    Raises:
        Unsat: no assignment exists within COST_MAX
        SolverTimeout: z3 gave up within the budget
    """
    budget = timeout_ms if timeout_ms is not None else get_solver_timeout_ms()
    first = min(COST_MAX, max(DEFAULT_SEARCH_BOUND, model.max_pinned))
    bounds = [first] if first == COST_MAX else [first, COST_MAX]
    for bound in bounds:
        opt = z3.Optimize()
        opt.set("timeout", budget)
        opt.add(*constraints.constraints)
        deviation = []
        for edge, var in model.vars.items():
            opt.add(var >= 1, var <= bound)
            current = model.current[edge]
            deviation.append(z3.If(var >= current, var - current, current - var))
        if deviation:
            opt.minimize(z3.Sum(deviation))
        result = opt.check()
        if result == z3.unknown:
            raise SolverTimeout(budget, "cost synthesis")
        if result == z3.sat:
            solution = opt.model()
            costs = dict(model.current)
            for edge, var in model.vars.items():
                costs[edge] = solution.eval(var, model_completion=True).as_long()
            return costs
        logger.debug(f"Cost synthesis unsatisfiable with bound {bound}")
    raise Unsat(f"no link costs up to {COST_MAX} satisfy {len(constraints)} constraints")


def requirement_holds(req: PathRequirement, graph: nx.DiGraph) -> bool:
    """Independent check: the shortest paths under ``graph``'s costs are exactly the requested ones."""
    return shortest_path_set(graph, req.src, req.dst) == set(req.paths)


def cegis_repair(
    as_graph: nx.DiGraph,
    reqs: list[PathRequirement],
    model: CostModel | None = None,
    timeout_ms: int | None = None,
    as_id: int | None = None,
) -> tuple[dict[Edge, int], RepairLog]:
    """Counterexample-guided cost synthesis for the requirements of one AS.

    Requirements are verified by Dijkstra on the candidate costs; the violated
    ones join the encoded set and the solver runs again.

    Raises:
        Unsat: the requirements cannot hold together
        SolverTimeout: from solve_costs
    """
    model = model or CostModel(as_graph)
    costs = dict(model.current)
    active: list[PathRequirement] = []
    calls = 0
    while True:
        graph = model.weighted(costs)
        violated = [r for r in reqs if not requirement_holds(r, graph)]
        if not violated:
            break
        if any(r in active for r in violated):
            raise Unsat("synthesized costs violate an encoded requirement")
        active.extend(violated)
        logger.debug(f"CEGIS round {calls + 1}: {len(violated)} violated, {len(active)} encoded")
        constraints = ConstraintSet(model)
        for req in active:
            encode(req, model, constraints)
        costs = solve_costs(constraints, model, timeout_ms)
        calls += 1

    changed = {e: c for e, c in sorted(costs.items()) if c != model.current[e]}
    log = RepairLog(
        iterations=max(1, calls),
        costs_assigned={f"{u}->{v}": c for (u, v), c in changed.items()},
        converged=True,
        as_id=as_id,
    )
    logger.info(f"CEGIS (AS {as_id}): {log.iterations} iterations, {len(changed)} costs changed")
    return costs, log


def apply_costs(snapshot: NetworkSnapshot, sim: Simulation, costs: dict[Edge, int]) -> None:
    """Write directed-edge costs onto the sending router's interface, in place."""
    for (u, v), cost in sorted(costs.items()):
        iface = sim.topology.link(u, v)["ifaces"][u]
        cisco.set_interface_cost(snapshot.configs[u], iface, cost)


def intra_as_repair(
    original: Simulation,
    anonymized: NetworkSnapshot,
    timeout_ms: int | None = None,
) -> tuple[NetworkSnapshot, list[RepairLog]]:
    """Constraint-based repair of every AS; returns a repaired copy and one log per AS."""
    out = anonymized.copy_deep()
    reqs = extract_requirements(original)
    sim = simulate(out)
    domain_of = _domain_index(sim.domains)
    original_links = original.topology.router_edges()

    by_domain: dict[int, list[PathRequirement]] = defaultdict(list)
    for req in reqs:
        index = domain_of.get(req.src)
        if index is None:
            logger.warning(f"{req.src} runs no OSPF after expansion; requirement {req.src}->{req.dst} dropped")
            continue
        by_domain[index].append(req)

    logs: list[RepairLog] = []
    for index in sorted(by_domain):
        domain = sim.domains[index]
        model = CostModel.for_domain(domain, original_links)
        domain_reqs = by_domain[index]
        costs, log = cegis_repair(model.graph, domain_reqs, model, timeout_ms, as_id=domain_reqs[0].as_id)
        apply_costs(out, sim, {e: costs[e] for e in model.free if costs[e] != model.current[e]})
        logs.append(log)
    return out, logs


# --- inter-AS ---


class FibDiscrepancy(BaseModel):
    router: str
    prefix: str
    expected: list[str]
    actual: list[str]


def _hop_routers(route: Route | None) -> list[str]:
    if route is None:
        return []
    return sorted({neighbor for neighbor, _ in route.next_hops})


def _route_for(fib: Fib, prefix: str) -> Route | None:
    """Exact prefix first, longest-prefix match as fallback."""
    return fib.get(prefix) or fib.lookup(IPv4Network(prefix).network_address)


def fib_diff(
    stored: dict[str, Fib],
    current: dict[str, Fib],
    routers: list[str],
    prefixes: list[str] | None = None,
) -> list[FibDiscrepancy]:
    """Prefixes whose next-hop routers changed on the given routers."""
    found: list[FibDiscrepancy] = []
    for router in sorted(routers):
        if router not in stored:
            continue
        wanted = prefixes if prefixes is not None else list(stored[router].routes)
        for prefix in wanted:
            expected = _hop_routers(_route_for(stored[router], prefix))
            actual = _hop_routers(_route_for(current[router], prefix)) if router in current else []
            if expected != actual:
                found.append(FibDiscrepancy(router=router, prefix=prefix, expected=expected, actual=actual))
    return found


class _InterAsRepair:
    """Mutable state of the inter-AS loop over one snapshot copy."""

    def __init__(self, snapshot: NetworkSnapshot, stored: dict[str, Fib], original_links: set[frozenset[str]],
                 strategy: IbgpStrategy):
        self.out = snapshot.copy_deep()
        self.stored = stored
        self.original_links = original_links
        self.strategy = strategy
        self.log = RepairLog()
        self.applied: set[tuple[str, str, str]] = set()
        self._counter = 0

    def _name(self, cfg_name: str) -> str:
        taken = {r.name for r in cisco.policies(self.out.configs[cfg_name]).all_rules()}
        while True:
            self._counter += 1
            name = f"FILTER-{self._counter}"
            if name not in taken:
                return name

    def _once(self, key: tuple[str, str, str]) -> None:
        if key in self.applied:
            raise ConflictingRequirement(f"filter {key[2]} for {key[1]} on {key[0]} is already in place")
        self.applied.add(key)

    def deny_on_session(self, router: str, peer_ip: str, prefix: str, direction: str) -> None:
        """Deny ``prefix`` on one BGP session of ``router``; prefix-list first, ACL if taken."""
        self._once((router, prefix, f"{peer_ip} {direction}"))
        cfg = self.out.configs[router]
        neighbor = cisco.bgp(cfg).resolve(peer_ip)
        if neighbor is None:
            raise ConflictingRequirement(f"{router} has no neighbor statement for {peer_ip}")
        network = IPv4Network(prefix)
        name = self._name(router)
        if getattr(neighbor, f"prefix_list_{direction}") is None:
            cisco.add_prefix_list_entry(cfg, name, 5, "deny", network)
            cisco.add_prefix_list_entry(cfg, name, 10000, "permit", "0.0.0.0/0", le=32)
            cisco.add_neighbor_filter(cfg, peer_ip, "prefix-list", name, direction)
            kind = "prefix-list"
        elif getattr(neighbor, f"distribute_list_{direction}") is None:
            self._named_acl(cfg, name, network)
            cisco.add_neighbor_filter(cfg, peer_ip, "distribute-list", name, direction)
            kind = "acl"
        else:
            raise ConflictingRequirement(f"{router}: neighbor {peer_ip} already filters {direction} twice")
        self.log.filters_added.append(FilterRecord(
            router=router, kind=kind, name=name, prefix=prefix, attached_to=peer_ip, direction=direction
        ))
        logger.debug(f"{router}: deny {prefix} {direction} from {peer_ip} ({name})")

    def _named_acl(self, cfg: RouterConfig, name: str, network: IPv4Network) -> None:
        stanza = Stanza(kind=StanzaKind.ACCESS_LIST, header=f"ip access-list standard {name}")
        cisco.append_command(cfg, stanza, f"deny {network.network_address} {prefixlen_to_wildcard(network.prefixlen)}")
        cisco.append_command(cfg, stanza, "permit any")
        cisco.insert_stanza(cfg, stanza)

    def block_igp(self, router: str, igp_route: Route, wrong: set[str]) -> None:
        """Per-interface OSPF distribute-list dropping the IGP route to a BGP next hop."""
        cfg = self.out.configs[router]
        name = None
        for neighbor, iface in igp_route.next_hops:
            if neighbor not in wrong:
                continue
            self._once((router, igp_route.prefix, iface))
            if name is None:
                name = self._name(router)
                cisco.add_prefix_list_entry(cfg, name, 5, "deny", IPv4Network(igp_route.prefix))
                cisco.add_prefix_list_entry(cfg, name, 10000, "permit", "0.0.0.0/0", le=32)
            cisco.add_ospf_distribute_list(cfg, name, iface)
            self.log.filters_added.append(FilterRecord(
                router=router, kind="ospf-distribute-list", name=name, prefix=igp_route.prefix, attached_to=iface
            ))

    def raise_costs(self, sim: Simulation, router: str, destination: str) -> bool:
        """Double the cost of fake links on the current IGP forwarding paths toward ``destination``."""
        changed = False
        seen: set[str] = set()
        stack = [router]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            route = sim.fibs[node].lookup(destination)
            if route is None or route.protocol not in (Protocol.OSPF, Protocol.OSPF_EXTERNAL):
                continue
            for neighbor, iface in route.next_hops:
                if not neighbor:
                    continue
                stack.append(neighbor)
                if frozenset((node, neighbor)) in self.original_links:
                    continue
                view = sim.views[node]
                current = view.cost(view.interface(iface))
                new = min(COST_MAX, 2 * current)
                if new == current:
                    continue
                cisco.set_interface_cost(self.out.configs[node], iface, new)
                self.log.costs_assigned[f"{node}->{neighbor}"] = new
                changed = True
        return changed

    def fix(self, sim: Simulation, disc: FibDiscrepancy, bgp_only: bool) -> bool:
        """Apply one repair action for ``disc``; returns whether anything changed."""
        stored = _route_for(self.stored[disc.router], disc.prefix)
        route = _route_for(sim.fibs[disc.router], disc.prefix)
        if route is None:
            return False
        bgp_route = route.protocol in (Protocol.EBGP, Protocol.IBGP)
        expected_peer = stored.learned_from if stored is not None else None
        if bgp_route and route.learned_from != expected_peer:
            peer = route.learned_from
            session = sim.sessions.get((peer, disc.router))
            if session is None:
                return False
            if session.ebgp:
                self.deny_on_session(disc.router, session.local_ip, route.prefix, "in")
            elif self.strategy == IbgpStrategy.BLOCK_IGP:
                igp = sim.fibs[disc.router].lookup(route.bgp_next_hop)
                if igp is None or igp.protocol == Protocol.CONNECTED:
                    return False
                self.block_igp(disc.router, igp, set(_hop_routers(route)))
            else:
                self.deny_on_session(peer, session.remote_ip, route.prefix, "out")
            return True
        if bgp_only:
            return False
        target = route.bgp_next_hop if route.protocol == Protocol.IBGP else str(IPv4Network(disc.prefix).network_address)
        return self.raise_costs(sim, disc.router, target)


def interas_repair(
    anon_snapshot: NetworkSnapshot,
    stored_fibs: dict[str, Fib],
    routers: list[str],
    prefixes: list[str] | None = None,
    strategy: IbgpStrategy | str = IbgpStrategy.FILTER_NEXTHOP,
    cap: int | None = None,
    original_links: set[frozenset[str]] | None = None,
) -> tuple[NetworkSnapshot, RepairLog]:
    """Iterative FIB-diff repair on a copy of ``anon_snapshot``.

    Each iteration simulates, diffs the watched routers against
    ``stored_fibs`` and repairs: a route from the wrong BGP peer gets a deny
    filter (on the receiving side for eBGP; for iBGP per ``strategy``), other
    changed next hops raise the costs of fake links on the current path.
    BGP repairs go first; cost changes wait until an iteration has none.

    Raises:
        ConflictingRequirement: an iteration finds nothing left to change
        NonConvergence: discrepancies remain after ``cap`` iterations
    """
    cap = cap if cap is not None else get_interas_cap()
    state = _InterAsRepair(anon_snapshot, stored_fibs, original_links or set(), IbgpStrategy(strategy))
    remaining: list[FibDiscrepancy] = []
    previous: int | None = None
    for iteration in range(1, cap + 1):
        sim = simulate(state.out)
        remaining = fib_diff(stored_fibs, sim.fibs, routers, prefixes)
        state.log.iterations = iteration
        if not remaining:
            state.log.converged = True
            logger.info(
                f"Inter-AS repair converged after {iteration} iterations, {len(state.log.filters_added)} filters"
            )
            return state.out, state.log
        if previous is not None and len(remaining) > previous:
            logger.warning(f"Inter-AS repair: discrepancies grew from {previous} to {len(remaining)}")
        previous = len(remaining)
        logger.debug(f"Inter-AS iteration {iteration}: {len(remaining)} discrepancies")

        changed = False
        for disc in remaining:
            changed |= state.fix(sim, disc, bgp_only=True)
        if not changed:
            for disc in remaining:
                changed |= state.fix(sim, disc, bgp_only=False)
        if not changed:
            first = remaining[0]
            raise ConflictingRequirement(
                f"{first.router} {first.prefix}: expected via {first.expected}, got {first.actual}; no repair applies"
            )
    raise NonConvergence(cap, len(remaining))
