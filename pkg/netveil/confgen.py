"""Configuration generation for an expanded topology.

New links and routers from the anonymized topology are turned into config
lines with a worklist: a fake router is configured the first time one of its
links touches an already configured router, taking that router's AS and the
most similar real router as a template. Fake hosts get fresh LANs mirroring
their real counterpart, and filters naming a real host are extended to its
fake hosts.

Real routers are only ever appended to.
"""

from __future__ import annotations

import logging
import re
from ipaddress import IPv4Address, IPv4Network

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .config import (
    DEFAULT_OSPF_COST,
    HOST_POOL,
    LINK_POOL,
    ROUTER_ID_POOL,
    TEMPLATE_WEIGHTS,
)
from .errors import IncompleteAssignment, SubnetPoolExhausted, UnreachablePlan
from .expansion import fake_names
from .parsers import cisco
from .parsers.schema import HostSpec, RouterConfig, Stanza, StanzaKind
from .parsers.utils import is_ipv4, next_free_subnet, prefixlen_to_wildcard
from .snapshot import NetworkSnapshot
from .topology import Topology, extract_topology

logger = logging.getLogger(__name__)

_TRAILING_NUMBER = re.compile(r"^(.*?)(\d+)$")
_VIRTUAL_PREFIXES = ("loopback", "null", "tunnel", "vlan")

# Tokens after which a filter name is referenced
_FILTER_REF_KEYWORDS = frozenset({
    "route-map", "prefix-list", "distribute-list", "prefix", "standard", "extended", "access-group",
})


class ExpansionPlan(BaseModel):
    """Topology delta to be turned into configuration."""

    new_edges: list[tuple[str, str]] = Field(default_factory=list)
    new_routers: set[str] = Field(default_factory=set)
    new_hosts: set[str] = Field(default_factory=set)
    host_map: dict[str, str] = Field(default_factory=dict, description="fake host -> real host")
    host_gateway: dict[str, str] = Field(default_factory=dict, description="fake host -> gateway router")
    template_of: dict[str, str] = Field(
        default_factory=dict, description="fake router -> real router; filled in during expansion"
    )

    @model_validator(mode="after")
    def _consistent(self) -> ExpansionPlan:
        touched = {node for edge in self.new_edges for node in edge}
        isolated = sorted(self.new_routers - touched)
        if isolated:
            raise ValueError(f"new routers without links: {', '.join(isolated)}")
        if set(self.host_map) != self.new_hosts:
            raise ValueError("host_map must cover exactly the new hosts")
        if set(self.host_gateway) != self.new_hosts:
            raise ValueError("host_gateway must cover exactly the new hosts")
        return self


class LinkAssignment(BaseModel):
    interface: str
    ip: str | None = None
    mask: str | None = None
    peer: str
    peer_ip: str
    cost: int | None = None
    ospf: bool = False
    remote_as: int | None = Field(default=None, description="Set for an eBGP session to the peer")


class FakeAssignment(BaseModel):
    """Concrete values a template is instantiated with."""

    hostname: str
    asn: int | None = None
    router_id: str | None = None
    links: list[LinkAssignment] = Field(default_factory=list)


class SubnetAllocator:
    """Hands out link subnets, host LANs and router ids disjoint from a snapshot."""

    def __init__(self, snapshot: NetworkSnapshot):
        self.taken: list[IPv4Network] = []
        self.router_ids: set[str] = set()
        for cfg in snapshot.configs.values():
            for iface in cisco.interfaces(cfg):
                if iface.network is not None:
                    self.taken.append(iface.network)
            self.router_ids.add(cisco.router_id(cfg))
        for host in snapshot.hosts.values():
            self.taken.append(host.network)
        self._next: dict[tuple[str, int], int] = {}
        self._rid_pool = IPv4Network(ROUTER_ID_POOL).hosts()

    def _allocate(self, pool: str, prefixlen: int) -> IPv4Network:
        key = (pool, prefixlen)
        found = next_free_subnet(IPv4Network(pool), prefixlen, self.taken, self._next.get(key, 0))
        if found is None:
            raise SubnetPoolExhausted(f"no free /{prefixlen} left in {pool}")
        subnet, self._next[key] = found
        self.taken.append(subnet)
        logger.debug(f"Allocated {subnet} from {pool}")
        return subnet

    def link(self) -> IPv4Network:
        return self._allocate(LINK_POOL, 30)

    def lan(self, prefixlen: int) -> IPv4Network:
        return self._allocate(HOST_POOL, prefixlen)

    def router_id(self) -> str:
        for address in self._rid_pool:
            if str(address) not in self.router_ids:
                self.router_ids.add(str(address))
                return str(address)
        raise SubnetPoolExhausted(f"no free router id left in {ROUTER_ID_POOL}")


# --- planning ---


def plan_expansion(
    original: Topology,
    anonymized: Topology,
    snapshot: NetworkSnapshot,
    k_hosts: int,
) -> ExpansionPlan:
    """Delta between the original and anonymized topologies plus fake hosts.

    Every real host gets ``k_hosts - 1`` fake hosts. They are spread round-robin
    over the real egress routers and the fake routers, starting after the real
    host's own gateway.
    """
    real_edges = original.router_edges()
    new_edges = sorted(
        tuple(sorted(e)) for e in anonymized.router_graph().edges if frozenset(e) not in real_edges
    )
    new_routers = set(anonymized.routers) - set(original.routers)

    gateways = {snapshot.hosts[h].gateway_router for h in snapshot.host_names}
    candidates = sorted(gateways | new_routers)
    wanted = max(0, k_hosts - 1) * len(snapshot.host_names)
    names = iter(fake_names(snapshot.host_names, wanted, "h", avoid=set(anonymized.graph.nodes) | set(snapshot.routers)))

    host_map: dict[str, str] = {}
    host_gateway: dict[str, str] = {}
    for real in snapshot.host_names:
        own = snapshot.hosts[real].gateway_router
        index = candidates.index(own)
        rotation = candidates[index + 1:] + candidates[: index + 1]
        for i in range(max(0, k_hosts - 1)):
            fake = next(names)
            host_map[fake] = real
            host_gateway[fake] = rotation[i % len(rotation)]

    return ExpansionPlan(
        new_edges=new_edges,
        new_routers=new_routers,
        new_hosts=set(host_map),
        host_map=host_map,
        host_gateway=host_gateway,
    )


# --- templates ---


def _jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def _router_neighbors(topology: Topology, node: str) -> set[str]:
    return {n for n in topology.graph.neighbors(node) if topology.kind(n) == "router"}


def _expected_protocols(fake: str, snapshot: NetworkSnapshot, topology: Topology) -> set[str]:
    asn = topology.as_of.get(fake)
    found: set[str] = set()
    for neighbor in _router_neighbors(topology, fake):
        if neighbor in snapshot.configs and topology.as_of.get(neighbor) == asn:
            found |= cisco.protocols(snapshot.configs[neighbor])
    return found


def template_score(fake: str, real: str, snapshot: NetworkSnapshot, topology: Topology, protocols: set[str]) -> float:
    w_degree, w_neighbors, w_as, w_protocols = TEMPLATE_WEIGHTS
    closeness = 1.0 / (1.0 + abs(topology.degree(fake) - topology.degree(real)))
    overlap = _jaccard(_router_neighbors(topology, fake), _router_neighbors(topology, real))
    same_as = 1.0 if topology.as_of.get(fake) == topology.as_of.get(real) else 0.0
    shared = _jaccard(protocols, cisco.protocols(snapshot.configs[real]))
    return w_degree * closeness + w_neighbors * overlap + w_as * same_as + w_protocols * shared


def select_template(fake: str, snapshot: NetworkSnapshot, topology: Topology) -> str:
    """Most similar real router; candidates are restricted to the fake's AS when it has any.

    Ties go to the lexicographically smallest name.
    """
    reals = [r for r in snapshot.routers if r in topology.graph]
    same_as = [r for r in reals if topology.as_of.get(r) == topology.as_of.get(fake)]
    candidates = same_as or reals
    protocols = _expected_protocols(fake, snapshot, topology)
    scored = [(round(template_score(fake, r, snapshot, topology, protocols), 12), r) for r in candidates]
    best = min(scored, key=lambda item: (-item[0], item[1]))
    logger.debug(f"Template for {fake}: {best[1]} (score {best[0]:.3f})")
    return best[1]


def _median_cost(cfg: RouterConfig) -> int:
    costs = [i.ospf_cost or DEFAULT_OSPF_COST for i in cisco.ospf_enabled_interfaces(cfg)]
    if not costs:
        return DEFAULT_OSPF_COST
    return max(1, int(round(float(np.median(costs)))))


def _uses_explicit_costs(cfg: RouterConfig) -> bool:
    return any(i.ospf_cost is not None for i in cisco.interfaces(cfg))


def _physical_interfaces(cfg: RouterConfig) -> list[str]:
    return [i.name for i in cisco.interfaces(cfg) if not i.name.lower().startswith(_VIRTUAL_PREFIXES)]


def fake_interface_name(template: RouterConfig, used: list[str]) -> str:
    """Reuse the template's interface names in order, then continue its numbering."""
    physical = _physical_interfaces(template)
    for name in physical:
        if name not in used:
            return name
    match = _TRAILING_NUMBER.match(physical[-1]) if physical else None
    prefix, number = (match.group(1), int(match.group(2))) if match else ("Ethernet", -1)
    while True:
        number += 1
        candidate = f"{prefix}{number}"
        if candidate not in used and candidate not in physical:
            return candidate


def _style_lines(cfg: RouterConfig) -> list[str] | None:
    """Keyword lines of the router's first addressed physical interface, reusable on a new one."""
    for stanza in cfg.stanzas_of(StanzaKind.INTERFACE):
        view = cisco.InterfaceHandler.view(stanza)
        if view.ip is None or view.name.lower().startswith(_VIRTUAL_PREFIXES):
            continue
        lines = []
        for command in stanza.commands:
            tokens = command.tokens
            if tokens[:2] == ["ip", "address"]:
                lines.append("ip address")
            elif tokens[:3] == ["ip", "ospf", "cost"]:
                lines.append("ip ospf cost")
            elif tokens[0] == "description":
                lines.append("description")
            elif any(is_ipv4(t) for t in tokens) or "access-group" in tokens or tokens == ["shutdown"]:
                continue
            elif not tokens[0].startswith("!"):
                lines.append(command.raw.strip())
        return lines
    return None


# --- fake router configs ---


def _rename_tokens(line: str, renames: dict[str, str]) -> str:
    if not renames:
        return line
    parts = re.split(r"(\s+)", line)
    words = [i for i, part in enumerate(parts) if part and not part.isspace()]
    tokens = [parts[i] for i in words]
    in_match = tokens[:3] == ["match", "ip", "address"]
    for position, index in enumerate(words):
        token = parts[index]
        if token not in renames or position == 0:
            continue
        previous = tokens[position - 1]
        if previous in _FILTER_REF_KEYWORDS or (in_match and position >= 3):
            parts[index] = renames[token]
    return "".join(parts)


def _replace_word(line: str, old: str, new: str) -> str:
    return re.sub(rf"(?<![\w.-]){re.escape(old)}(?![\w.-])", new, line)


def _policy_renames(template: RouterConfig, fake: str) -> dict[str, str]:
    table = cisco.policies(template)
    names = [*table.route_maps, *table.prefix_lists, *(n for n in table.acls if not n.isdigit())]
    return {name: f"{name}-{fake}" for name in names}


def _template_addresses(template: RouterConfig) -> set[str]:
    addresses = {i.ip for i in cisco.interfaces(template) if i.ip}
    addresses.add(cisco.router_id(template))
    return addresses


def _interface_lines(model: Stanza | None, link: LinkAssignment, renames: dict[str, str]) -> list[str]:
    indent = " "
    body: list[str] = []
    placed_ip = placed_cost = False
    if model is not None:
        for command in model.commands:
            tokens = command.tokens
            indent = command.indent or indent
            if tokens[:2] == ["ip", "address"]:
                body.append(f"{command.indent}ip address {link.ip} {link.mask}")
                placed_ip = True
            elif tokens[:3] == ["ip", "ospf", "cost"]:
                if link.cost is not None:
                    body.append(f"{command.indent}ip ospf cost {link.cost}")
                    placed_cost = True
            elif tokens[0] == "description":
                body.append(f"{command.indent}description to {link.peer}")
            elif tokens == ["shutdown"] or any(is_ipv4(t) for t in tokens):
                continue
            else:
                body.append(_rename_tokens(command.raw, renames))
    if not placed_ip:
        body.append(f"{indent}ip address {link.ip} {link.mask}")
    if link.cost is not None and not placed_cost:
        body.append(f"{indent}ip ospf cost {link.cost}")
    return [f"interface {link.interface}", *body]


def _ospf_lines(stanza: Stanza, assignment: FakeAssignment, renames: dict[str, str], foreign: set[str]) -> list[str]:
    area = "0"
    networks = [
        IPv4Network(f"{link.ip}/{link.mask}", strict=False) for link in assignment.links if link.ospf
    ]
    out = [stanza.header]
    network_slot: int | None = None
    for command in stanza.commands:
        tokens = command.tokens
        if tokens[0] == "network":
            area = tokens[4] if len(tokens) >= 5 else area
            if network_slot is None:
                network_slot = len(out)
            continue
        if tokens[:2] == ["redistribute", "bgp"] or tokens[0] == "passive-interface":
            continue
        if tokens[0] == "router-id":
            if assignment.router_id is not None:
                out.append(f"{command.indent}router-id {assignment.router_id}")
            continue
        if tokens[0] == "distribute-list" and tokens[-1] not in ("in", "out"):
            continue
        if any(t in foreign for t in tokens):
            continue
        out.append(_rename_tokens(command.raw, renames))
    indent = stanza.commands[0].indent if stanza.commands else " "
    lines = [f"{indent}network {n.network_address} {prefixlen_to_wildcard(n.prefixlen)} area {area}" for n in networks]
    slot = network_slot if network_slot is not None else len(out)
    return out[:slot] + lines + out[slot:]


def _bgp_lines(stanza: Stanza, assignment: FakeAssignment, renames: dict[str, str], foreign: set[str]) -> list[str]:
    header_indent = stanza.header[: len(stanza.header) - len(stanza.header.lstrip())]
    out = [f"{header_indent}router bgp {assignment.asn}"]
    view = cisco.RouterBgpHandler.view(stanza)
    groups = {name: group.remote_as for name, group in view.peer_groups.items()}
    neighbor_slot: int | None = None
    for command in stanza.commands:
        tokens = command.tokens
        if tokens[0] == "neighbor" and len(tokens) >= 2:
            if is_ipv4(tokens[1]):
                if neighbor_slot is None:
                    neighbor_slot = len(out)
                continue
            out.append(_rename_tokens(command.raw, renames))
            neighbor_slot = len(out)
            continue
        if tokens[0] == "network":
            continue
        if tokens[0] == "redistribute" and len(tokens) >= 2 and tokens[1] in ("ospf", "static"):
            continue
        if tokens[:2] == ["bgp", "router-id"]:
            if assignment.router_id is not None:
                out.append(f"{command.indent}bgp router-id {assignment.router_id}")
            continue
        if any(t in foreign for t in tokens):
            continue
        out.append(_rename_tokens(command.raw, renames))

    indent = stanza.commands[0].indent if stanza.commands else " "
    sessions: list[str] = []
    for link in assignment.links:
        if link.remote_as is None:
            continue
        group = min((g for g, asn in groups.items() if asn == link.remote_as), default=None)
        if group is not None:
            sessions.append(f"{indent}neighbor {link.peer_ip} peer-group {group}")
        else:
            sessions.append(f"{indent}neighbor {link.peer_ip} remote-as {link.remote_as}")
    slot = neighbor_slot if neighbor_slot is not None else len(out)
    return out[:slot] + sessions + out[slot:]


def generate_fake_config(fake: str, template: RouterConfig, assignment: FakeAssignment) -> RouterConfig:
    """Instantiate ``template`` for a fake router.

    Stanza order, comments, peer-groups and command style follow the template.
    Interfaces, OSPF networks and BGP sessions come from ``assignment``; the
    template's own addresses, static routes, originated networks and
    cross-protocol redistribution are dropped. Policy objects are copied under
    names suffixed with the fake's hostname.

    Raises:
        IncompleteAssignment: hostname, a link address or a required ASN is missing
    """
    if not assignment.hostname:
        raise IncompleteAssignment(f"{fake}: no hostname assigned")
    for link in assignment.links:
        if link.ip is None or link.mask is None:
            raise IncompleteAssignment(f"{fake}: link to {link.peer} has no address")
    if cisco.bgp(template) is not None and assignment.asn is None:
        raise IncompleteAssignment(f"{fake}: template {template.hostname} runs BGP but no ASN was assigned")

    renames = _policy_renames(template, fake)
    foreign = _template_addresses(template)
    interface_stanzas = template.stanzas_of(StanzaKind.INTERFACE)
    model = next(
        (s for s in interface_stanzas
         if cisco.InterfaceHandler.view(s).ip and not s.header.split()[1].lower().startswith(_VIRTUAL_PREFIXES)),
        interface_stanzas[0] if interface_stanzas else None,
    )

    lines: list[str] = []

    def emit_interfaces() -> None:
        for index, link in enumerate(assignment.links):
            source = interface_stanzas[min(index, len(interface_stanzas) - 1)] if interface_stanzas else None
            if source is not None:
                lines.extend(source.comments)
            lines.extend(_interface_lines(model, link, renames))

    emitted = False
    for stanza in template.stanzas:
        kind = stanza.kind
        if kind == StanzaKind.INTERFACE:
            if not emitted:
                emit_interfaces()
                emitted = True
            continue
        if kind == StanzaKind.STATIC_ROUTE:
            continue
        if kind == StanzaKind.HOSTNAME:
            lines.extend(stanza.comments)
            lines.append(_replace_word(stanza.header, template.hostname, assignment.hostname))
            continue
        if kind == StanzaKind.ROUTER_OSPF:
            body = _ospf_lines(stanza, assignment, renames, foreign)
        elif kind == StanzaKind.ROUTER_BGP:
            body = _bgp_lines(stanza, assignment, renames, foreign)
        elif kind in (StanzaKind.ACCESS_LIST, StanzaKind.PREFIX_LIST, StanzaKind.ROUTE_MAP, StanzaKind.DISTRIBUTE_LIST_HOST):
            body = [_rename_tokens(line, renames) for line in stanza.lines()]
        else:
            if any(t in foreign for t in stanza.header.split()):
                continue
            body = [stanza.header] + [
                _replace_word(c.raw, template.hostname, assignment.hostname)
                for c in stanza.commands
                if not any(t in foreign for t in c.tokens)
            ]
        lines.extend(stanza.comments)
        lines.extend(body)
    lines.extend(template.trailer)

    cfg = cisco.parse_config("\n".join(lines) + "\n")
    if not emitted:
        for link in assignment.links:
            cisco.add_interface(cfg, link.interface, link.ip, link.mask, cost=link.cost)
    return cfg


# --- worklist expansion ---


class _Expander:
    def __init__(self, plan: ExpansionPlan, snapshot: NetworkSnapshot):
        self.plan = plan
        self.original = snapshot
        self.out = snapshot.copy_deep()
        self.topology = extract_topology(snapshot)
        for router in sorted(plan.new_routers):
            self.topology.add_router(router)
        for u, v in plan.new_edges:
            for node in (u, v):
                self.topology.add_router(node)
            self.topology.add_edge(u, v)
        self.allocator = SubnetAllocator(snapshot)
        self.templates: dict[str, RouterConfig] = {}
        self.assignments: dict[str, FakeAssignment] = {}

    def configured(self, node: str) -> bool:
        return node in self.out.configs or node in self.assignments

    def runs(self, node: str, protocol: str) -> bool:
        cfg = self.templates.get(node) or self.out.configs[node]
        return protocol in cisco.protocols(cfg)

    def configure(self, fake: str, contact: str) -> None:
        asn = self.topology.as_of.get(contact, 0)
        self.topology.as_of[fake] = asn
        template_name = self.plan.template_of.get(fake) or select_template(fake, self.original, self.topology)
        self.plan.template_of[fake] = template_name
        template = self.original.configs[template_name]
        self.templates[fake] = template
        process = cisco.bgp(template)
        self.assignments[fake] = FakeAssignment(
            hostname=fake,
            asn=(asn or process.asn) if process is not None else None,
            router_id=self.allocator.router_id(),
        )
        logger.debug(f"Configured {fake} from {contact} (AS {asn}, template {template_name})")

    def connect(self, u: str, v: str) -> None:
        subnet = self.allocator.link()
        first, second = list(subnet.hosts())[:2]
        mask = str(subnet.netmask)
        same_as = self.topology.as_of.get(u) == self.topology.as_of.get(v)
        ospf = same_as and self.runs(u, "ospf") and self.runs(v, "ospf")
        ebgp = not same_as and self.runs(u, "bgp") and self.runs(v, "bgp")
        ends = ((u, v, str(first), str(second)), (v, u, str(second), str(first)))
        for node, other, ip, peer_ip in ends:
            remote_as = self.topology.as_of.get(other) if ebgp else None
            if node in self.assignments:
                template = self.templates[node]
                assignment = self.assignments[node]
                cost = _median_cost(template) if ospf and (_uses_explicit_costs(template) or _median_cost(template) != DEFAULT_OSPF_COST) else None
                assignment.links.append(LinkAssignment(
                    interface=fake_interface_name(template, [link.interface for link in assignment.links]),
                    ip=ip,
                    mask=mask,
                    peer=other,
                    peer_ip=peer_ip,
                    cost=cost,
                    ospf=ospf,
                    remote_as=remote_as,
                ))
                continue
            cfg = self.out.configs[node]
            cost = _median_cost(cfg) if ospf and (_uses_explicit_costs(cfg) or _median_cost(cfg) != DEFAULT_OSPF_COST) else None
            style = _style_lines(cfg)
            description = f"to {other}" if style and "description" in style else None
            cisco.add_interface(cfg, cisco.next_interface_name(cfg), ip, mask, cost=cost, description=description, style=style)
            if ospf:
                cisco.add_ospf_network(cfg, subnet)
            if remote_as is not None:
                cisco.add_bgp_neighbor(cfg, peer_ip, remote_as)

    def run(self) -> NetworkSnapshot:
        worklist = list(self.plan.new_edges)
        while worklist:
            remaining: list[tuple[str, str]] = []
            progressed = False
            for u, v in worklist:
                if not self.configured(u) and not self.configured(v):
                    remaining.append((u, v))
                    continue
                for node, other in ((u, v), (v, u)):
                    if not self.configured(node):
                        self.configure(node, other)
                self.connect(u, v)
                progressed = True
            if not progressed:
                stuck = sorted({n for edge in remaining for n in edge})
                raise UnreachablePlan(f"routers never adjacent to a configured router: {', '.join(stuck)}")
            worklist = remaining

        for fake in sorted(self.assignments):
            self.out.add_config(generate_fake_config(fake, self.templates[fake], self.assignments[fake]))
        for fake_host in sorted(self.plan.new_hosts):
            self.add_host(fake_host)
        logger.info(
            f"Expanded network: {len(self.assignments)} routers, {len(self.plan.new_edges)} links, "
            f"{len(self.plan.new_hosts)} hosts added"
        )
        return self.out

    def add_host(self, fake_host: str) -> None:
        """Fake host LAN on its gateway, announced like the real host's LAN."""
        real = self.original.hosts[self.plan.host_map[fake_host]]
        gateway = self.plan.host_gateway[fake_host]
        cfg = self.out.configs[gateway]
        real_lan = real.network
        lan = self.allocator.lan(real_lan.prefixlen)
        base = int(real_lan.network_address)
        gateway_ip = IPv4Address(int(lan.network_address) + int(IPv4Address(real.gateway_ip)) - base)
        host_ip = IPv4Address(int(lan.network_address) + int(IPv4Address(real.iface_ip)) - base)
        cisco.add_interface(cfg, cisco.next_interface_name(cfg), str(gateway_ip), real.mask, style=_style_lines(cfg))

        real_cfg = self.original.configs[real.gateway_router]
        real_ospf = cisco.ospf(real_cfg)
        if real_ospf is not None and real_ospf.enabled_on(real.gateway_ip):
            cisco.add_ospf_network(cfg, lan)
        real_bgp = cisco.bgp(real_cfg)
        if real_bgp is not None and str(real_lan) in real_bgp.networks:
            cisco.add_bgp_network(cfg, lan)

        self.out.hosts[fake_host] = HostSpec(
            hostname=fake_host,
            iface_ip=str(host_ip),
            mask=real.mask,
            gateway_router=gateway,
            gateway_ip=str(gateway_ip),
        )


def expand_network(plan: ExpansionPlan, snapshot: NetworkSnapshot) -> NetworkSnapshot:
    """Configure every new link, router and host of ``plan`` on a copy of ``snapshot``.

    Raises:
        UnreachablePlan: some new router is never adjacent to a configured router
        SubnetPoolExhausted: the link or host pool ran out
    """
    if not plan.new_edges and not plan.new_hosts:
        return snapshot.copy_deep()
    return _Expander(plan, snapshot).run()


# --- filter mimicry ---


def _shift(entry_net: IPv4Network, real_lan: IPv4Network, fake_lan: IPv4Network) -> IPv4Network:
    offset = int(entry_net.network_address) - int(real_lan.network_address)
    return IPv4Network((int(fake_lan.network_address) + offset, entry_net.prefixlen))


def _free_seq(current: int, taken: set[int]) -> int | None:
    upper = min((s for s in taken if s > current), default=current + 10)
    for candidate in range(current + 1, upper):
        if candidate not in taken:
            return candidate
    return None


def _translated_line(raw: str, entry_net: IPv4Network, target: IPv4Network, taken_seqs: set[int]) -> str | None:
    parts = re.split(r"(\s+)", raw)
    words = [i for i, part in enumerate(parts) if part and not part.isspace()]
    for position, index in enumerate(words):
        token = parts[index]
        if token == str(entry_net):
            parts[index] = str(target)
        elif token == str(entry_net.network_address):
            parts[index] = str(target.network_address)
        elif position > 0 and parts[words[position - 1]] == "seq" and token.isdigit():
            seq = _free_seq(int(token), taken_seqs)
            if seq is None:
                return None
            parts[index] = str(seq)
            taken_seqs.add(seq)
        elif position == 0 and token.isdigit() and raw[:1].isspace():
            seq = _free_seq(int(token), taken_seqs)
            if seq is None:
                return None
            parts[index] = str(seq)
            taken_seqs.add(seq)
    return "".join(parts)


def mimic_filters(snapshot: NetworkSnapshot, host_map: dict[str, str]) -> NetworkSnapshot:
    """Extend every ACL/prefix-list entry that targets a real host to its fake hosts.

    An entry targets a host when its network lies inside the host's LAN; the
    copy keeps the action and shifts the network into the fake host's LAN. The
    copy is inserted right after the original entry. Running twice changes
    nothing more.
    """
    out = snapshot.copy_deep()
    fakes_of: dict[str, list[str]] = {}
    for fake, real in sorted(host_map.items()):
        fakes_of.setdefault(real, []).append(fake)
    added = 0
    for name in out.routers:
        cfg = out.configs[name]
        for stanza in cfg.stanzas:
            if stanza.kind == StanzaKind.ACCESS_LIST:
                rule = cisco.AccessListHandler.view(stanza)
            elif stanza.kind == StanzaKind.PREFIX_LIST:
                rule = cisco.PrefixListHandler.view(stanza)
            else:
                continue
            existing = cisco.policies(cfg)
            merged = (existing.prefix_lists if stanza.kind == StanzaKind.PREFIX_LIST else existing.acls).get(rule.name, rule)
            present = {(e.action, e.network) for e in merged.entries}
            taken_seqs = {e.seq for e in merged.entries}
            for entry in rule.entries:
                if entry.any or entry.network is None or entry.wildcard is not None:
                    continue
                entry_net = IPv4Network(entry.network)
                anchor = entry.raw
                for real, fakes in fakes_of.items():
                    real_lan = snapshot.hosts[real].network
                    if not entry_net.subnet_of(real_lan):
                        continue
                    for fake in fakes:
                        target = _shift(entry_net, real_lan, out.hosts[fake].network)
                        if (entry.action, str(target)) in present:
                            continue
                        line = _translated_line(entry.raw, entry_net, target, taken_seqs)
                        if line is None:
                            logger.warning(f"{name}: no free sequence number after {entry.raw.strip()!r}")
                            continue
                        cisco.insert_after(stanza, anchor, line)
                        present.add((entry.action, str(target)))
                        anchor = line
                        added += 1
    if added:
        logger.info(f"Filter mimicry: {added} entries added for fake hosts")
    return out
