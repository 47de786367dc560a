"""Pydantic schemas for parsed router configurations and host descriptors.

A RouterConfig is stored as an ordered list of stanzas holding the raw source
lines, so rendering is lossless. The typed views (InterfaceConfig, BgpConfig,
OspfConfig, FilterRule, ...) are derived from the stanzas on demand by the
handlers in ``netveil.parsers.cisco``.
"""

from __future__ import annotations

from enum import Enum
from ipaddress import IPv4Address, IPv4Network
from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from .utils import interface_network, keyword_path, wildcard_match

SCHEMA_VERSION = "1.0"


class StanzaKind(str, Enum):
    INTERFACE = "interface"
    ROUTER_OSPF = "router-ospf"
    ROUTER_BGP = "router-bgp"
    STATIC_ROUTE = "static-route"
    ACCESS_LIST = "access-list"
    PREFIX_LIST = "prefix-list"
    ROUTE_MAP = "route-map"
    DISTRIBUTE_LIST_HOST = "distribute-list"
    HOSTNAME = "hostname"
    OTHER = "other"


class Command(BaseModel):
    """One configuration line with its parameter-stripped keyword path."""

    raw: str = Field(description="Source line, indentation included")
    keyword_path: list[str] = Field(description="Tokens with parameters replaced by placeholders")
    params: list[str] = Field(default_factory=list, description="Parameter tokens in source order")

    @classmethod
    def from_raw(cls, raw: str) -> Command:
        path, params = keyword_path(raw.split())
        return cls(raw=raw, keyword_path=path, params=params)

    @property
    def tokens(self) -> list[str]:
        return self.raw.split()

    @property
    def indent(self) -> str:
        return self.raw[: len(self.raw) - len(self.raw.lstrip())]

    @property
    def signature(self) -> str:
        return " ".join(self.keyword_path)


class Stanza(BaseModel):
    """A top-level block: its header line, owned commands and leading comments."""

    kind: StanzaKind
    header: str = Field(description="Raw header line")
    commands: list[Command] = Field(default_factory=list)
    comments: list[str] = Field(
        default_factory=list,
        description="Comment and blank lines preceding the header, verbatim",
    )
    group: str | None = Field(
        default=None,
        description="Grouping key for line stanzas (ACL number, prefix-list name)",
    )

    @property
    def header_command(self) -> Command:
        return Command.from_raw(self.header)

    @property
    def name(self) -> str | None:
        tokens = self.header.split()
        if self.kind in (StanzaKind.INTERFACE, StanzaKind.ROUTE_MAP, StanzaKind.HOSTNAME) and len(tokens) > 1:
            return tokens[1]
        return self.group

    def lines(self) -> list[str]:
        return [self.header] + [c.raw for c in self.commands]


class RouterConfig(BaseModel):
    """A parsed router configuration file."""

    hostname: str = Field(description="Value of the hostname command")
    stanzas: list[Stanza] = Field(default_factory=list)
    trailer: list[str] = Field(
        default_factory=list, description="Comment lines after the last stanza"
    )
    raw_lines: list[str] = Field(default_factory=list, description="Source lines as read")

    @property
    def indent(self) -> str:
        """Indentation convention of the nested commands (most common prefix)."""
        counts: dict[str, int] = {}
        for stanza in self.stanzas:
            for command in stanza.commands:
                if command.indent:
                    counts[command.indent] = counts.get(command.indent, 0) + 1
        if not counts:
            return " "
        return max(sorted(counts), key=lambda k: counts[k])

    def stanzas_of(self, kind: StanzaKind) -> list[Stanza]:
        return [s for s in self.stanzas if s.kind == kind]

    def first(self, kind: StanzaKind) -> Stanza | None:
        for stanza in self.stanzas:
            if stanza.kind == kind:
                return stanza
        return None

    def kind_sequence(self) -> list[StanzaKind]:
        return [s.kind for s in self.stanzas]


# --- typed views ---


class InterfaceConfig(BaseModel):
    name: str
    ip: str | None = None
    mask: str | None = None
    ospf_cost: int | None = Field(default=None, ge=1, le=65535)
    shutdown: bool = False
    description: str | None = None

    @property
    def network(self) -> IPv4Network | None:
        if self.ip is None or self.mask is None:
            return None
        return interface_network(self.ip, self.mask)

    @property
    def up(self) -> bool:
        return not self.shutdown and self.ip is not None


class DistributeList(BaseModel):
    """A distribute-list binding of an ACL or prefix-list to a direction."""

    target: str
    is_prefix_list: bool = False
    direction: Literal["in", "out"] = "in"
    interface: str | None = None


class OspfNetwork(BaseModel):
    base: str
    wildcard: str
    area: str = "0"

    def covers(self, ip: str) -> bool:
        return wildcard_match(ip, self.base, self.wildcard)


class OspfConfig(BaseModel):
    process_id: int
    router_id: str | None = None
    networks: list[OspfNetwork] = Field(default_factory=list)
    redistributes: list[str] = Field(default_factory=list)
    distribute_lists: list[DistributeList] = Field(default_factory=list)
    passive_interfaces: list[str] = Field(default_factory=list)

    def enabled_on(self, ip: str) -> bool:
        return any(n.covers(ip) for n in self.networks)


class BgpNeighbor(BaseModel):
    """Neighbor or peer-group attributes as written; see BgpConfig.resolve."""

    key: str = Field(description="Peer IP or peer-group name")
    is_group: bool = False
    remote_as: int | None = None
    peer_group: str | None = None
    route_map_in: str | None = None
    route_map_out: str | None = None
    prefix_list_in: str | None = None
    prefix_list_out: str | None = None
    distribute_list_in: str | None = None
    distribute_list_out: str | None = None
    next_hop_self: bool = False


class BgpConfig(BaseModel):
    asn: int = Field(ge=1, le=4294967295)
    router_id: str | None = None
    neighbors: dict[str, BgpNeighbor] = Field(default_factory=dict)
    networks: list[str] = Field(default_factory=list, description="Originated prefixes, CIDR")
    redistributes: list[str] = Field(default_factory=list)
    distribute_lists: list[DistributeList] = Field(default_factory=list)

    @property
    def peer_groups(self) -> dict[str, BgpNeighbor]:
        return {k: n for k, n in self.neighbors.items() if n.is_group}

    def members(self, group: str) -> list[str]:
        return [k for k, n in self.neighbors.items() if not n.is_group and n.peer_group == group]

    def peer_ips(self) -> list[str]:
        return [k for k, n in self.neighbors.items() if not n.is_group]

    def resolve(self, peer_ip: str) -> BgpNeighbor | None:
        """Neighbor attributes with peer-group values filled in."""
        own = self.neighbors.get(peer_ip)
        if own is None or own.is_group:
            return None
        if own.peer_group is None or own.peer_group not in self.neighbors:
            return own
        group = self.neighbors[own.peer_group]
        merged = group.model_dump()
        for field, value in own.model_dump().items():
            if value not in (None, False):
                merged[field] = value
        merged["key"] = peer_ip
        merged["is_group"] = False
        merged["next_hop_self"] = own.next_hop_self or group.next_hop_self
        return BgpNeighbor(**merged)


class StaticRoute(BaseModel):
    prefix: str
    next_hop: str = Field(description="Next-hop IP or interface name")
    distance: int = 1

    @property
    def network(self) -> IPv4Network:
        return IPv4Network(self.prefix)


class FilterKind(str, Enum):
    STD_ACL = "std-acl"
    EXT_ACL = "ext-acl"
    PREFIX_LIST = "prefix-list"
    ROUTE_MAP = "route-map"
    DISTRIBUTE_LIST = "distribute-list"


class FilterEntry(BaseModel):
    action: Literal["permit", "deny"]
    seq: int
    network: str | None = Field(default=None, description="Matched network, CIDR")
    wildcard: str | None = Field(default=None, description="Non-contiguous ACL wildcard")
    any: bool = False
    ge: int | None = None
    le: int | None = None
    match_lists: list[str] = Field(default_factory=list, description="Route-map match references")
    raw: str = ""

    def matches(self, prefix: IPv4Network, prefix_list_semantics: bool) -> bool:
        if self.any:
            return True
        if self.network is None:
            return False
        entry = IPv4Network(self.network)
        if self.wildcard is not None:
            return wildcard_match(prefix.network_address, str(entry.network_address), self.wildcard)
        if not prefix_list_semantics:
            # ACLs used as route filters compare the network address only
            return prefix.network_address in entry
        if not prefix.subnet_of(entry):
            return False
        if self.ge is None and self.le is None:
            return prefix.prefixlen == entry.prefixlen
        low = self.ge if self.ge is not None else entry.prefixlen
        high = self.le if self.le is not None else 32
        return low <= prefix.prefixlen <= high


class FilterRule(BaseModel):
    kind: FilterKind
    name: str
    entries: list[FilterEntry] = Field(default_factory=list)

    def ordered(self) -> list[FilterEntry]:
        return sorted(self.entries, key=lambda e: e.seq)


class PolicyTable(BaseModel):
    """All filter objects of one router, by namespace."""

    acls: dict[str, FilterRule] = Field(default_factory=dict)
    prefix_lists: dict[str, FilterRule] = Field(default_factory=dict)
    route_maps: dict[str, FilterRule] = Field(default_factory=dict)

    def all_rules(self) -> list[FilterRule]:
        return [*self.acls.values(), *self.prefix_lists.values(), *self.route_maps.values()]

    def evaluate(self, rule: FilterRule, prefix: IPv4Network) -> bool:
        if rule.kind == FilterKind.ROUTE_MAP:
            for entry in rule.ordered():
                if self._route_map_entry_matches(entry, prefix):
                    return entry.action == "permit"
            return False
        prefix_semantics = rule.kind == FilterKind.PREFIX_LIST
        for entry in rule.ordered():
            if entry.matches(prefix, prefix_semantics):
                return entry.action == "permit"
        return False

    def _route_map_entry_matches(self, entry: FilterEntry, prefix: IPv4Network) -> bool:
        if not entry.match_lists:
            return True
        for reference in entry.match_lists:
            family, _, name = reference.partition(":")
            table = self.prefix_lists if family == "prefix-list" else self.acls
            rule = table.get(name)
            # an undefined list matches everything
            if rule is None or self.evaluate(rule, prefix):
                return True
        return False

    def permits(
        self,
        prefix: IPv4Network,
        *,
        acl: str | None = None,
        prefix_list: str | None = None,
        route_map: str | None = None,
    ) -> bool:
        """Whether every given filter permits ``prefix``.

        A route-map name with no definition denies everything, as on IOS. An
        undefined prefix-list or ACL permits everything, which is how IOS
        treats a missing list behind a neighbor or distribute-list binding.
        """
        if route_map is not None and route_map not in self.route_maps:
            return False
        for name, table in ((acl, self.acls), (prefix_list, self.prefix_lists), (route_map, self.route_maps)):
            if name is None:
                continue
            rule = table.get(name)
            if rule is not None and not self.evaluate(rule, prefix):
                return False
        return True


class HostSpec(BaseModel):
    """A host descriptor (JSON sidecar)."""

    hostname: str = Field(min_length=1)
    iface_ip: str
    mask: str
    gateway_router: str = Field(min_length=1)
    gateway_ip: str

    @field_validator("iface_ip", "gateway_ip")
    @classmethod
    def _valid_address(cls, value: str) -> str:
        IPv4Address(value)
        return value

    @field_validator("mask")
    @classmethod
    def _valid_mask(cls, value: str) -> str:
        IPv4Network(f"0.0.0.0/{value}")
        return value

    @model_validator(mode="after")
    def _gateway_in_subnet(self) -> HostSpec:
        if IPv4Address(self.gateway_ip) not in self.network:
            raise ValueError(f"gateway {self.gateway_ip} outside {self.network}")
        if self.gateway_ip == self.iface_ip:
            raise ValueError("host and gateway share an address")
        return self

    @property
    def network(self) -> IPv4Network:
        return interface_network(self.iface_ip, self.mask)
