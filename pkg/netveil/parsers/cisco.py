"""Parser, renderer and editor for Cisco-style router configurations.

The parser keeps every source line: stanza headers, nested commands, comments
and blank lines. Rendering an untouched RouterConfig reproduces its source.
Edits only ever add lines (new stanzas, appended commands), so the original
lines of a real router survive verbatim.
"""

from __future__ import annotations

import logging
import re
from ipaddress import IPv4Network

from ..errors import DuplicateHostname, MissingHostname
from .base import BaseStanzaHandler, StanzaRegistry, register
from .schema import (
    BgpConfig,
    BgpNeighbor,
    Command,
    DistributeList,
    FilterEntry,
    FilterKind,
    FilterRule,
    InterfaceConfig,
    OspfConfig,
    OspfNetwork,
    PolicyTable,
    RouterConfig,
    Stanza,
    StanzaKind,
    StaticRoute,
)
from .utils import is_ipv4, is_prefix, mask_to_prefixlen, prefixlen_to_wildcard

logger = logging.getLogger(__name__)

_TRAILING_NUMBER = re.compile(r"^(.*?)(\d+)$")


def _is_int(token: str, low: int = 0, high: int = 2**32 - 1) -> bool:
    return token.isdigit() and low <= int(token) <= high


def _is_mask(token: str) -> bool:
    if not is_ipv4(token):
        return False
    try:
        mask_to_prefixlen(token)
    except ValueError:
        return False
    return True


# --- stanza handlers ---


@register(StanzaKind.HOSTNAME)
class HostnameHandler(BaseStanzaHandler):
    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.HOSTNAME

    def matches(self, tokens: list[str]) -> bool:
        return tokens[0] == "hostname"

    def validate(self, command: Command, line_no: int) -> None:
        if command.tokens[0] == "hostname" and len(command.tokens) != 2:
            raise self.fail(line_no, command, "hostname takes exactly one name")


@register(StanzaKind.INTERFACE)
class InterfaceHandler(BaseStanzaHandler):
    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.INTERFACE

    def matches(self, tokens: list[str]) -> bool:
        return tokens[0] == "interface" and len(tokens) >= 2

    def validate(self, command: Command, line_no: int) -> None:
        tokens = command.tokens
        if tokens[:2] == ["ip", "address"]:
            if len(tokens) >= 3 and tokens[2] in ("dhcp", "negotiated"):
                return
            if len(tokens) < 4 or not is_ipv4(tokens[2]) or not _is_mask(tokens[3]):
                raise self.fail(line_no, command, "expected 'ip address <ip> <mask>'")
        elif tokens[:3] == ["ip", "ospf", "cost"]:
            if len(tokens) != 4 or not _is_int(tokens[3], 1, 65535):
                raise self.fail(line_no, command, "ospf cost must be in [1, 65535]")

    @staticmethod
    def view(stanza: Stanza) -> InterfaceConfig:
        iface = InterfaceConfig(name=stanza.header.split()[1])
        for command in stanza.commands:
            tokens = command.tokens
            if tokens[:2] == ["ip", "address"] and len(tokens) >= 4 and is_ipv4(tokens[2]):
                if len(tokens) == 4 or tokens[4] != "secondary":
                    iface.ip, iface.mask = tokens[2], tokens[3]
            elif tokens[:3] == ["ip", "ospf", "cost"]:
                iface.ospf_cost = int(tokens[3])
            elif tokens == ["shutdown"]:
                iface.shutdown = True
            elif tokens == ["no", "shutdown"]:
                iface.shutdown = False
            elif tokens[0] == "description":
                iface.description = command.raw.strip()[len("description"):].strip()
        return iface


def _parse_distribute_list(tokens: list[str]) -> DistributeList | None:
    # distribute-list [prefix] NAME in|out [IFACE]
    rest = tokens[1:]
    is_prefix_list = bool(rest) and rest[0] == "prefix"
    if is_prefix_list:
        rest = rest[1:]
    if len(rest) < 2 or rest[1] not in ("in", "out"):
        return None
    return DistributeList(
        target=rest[0],
        is_prefix_list=is_prefix_list,
        direction=rest[1],
        interface=rest[2] if len(rest) > 2 else None,
    )


@register(StanzaKind.ROUTER_OSPF)
class RouterOspfHandler(BaseStanzaHandler):
    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.ROUTER_OSPF

    def matches(self, tokens: list[str]) -> bool:
        return tokens[:2] == ["router", "ospf"]

    def validate(self, command: Command, line_no: int) -> None:
        tokens = command.tokens
        if tokens[:2] == ["router", "ospf"]:
            if len(tokens) < 3 or not _is_int(tokens[2], 1, 65535):
                raise self.fail(line_no, command, "expected 'router ospf <process-id>'")
        elif tokens[0] == "network":
            if len(tokens) < 5 or not is_ipv4(tokens[1]) or not is_ipv4(tokens[2]) or tokens[3] != "area":
                raise self.fail(line_no, command, "expected 'network <ip> <wildcard> area <id>'")
        elif tokens[0] == "distribute-list" and _parse_distribute_list(tokens) is None:
            raise self.fail(line_no, command, "expected 'distribute-list [prefix] <name> in|out [iface]'")

    @staticmethod
    def view(stanza: Stanza) -> OspfConfig:
        ospf = OspfConfig(process_id=int(stanza.header.split()[2]))
        for command in stanza.commands:
            tokens = command.tokens
            if tokens[0] == "network" and len(tokens) >= 5:
                ospf.networks.append(OspfNetwork(base=tokens[1], wildcard=tokens[2], area=tokens[4]))
            elif tokens[0] == "redistribute" and len(tokens) >= 2:
                ospf.redistributes.append(tokens[1])
            elif tokens[0] == "distribute-list":
                binding = _parse_distribute_list(tokens)
                if binding is not None:
                    ospf.distribute_lists.append(binding)
            elif tokens[0] == "passive-interface" and len(tokens) >= 2:
                ospf.passive_interfaces.append(tokens[1])
            elif tokens[0] == "router-id" and len(tokens) >= 2:
                ospf.router_id = tokens[1]
        return ospf


_NEIGHBOR_FILTERS = {
    ("route-map", "in"): "route_map_in",
    ("route-map", "out"): "route_map_out",
    ("prefix-list", "in"): "prefix_list_in",
    ("prefix-list", "out"): "prefix_list_out",
    ("distribute-list", "in"): "distribute_list_in",
    ("distribute-list", "out"): "distribute_list_out",
}


@register(StanzaKind.ROUTER_BGP)
class RouterBgpHandler(BaseStanzaHandler):
    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.ROUTER_BGP

    def matches(self, tokens: list[str]) -> bool:
        return tokens[:2] == ["router", "bgp"]

    def validate(self, command: Command, line_no: int) -> None:
        tokens = command.tokens
        if tokens[:2] == ["router", "bgp"]:
            if len(tokens) != 3 or not _is_int(tokens[2], 1, 4294967295):
                raise self.fail(line_no, command, "ASN must be in [1, 4294967295]")
        elif tokens[0] == "neighbor":
            if len(tokens) < 3:
                raise self.fail(line_no, command, "incomplete neighbor statement")
            if tokens[2] == "remote-as" and (len(tokens) < 4 or not _is_int(tokens[3], 1)):
                raise self.fail(line_no, command, "remote-as needs an ASN")
            if tokens[2] in ("route-map", "prefix-list", "distribute-list"):
                if len(tokens) < 5 or tokens[4] not in ("in", "out"):
                    raise self.fail(line_no, command, f"{tokens[2]} needs a name and a direction")
        elif tokens[0] == "network":
            if len(tokens) < 2 or not (is_ipv4(tokens[1]) or is_prefix(tokens[1])):
                raise self.fail(line_no, command, "expected 'network <ip> [mask <mask>]'")
            if len(tokens) >= 4 and tokens[2] == "mask" and not _is_mask(tokens[3]):
                raise self.fail(line_no, command, "bad network mask")

    def finish(self, stanza: Stanza, line_no: int) -> None:
        declared = set()
        members: list[tuple[int, Command, str]] = []
        for offset, command in enumerate(stanza.commands, start=1):
            tokens = command.tokens
            if tokens[0] != "neighbor" or len(tokens) < 3 or tokens[2] != "peer-group":
                continue
            if len(tokens) == 3:
                declared.add(tokens[1])
            else:
                members.append((line_no + offset, command, tokens[3]))
        for member_line, command, group in members:
            if group not in declared:
                raise self.fail(member_line, command, f"undeclared peer-group {group}")

    @staticmethod
    def view(stanza: Stanza) -> BgpConfig:
        cfg = BgpConfig(asn=int(stanza.header.split()[2]))
        for command in stanza.commands:
            tokens = command.tokens
            if tokens[0] == "neighbor" and len(tokens) >= 3:
                key = tokens[1]
                neighbor = cfg.neighbors.setdefault(key, BgpNeighbor(key=key))
                verb = tokens[2]
                if verb == "peer-group":
                    if len(tokens) == 3:
                        neighbor.is_group = True
                    else:
                        neighbor.peer_group = tokens[3]
                elif verb == "remote-as":
                    neighbor.remote_as = int(tokens[3])
                elif verb == "next-hop-self":
                    neighbor.next_hop_self = True
                elif (verb, tokens[-1]) in _NEIGHBOR_FILTERS and len(tokens) >= 5:
                    setattr(neighbor, _NEIGHBOR_FILTERS[(verb, tokens[-1])], tokens[3])
            elif tokens[0] == "network" and len(tokens) >= 2:
                if is_prefix(tokens[1]):
                    cfg.networks.append(str(IPv4Network(tokens[1], strict=False)))
                elif len(tokens) >= 4 and tokens[2] == "mask":
                    cfg.networks.append(str(IPv4Network(f"{tokens[1]}/{tokens[3]}", strict=False)))
                else:
                    # classful default
                    first = int(tokens[1].split(".")[0])
                    length = 8 if first < 128 else 16 if first < 192 else 24
                    cfg.networks.append(str(IPv4Network(f"{tokens[1]}/{length}", strict=False)))
            elif tokens[0] == "redistribute" and len(tokens) >= 2:
                cfg.redistributes.append(tokens[1])
            elif tokens[:2] == ["bgp", "router-id"] and len(tokens) >= 3:
                cfg.router_id = tokens[2]
            elif tokens[0] == "distribute-list":
                binding = _parse_distribute_list(tokens)
                if binding is not None:
                    cfg.distribute_lists.append(binding)
        return cfg


@register(StanzaKind.STATIC_ROUTE)
class StaticRouteHandler(BaseStanzaHandler):
    groups_lines = True

    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.STATIC_ROUTE

    def matches(self, tokens: list[str]) -> bool:
        return tokens[:2] == ["ip", "route"]

    def group_key(self, tokens: list[str]) -> str | None:
        return "static"

    def validate(self, command: Command, line_no: int) -> None:
        tokens = command.tokens
        if len(tokens) < 5 or not is_ipv4(tokens[2]) or not _is_mask(tokens[3]):
            raise self.fail(line_no, command, "expected 'ip route <prefix> <mask> <next-hop> [distance]'")
        if len(tokens) >= 6 and tokens[5].isdigit() and not _is_int(tokens[5], 1, 255):
            raise self.fail(line_no, command, "distance must be in [1, 255]")

    @staticmethod
    def view(stanza: Stanza) -> list[StaticRoute]:
        routes = []
        for line in stanza.lines():
            tokens = line.split()
            if tokens[:2] != ["ip", "route"] or len(tokens) < 5:
                continue
            distance = int(tokens[5]) if len(tokens) >= 6 and tokens[5].isdigit() else 1
            prefix = str(IPv4Network(f"{tokens[2]}/{tokens[3]}", strict=False))
            routes.append(StaticRoute(prefix=prefix, next_hop=tokens[4], distance=distance))
        return routes


def _acl_kind(name: str, extended_hint: bool) -> FilterKind:
    if extended_hint:
        return FilterKind.EXT_ACL
    if name.isdigit() and (100 <= int(name) <= 199 or 2000 <= int(name) <= 2699):
        return FilterKind.EXT_ACL
    return FilterKind.STD_ACL


def _acl_match(tokens: list[str]) -> tuple[str | None, str | None, bool, int]:
    """Parse an ACL address spec; returns (network, wildcard, any, consumed)."""
    if not tokens:
        return None, None, False, 0
    if tokens[0] == "any":
        return None, None, True, 1
    if tokens[0] == "host" and len(tokens) >= 2:
        return f"{tokens[1]}/32", None, False, 2
    if is_ipv4(tokens[0]):
        if len(tokens) >= 2 and is_ipv4(tokens[1]):
            try:
                network = IPv4Network(f"{tokens[0]}/{tokens[1]}", strict=False)
            except ValueError:
                return f"{tokens[0]}/32", tokens[1], False, 2
            return str(network), None, False, 2
        return f"{tokens[0]}/32", None, False, 1
    return None, None, False, 0


def _acl_entry(body: list[str], seq: int, kind: FilterKind, raw: str) -> FilterEntry | None:
    # body starts at the action token
    if not body or body[0] not in ("permit", "deny"):
        return None
    spec = body[1:]
    if kind == FilterKind.EXT_ACL and spec and spec[0] in ("ip", "tcp", "udp", "icmp"):
        spec = spec[1:]
    network, wildcard, is_any, _ = _acl_match(spec)
    return FilterEntry(action=body[0], seq=seq, network=network, wildcard=wildcard, any=is_any, raw=raw)


@register(StanzaKind.ACCESS_LIST)
class AccessListHandler(BaseStanzaHandler):
    groups_lines = True

    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.ACCESS_LIST

    def matches(self, tokens: list[str]) -> bool:
        if tokens[0] == "access-list" and len(tokens) >= 2:
            return True
        return tokens[:2] == ["ip", "access-list"] and len(tokens) >= 4

    def group_key(self, tokens: list[str]) -> str | None:
        if tokens[0] == "access-list":
            return tokens[1]
        return None

    def validate(self, command: Command, line_no: int) -> None:
        tokens = command.tokens
        if tokens[0] == "access-list":
            if len(tokens) < 3 or tokens[2] not in ("permit", "deny", "remark"):
                raise self.fail(line_no, command, "ACL action must be permit, deny or remark")
        elif tokens[:2] == ["ip", "access-list"]:
            if tokens[2] not in ("standard", "extended"):
                raise self.fail(line_no, command, "named ACL must be standard or extended")
        elif command.indent:
            body = tokens[1:] if tokens[0].isdigit() else tokens
            if not body or body[0] not in ("permit", "deny", "remark"):
                raise self.fail(line_no, command, "ACL action must be permit, deny or remark")

    @staticmethod
    def view(stanza: Stanza) -> FilterRule:
        header = stanza.header.split()
        if header[0] == "access-list":
            name = header[1]
            kind = _acl_kind(name, False)
            rule = FilterRule(kind=kind, name=name)
            for index, line in enumerate(stanza.lines()):
                entry = _acl_entry(line.split()[2:], (index + 1) * 10, kind, line)
                if entry is not None:
                    rule.entries.append(entry)
            return rule
        name = header[3]
        kind = _acl_kind(name, header[2] == "extended")
        rule = FilterRule(kind=kind, name=name)
        for index, command in enumerate(stanza.commands):
            tokens = command.tokens
            seq = (index + 1) * 10
            if tokens[0].isdigit():
                seq = int(tokens[0])
                tokens = tokens[1:]
            entry = _acl_entry(tokens, seq, kind, command.raw)
            if entry is not None:
                rule.entries.append(entry)
        return rule


def _prefix_list_entry(tokens: list[str], default_seq: int, raw: str) -> FilterEntry | None:
    # ip prefix-list NAME [seq N] permit|deny A/L [ge N] [le N]
    rest = tokens[3:]
    seq = default_seq
    if rest[:1] == ["seq"] and len(rest) >= 2 and rest[1].isdigit():
        seq = int(rest[1])
        rest = rest[2:]
    if len(rest) < 2 or rest[0] not in ("permit", "deny"):
        return None
    entry = FilterEntry(action=rest[0], seq=seq, network=str(IPv4Network(rest[1], strict=False)), raw=raw)
    options = rest[2:]
    for keyword, value in zip(options[::2], options[1::2]):
        if keyword == "ge":
            entry.ge = int(value)
        elif keyword == "le":
            entry.le = int(value)
    return entry


@register(StanzaKind.PREFIX_LIST)
class PrefixListHandler(BaseStanzaHandler):
    groups_lines = True

    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.PREFIX_LIST

    def matches(self, tokens: list[str]) -> bool:
        return tokens[:2] == ["ip", "prefix-list"] and len(tokens) >= 3

    def group_key(self, tokens: list[str]) -> str | None:
        return tokens[2]

    def validate(self, command: Command, line_no: int) -> None:
        tokens = command.tokens
        if len(tokens) >= 4 and tokens[3] == "description":
            return
        rest = tokens[3:]
        if rest[:1] == ["seq"]:
            if len(rest) < 2 or not rest[1].isdigit():
                raise self.fail(line_no, command, "seq needs a number")
            rest = rest[2:]
        if len(rest) < 2 or rest[0] not in ("permit", "deny") or not is_prefix(rest[1]):
            raise self.fail(line_no, command, "expected 'permit|deny <prefix>/<len>'")

    @staticmethod
    def view(stanza: Stanza) -> FilterRule:
        name = stanza.header.split()[2]
        rule = FilterRule(kind=FilterKind.PREFIX_LIST, name=name)
        seq = 0
        for line in stanza.lines():
            seq += 5
            entry = _prefix_list_entry(line.split(), seq, line)
            if entry is not None:
                seq = entry.seq
                rule.entries.append(entry)
        return rule


@register(StanzaKind.ROUTE_MAP)
class RouteMapHandler(BaseStanzaHandler):
    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.ROUTE_MAP

    def matches(self, tokens: list[str]) -> bool:
        return tokens[0] == "route-map" and len(tokens) >= 2

    def validate(self, command: Command, line_no: int) -> None:
        tokens = command.tokens
        if tokens[0] == "route-map":
            if len(tokens) >= 3 and tokens[2] not in ("permit", "deny"):
                raise self.fail(line_no, command, "route-map action must be permit or deny")
            if len(tokens) >= 4 and not tokens[3].isdigit():
                raise self.fail(line_no, command, "route-map sequence must be a number")

    @staticmethod
    def entry(stanza: Stanza) -> FilterEntry:
        header = stanza.header.split()
        action = header[2] if len(header) >= 3 else "permit"
        seq = int(header[3]) if len(header) >= 4 else 10
        entry = FilterEntry(action=action, seq=seq, raw=stanza.header)
        for command in stanza.commands:
            tokens = command.tokens
            if tokens[:3] != ["match", "ip", "address"]:
                continue
            if len(tokens) >= 5 and tokens[3] == "prefix-list":
                entry.match_lists.extend(f"prefix-list:{name}" for name in tokens[4:])
            else:
                entry.match_lists.extend(f"acl:{name}" for name in tokens[3:])
        if not entry.match_lists:
            entry.any = True
        return entry


@register(StanzaKind.DISTRIBUTE_LIST_HOST)
class DistributeListHostHandler(BaseStanzaHandler):
    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.DISTRIBUTE_LIST_HOST

    def matches(self, tokens: list[str]) -> bool:
        return tokens[0] == "distribute-list"


@register(StanzaKind.OTHER)
class OtherHandler(BaseStanzaHandler):
    @property
    def kind(self) -> StanzaKind:
        return StanzaKind.OTHER

    def matches(self, tokens: list[str]) -> bool:
        return True


# --- parse / render ---


def parse_config(text: str) -> RouterConfig:
    """Parse a router configuration.

    Args:
        text: Configuration text, one statement per line

    Returns:
        RouterConfig whose stanzas own every non-comment line

    Raises:
        MalformedLine: a line inside a recognized stanza violates its grammar
        DuplicateHostname: more than one hostname statement
        MissingHostname: no hostname statement
    """
    lines = text.splitlines()
    stanzas: list[Stanza] = []
    pending: list[str] = []
    current: Stanza | None = None
    current_handler: BaseStanzaHandler | None = None
    current_line = 0
    hostname: str | None = None

    def close() -> None:
        if current is not None and current_handler is not None:
            current_handler.finish(current, current_line)

    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        indented = line[:1] in (" ", "\t")

        if not stripped or (stripped.startswith("!") and not indented):
            pending.append(line)
            continue

        if indented and current is not None and current_handler is not None:
            for comment in pending:
                current.commands.append(Command.from_raw(comment))
            pending = []
            command = Command.from_raw(line)
            if not stripped.startswith("!"):
                current_handler.validate(command, line_no)
            current.commands.append(command)
            continue

        tokens = stripped.split()
        handler = StanzaRegistry.classify(tokens) if not indented else StanzaRegistry.create(StanzaKind.OTHER)
        header = Command.from_raw(line)
        handler.validate(header, line_no)

        if handler.kind == StanzaKind.HOSTNAME:
            if hostname is not None:
                raise DuplicateHostname(f"line {line_no}: second hostname {tokens[1]!r}")
            hostname = tokens[1]

        key = handler.group_key(tokens) if handler.groups_lines else None
        if (
            handler.groups_lines
            and current is not None
            and not pending
            and current.kind == handler.kind
            and current.group == key
            and not current.header[:1].isspace()
            and all(not c.indent for c in current.commands)
        ):
            current.commands.append(header)
            continue

        close()
        current = Stanza(kind=handler.kind, header=line, comments=pending, group=key)
        current_handler = handler
        current_line = line_no
        pending = []
        stanzas.append(current)

    close()
    if hostname is None:
        raise MissingHostname("configuration has no hostname statement")
    return RouterConfig(hostname=hostname, stanzas=stanzas, trailer=pending, raw_lines=lines)


def render_config(cfg: RouterConfig) -> str:
    """Render a RouterConfig back to text (newline-terminated)."""
    out: list[str] = []
    for stanza in cfg.stanzas:
        out.extend(stanza.comments)
        out.extend(stanza.lines())
    out.extend(cfg.trailer)
    return "\n".join(out) + "\n" if out else ""


# --- typed views ---


def interfaces(cfg: RouterConfig) -> list[InterfaceConfig]:
    return [InterfaceHandler.view(s) for s in cfg.stanzas_of(StanzaKind.INTERFACE)]


def interface(cfg: RouterConfig, name: str) -> InterfaceConfig | None:
    for iface in interfaces(cfg):
        if iface.name == name:
            return iface
    return None


def ospf(cfg: RouterConfig) -> OspfConfig | None:
    stanza = cfg.first(StanzaKind.ROUTER_OSPF)
    return RouterOspfHandler.view(stanza) if stanza is not None else None


def bgp(cfg: RouterConfig) -> BgpConfig | None:
    stanza = cfg.first(StanzaKind.ROUTER_BGP)
    return RouterBgpHandler.view(stanza) if stanza is not None else None


def static_routes(cfg: RouterConfig) -> list[StaticRoute]:
    routes: list[StaticRoute] = []
    for stanza in cfg.stanzas_of(StanzaKind.STATIC_ROUTE):
        routes.extend(StaticRouteHandler.view(stanza))
    return routes


def policies(cfg: RouterConfig) -> PolicyTable:
    """Collect ACLs, prefix-lists and route-maps of a router."""
    table = PolicyTable()
    for stanza in cfg.stanzas:
        if stanza.kind == StanzaKind.ACCESS_LIST:
            rule = AccessListHandler.view(stanza)
            existing = table.acls.get(rule.name)
            if existing is not None:
                offset = len(existing.entries) * 10
                for entry in rule.entries:
                    entry.seq += offset
                existing.entries.extend(rule.entries)
            else:
                table.acls[rule.name] = rule
        elif stanza.kind == StanzaKind.PREFIX_LIST:
            rule = PrefixListHandler.view(stanza)
            existing = table.prefix_lists.get(rule.name)
            if existing is not None:
                existing.entries.extend(rule.entries)
            else:
                table.prefix_lists[rule.name] = rule
        elif stanza.kind == StanzaKind.ROUTE_MAP:
            name = stanza.header.split()[1]
            rule = table.route_maps.setdefault(name, FilterRule(kind=FilterKind.ROUTE_MAP, name=name))
            rule.entries.append(RouteMapHandler.entry(stanza))
    return table


def ospf_enabled_interfaces(cfg: RouterConfig) -> list[InterfaceConfig]:
    process = ospf(cfg)
    if process is None:
        return []
    return [i for i in interfaces(cfg) if i.up and process.enabled_on(i.ip)]


def protocols(cfg: RouterConfig) -> set[str]:
    found = set()
    if cfg.first(StanzaKind.ROUTER_OSPF) is not None:
        found.add("ospf")
    if cfg.first(StanzaKind.ROUTER_BGP) is not None:
        found.add("bgp")
    if cfg.first(StanzaKind.STATIC_ROUTE) is not None:
        found.add("static")
    return found


def router_id(cfg: RouterConfig) -> str:
    """BGP/OSPF router id: explicit setting, else the highest interface address."""
    process = bgp(cfg)
    if process is not None and process.router_id:
        return process.router_id
    igp = ospf(cfg)
    if igp is not None and igp.router_id:
        return igp.router_id
    addresses = [i.ip for i in interfaces(cfg) if i.up]
    if not addresses:
        return "0.0.0.0"
    return max(addresses, key=lambda ip: tuple(int(part) for part in ip.split(".")))


# --- editing ---


def new_command(cfg: RouterConfig, text: str, nested: bool = True) -> Command:
    return Command.from_raw(f"{cfg.indent}{text}" if nested else text)


def append_command(cfg: RouterConfig, stanza: Stanza, text: str) -> Command:
    command = new_command(cfg, text)
    stanza.commands.append(command)
    return command


def insert_stanza(cfg: RouterConfig, stanza: Stanza) -> None:
    """Insert a new stanza after the last stanza of the same kind.

    Without a stanza of the same kind the new one goes before a trailing
    ``end`` statement, or at the end.
    """
    position = None
    for index, existing in enumerate(cfg.stanzas):
        if existing.kind == stanza.kind:
            position = index + 1
    if position is None:
        position = len(cfg.stanzas)
        if cfg.stanzas and cfg.stanzas[-1].header.strip() == "end":
            position -= 1
    if stanza.kind != StanzaKind.HOSTNAME and not stanza.comments:
        marker = _separator(cfg)
        if marker is not None:
            stanza.comments = [marker]
    cfg.stanzas.insert(position, stanza)


def _separator(cfg: RouterConfig) -> str | None:
    """The comment line that separates stanzas in this config, if any."""
    counts: dict[str, int] = {}
    for stanza in cfg.stanzas:
        for comment in stanza.comments:
            counts[comment] = counts.get(comment, 0) + 1
    if not counts:
        return None
    best = max(sorted(counts), key=lambda c: counts[c])
    return best if best.strip() in ("!", "") else None


def next_interface_name(cfg: RouterConfig, like: RouterConfig | None = None) -> str:
    """Continue the interface numbering of ``like`` (default: ``cfg`` itself)."""
    taken = {i.name for i in interfaces(cfg)}
    source = like if like is not None else cfg
    names = [i.name for i in interfaces(source)]
    pattern = None
    for name in reversed(names):
        match = _TRAILING_NUMBER.match(name)
        if match:
            pattern = match
            break
    if pattern is None:
        prefix, number = "Ethernet", 0
    else:
        prefix, number = pattern.group(1), int(pattern.group(2))
    candidate = f"{prefix}{number}"
    while candidate in taken:
        number += 1
        candidate = f"{prefix}{number}"
    return candidate


def add_interface(
    cfg: RouterConfig,
    name: str,
    ip: str,
    mask: str,
    cost: int | None = None,
    description: str | None = None,
    style: list[str] | None = None,
) -> Stanza:
    """Add an interface stanza.

    ``style`` is an ordered list of keyword lines from a model interface;
    address, cost and description lines are filled in at the positions the
    model uses them, other model lines are copied as-is.
    """
    body: list[str] = []
    layout = style or ["description", "ip address", "ip ospf cost"]
    placed = set()
    for line in layout:
        if line.startswith("description"):
            if description is not None:
                body.append(f"description {description}")
                placed.add("description")
        elif line.startswith("ip address"):
            body.append(f"ip address {ip} {mask}")
            placed.add("ip address")
        elif line.startswith("ip ospf cost"):
            if cost is not None:
                body.append(f"ip ospf cost {cost}")
                placed.add("ip ospf cost")
        elif line.strip() and line.strip() != "shutdown":
            body.append(line.strip())
    if "ip address" not in placed:
        body.append(f"ip address {ip} {mask}")
    if cost is not None and "ip ospf cost" not in placed:
        body.append(f"ip ospf cost {cost}")
    stanza = Stanza(kind=StanzaKind.INTERFACE, header=f"interface {name}")
    for text in body:
        append_command(cfg, stanza, text)
    insert_stanza(cfg, stanza)
    return stanza


def interface_stanza(cfg: RouterConfig, name: str) -> Stanza | None:
    for stanza in cfg.stanzas_of(StanzaKind.INTERFACE):
        if stanza.header.split()[1] == name:
            return stanza
    return None


def set_interface_cost(cfg: RouterConfig, name: str, cost: int) -> None:
    """Set ``ip ospf cost`` on an interface, replacing an existing cost line."""
    stanza = interface_stanza(cfg, name)
    if stanza is None:
        raise KeyError(f"{cfg.hostname} has no interface {name}")
    for index, command in enumerate(stanza.commands):
        if command.tokens[:3] == ["ip", "ospf", "cost"]:
            stanza.commands[index] = Command.from_raw(f"{command.indent}ip ospf cost {cost}")
            return
    append_command(cfg, stanza, f"ip ospf cost {cost}")


def add_ospf_network(cfg: RouterConfig, network: IPv4Network, area: str = "0") -> bool:
    """Enable OSPF on ``network``; returns False when the router runs no OSPF."""
    stanza = cfg.first(StanzaKind.ROUTER_OSPF)
    if stanza is None:
        return False
    process = RouterOspfHandler.view(stanza)
    if process.enabled_on(str(network.network_address)) and all(
        n.covers(str(network.broadcast_address)) for n in process.networks if n.covers(str(network.network_address))
    ):
        return True
    text = f"network {network.network_address} {prefixlen_to_wildcard(network.prefixlen)} area {area}"
    _append_grouped(cfg, stanza, text, "network")
    return True


def add_bgp_network(cfg: RouterConfig, network: IPv4Network) -> bool:
    stanza = cfg.first(StanzaKind.ROUTER_BGP)
    if stanza is None:
        return False
    uses_cidr = any(c.tokens[0] == "network" and is_prefix(c.tokens[1]) for c in stanza.commands if len(c.tokens) > 1)
    if uses_cidr:
        text = f"network {network}"
    else:
        text = f"network {network.network_address} mask {network.netmask}"
    _append_grouped(cfg, stanza, text, "network")
    return True


def add_bgp_neighbor(
    cfg: RouterConfig,
    peer_ip: str,
    remote_as: int,
    peer_group: str | None = None,
    extra: list[str] | None = None,
) -> bool:
    """Declare a BGP neighbor, as a peer-group member when ``peer_group`` is given."""
    stanza = cfg.first(StanzaKind.ROUTER_BGP)
    if stanza is None:
        return False
    lines = []
    if peer_group is not None:
        lines.append(f"neighbor {peer_ip} peer-group {peer_group}")
    else:
        lines.append(f"neighbor {peer_ip} remote-as {remote_as}")
    for suffix in extra or []:
        lines.append(f"neighbor {peer_ip} {suffix}")
    for text in lines:
        _append_grouped(cfg, stanza, text, "neighbor")
    return True


def add_neighbor_filter(cfg: RouterConfig, peer_ip: str, verb: str, name: str, direction: str) -> None:
    stanza = cfg.first(StanzaKind.ROUTER_BGP)
    if stanza is None:
        raise KeyError(f"{cfg.hostname} runs no BGP")
    _append_grouped(cfg, stanza, f"neighbor {peer_ip} {verb} {name} {direction}", "neighbor")


def add_ospf_distribute_list(cfg: RouterConfig, prefix_list: str, interface_name: str | None = None) -> None:
    stanza = cfg.first(StanzaKind.ROUTER_OSPF)
    if stanza is None:
        raise KeyError(f"{cfg.hostname} runs no OSPF")
    suffix = f" {interface_name}" if interface_name else ""
    append_command(cfg, stanza, f"distribute-list prefix {prefix_list} in{suffix}")


def _append_grouped(cfg: RouterConfig, stanza: Stanza, text: str, keyword: str) -> None:
    """Append after the last nested command starting with ``keyword``."""
    command = new_command(cfg, text)
    position = None
    for index, existing in enumerate(stanza.commands):
        if existing.tokens[:1] == [keyword] and existing.indent == command.indent:
            position = index + 1
    if position is None:
        stanza.commands.append(command)
    else:
        stanza.commands.insert(position, command)


def add_prefix_list_entry(
    cfg: RouterConfig,
    name: str,
    seq: int,
    action: str,
    network: IPv4Network | str,
    le: int | None = None,
) -> None:
    """Add one entry to a prefix-list, keeping the list's lines in seq order."""
    text = f"ip prefix-list {name} seq {seq} {action} {network}"
    if le is not None:
        text += f" le {le}"
    command = Command.from_raw(text)
    for stanza in cfg.stanzas_of(StanzaKind.PREFIX_LIST):
        if stanza.group != name:
            continue
        entries = PrefixListHandler.view(stanza).entries
        position = sum(1 for e in entries if e.seq < seq)
        if position == 0:
            stanza.commands.insert(0, Command.from_raw(stanza.header))
            stanza.header = text
        else:
            stanza.commands.insert(position - 1, command)
        return
    insert_stanza(cfg, Stanza(kind=StanzaKind.PREFIX_LIST, header=text, group=name))


def insert_after(stanza: Stanza, raw_line: str, new_line: str) -> bool:
    """Insert ``new_line`` right after the first line equal to ``raw_line``.

    Returns False if ``raw_line`` is not part of the stanza.
    """
    command = Command.from_raw(new_line)
    if stanza.header == raw_line:
        stanza.commands.insert(0, command)
        return True
    for index, existing in enumerate(stanza.commands):
        if existing.raw == raw_line:
            stanza.commands.insert(index + 1, command)
            return True
    return False


__all__ = [
    "parse_config",
    "render_config",
    "interfaces",
    "interface",
    "ospf",
    "bgp",
    "static_routes",
    "policies",
    "protocols",
    "router_id",
]
