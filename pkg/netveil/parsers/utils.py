"""Shared IPv4 and token helpers for the config parsers."""

from __future__ import annotations

import ipaddress
import re
from ipaddress import IPv4Address, IPv4Network

_IPV4_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}$")
_PREFIX_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}/\d{1,2}$")
_NUMBER_RE = re.compile(r"^\d+$")

# Tokens whose successor is a user-chosen name
NAME_KEYWORDS = frozenset({
    "neighbor",
    "prefix",
    "address",
    "hostname",
    "interface",
    "route-map",
    "prefix-list",
    "peer-group",
    "distribute-list",
    "description",
    "standard",
    "extended",
    "access-list",
    "access-group",
    "passive-interface",
})

# Keywords that stay keywords even right after a name-introducing token
RESERVED = frozenset({
    "prefix", "prefix-list", "in", "out", "permit", "deny", "seq", "le", "ge",
    "host", "any", "ip", "standard", "extended", "remote-as", "peer-group",
    "route-map", "next-hop-self", "distribute-list", "default",
})


def is_ipv4(token: str) -> bool:
    if not _IPV4_RE.match(token):
        return False
    try:
        IPv4Address(token)
    except ValueError:
        return False
    return True


def is_prefix(token: str) -> bool:
    if not _PREFIX_RE.match(token):
        return False
    try:
        IPv4Network(token, strict=False)
    except ValueError:
        return False
    return True


def mask_to_prefixlen(mask: str) -> int:
    """Convert a dotted netmask to a prefix length.

    Raises:
        ValueError: if the mask is not contiguous
    """
    return IPv4Network(f"0.0.0.0/{mask}").prefixlen


def prefixlen_to_mask(prefixlen: int) -> str:
    return str(IPv4Network(f"0.0.0.0/{prefixlen}").netmask)


def wildcard_to_mask(wildcard: str) -> str:
    return str(IPv4Address(int(IPv4Address(wildcard)) ^ 0xFFFFFFFF))


def prefixlen_to_wildcard(prefixlen: int) -> str:
    return str(IPv4Network(f"0.0.0.0/{prefixlen}").hostmask)


def interface_network(ip: str, mask: str) -> IPv4Network:
    """Subnet owned by an interface address."""
    return IPv4Network(f"{ip}/{mask}", strict=False)


def wildcard_match(address: IPv4Address | str, base: str, wildcard: str) -> bool:
    """Cisco wildcard comparison: bits set in the wildcard are ignored."""
    care = int(IPv4Address(wildcard)) ^ 0xFFFFFFFF
    return (int(IPv4Address(str(address))) & care) == (int(IPv4Address(base)) & care)


def to_network(text: str) -> IPv4Network:
    return IPv4Network(text, strict=False)


def host_network(ip: str) -> IPv4Network:
    return IPv4Network(f"{ip}/32")


def placeholder(token: str, previous: str | None) -> str:
    """Replace a parameter token with a placeholder for keyword paths.

    IP addresses, prefixes and masks become ``<ip>``/``<prefix>``, numbers
    become ``<num>`` and a token following a name-introducing keyword becomes
    ``<name>``. Keywords pass through unchanged.
    """
    if is_prefix(token):
        return "<prefix>"
    if is_ipv4(token):
        return "<ip>"
    if _NUMBER_RE.match(token):
        return "<num>"
    if previous in NAME_KEYWORDS and token not in RESERVED:
        return "<name>"
    return token


def keyword_path(tokens: list[str]) -> tuple[list[str], list[str]]:
    """Split a tokenized command into (keyword_path, params)."""
    if tokens and tokens[0] in ("description", "banner"):
        return [tokens[0], "<text>"], tokens[1:]
    path: list[str] = []
    params: list[str] = []
    previous: str | None = None
    for token in tokens:
        replaced = placeholder(token, previous)
        path.append(replaced)
        if replaced != token:
            params.append(token)
        previous = token
    return path, params


def next_free_subnet(
    pool: IPv4Network,
    prefixlen: int,
    taken: list[IPv4Network],
    start_index: int = 0,
) -> tuple[IPv4Network, int] | None:
    """First subnet of ``pool`` with the given length disjoint from ``taken``.

    Returns the subnet and the index to resume from, or None if exhausted.
    """
    subnets = pool.subnets(new_prefix=prefixlen)
    for index, candidate in enumerate(subnets):
        if index < start_index:
            continue
        if not any(candidate.overlaps(other) for other in taken):
            return candidate, index + 1
    return None


def address_key(ip: str) -> int:
    return int(ipaddress.IPv4Address(ip))
