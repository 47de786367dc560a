"""Host descriptor (JSON sidecar) parsing."""

from __future__ import annotations

import json

from pydantic import ValidationError

from ..errors import MalformedHost
from .schema import HostSpec

HOST_FIELDS = ("hostname", "iface_ip", "mask", "gateway_router", "gateway_ip")


def parse_host(text: str) -> HostSpec:
    """Parse a host descriptor.

    Args:
        text: JSON object with exactly the five HostSpec fields, string-valued

    Returns:
        The validated HostSpec

    Raises:
        MalformedHost: invalid JSON, missing or extra fields, bad addresses,
            or a gateway outside the host subnet
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedHost(f"invalid JSON: {e}") from e
    if not isinstance(data, dict):
        raise MalformedHost("host descriptor must be a JSON object")
    extra = sorted(set(data) - set(HOST_FIELDS))
    if extra:
        raise MalformedHost(f"unexpected fields: {', '.join(extra)}")
    if any(not isinstance(value, str) for value in data.values()):
        raise MalformedHost("host fields must be strings")
    try:
        return HostSpec(**data)
    except ValidationError as e:
        raise MalformedHost(str(e)) from e


def dump_host(host: HostSpec) -> str:
    return json.dumps(host.model_dump(include=set(HOST_FIELDS)), indent=2) + "\n"
