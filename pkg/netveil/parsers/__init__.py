"""Parsers for router configurations and host descriptors.

- cisco: stanza-preserving parser/renderer for the Cisco-style grammar
- host: JSON host sidecars
"""

from .base import (
    BaseStanzaHandler,
    StanzaRegistry,
    list_stanza_kinds,
    register,
)
from .schema import (
    Command,
    HostSpec,
    RouterConfig,
    Stanza,
    StanzaKind,
)

# Import the module that registers the handlers
from .cisco import parse_config, render_config  # noqa: E402
from .host import dump_host, parse_host  # noqa: E402

__all__ = [
    "BaseStanzaHandler",
    "StanzaRegistry",
    "list_stanza_kinds",
    "register",
    "Command",
    "HostSpec",
    "RouterConfig",
    "Stanza",
    "StanzaKind",
    "parse_config",
    "render_config",
    "parse_host",
    "dump_host",
]
