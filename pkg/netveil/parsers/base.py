"""Stanza-handler registry and base class for the config parser.

Each top-level statement of a router configuration is classified by the
first handler whose ``matches`` accepts its tokens:
- BaseStanzaHandler: abstract base class for all handlers
- StanzaRegistry: decorator-based registry keyed by StanzaKind
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Callable

from ..errors import MalformedLine
from .schema import Command, Stanza, StanzaKind

logger = logging.getLogger(__name__)


class StanzaRegistry:
    """Registry for stanza handlers.

    Use the @register(StanzaKind.X) decorator to register handlers. The
    OTHER handler is consulted last regardless of registration order.
    """

    _handlers: dict[StanzaKind, type[BaseStanzaHandler]] = {}

    @classmethod
    def register(cls, kind: StanzaKind) -> Callable[[type[BaseStanzaHandler]], type[BaseStanzaHandler]]:
        """Decorator to register a handler.

        Args:
            kind: The stanza kind the handler classifies

        Returns:
            Decorator function that registers the handler class
        """
        def decorator(handler_class: type[BaseStanzaHandler]) -> type[BaseStanzaHandler]:
            if kind in cls._handlers:
                logger.warning(f"Overwriting existing stanza handler: {kind.value}")
            cls._handlers[kind] = handler_class
            logger.debug(f"Registered stanza handler: {kind.value}")
            return handler_class
        return decorator

    @classmethod
    def get(cls, kind: StanzaKind) -> type[BaseStanzaHandler] | None:
        return cls._handlers.get(kind)

    @classmethod
    def list_kinds(cls) -> list[StanzaKind]:
        return list(cls._handlers.keys())

    @classmethod
    def create(cls, kind: StanzaKind) -> BaseStanzaHandler | None:
        handler_class = cls.get(kind)
        if handler_class is None:
            return None
        return handler_class()

    @classmethod
    def classify(cls, tokens: list[str]) -> BaseStanzaHandler:
        """Return a handler instance for a top-level statement.

        Args:
            tokens: Whitespace-split header line

        Returns:
            The first matching handler, or the OTHER handler
        """
        for kind, handler_class in cls._handlers.items():
            if kind == StanzaKind.OTHER:
                continue
            handler = handler_class()
            if handler.matches(tokens):
                return handler
        fallback = cls.create(StanzaKind.OTHER)
        if fallback is None:
            raise RuntimeError("no handler registered for other stanzas")
        return fallback


register = StanzaRegistry.register


class BaseStanzaHandler(ABC):
    """Abstract base class for stanza handlers.

    Subclasses must implement:
    - kind: the StanzaKind produced
    - matches(tokens): whether a header line belongs to this kind

    Optional hooks:
    - group_key(tokens): consecutive one-line statements with the same key
      share a stanza (numbered ACLs, prefix-lists, static routes)
    - validate(command, line_no): grammar check of one line
    - finish(stanza, line_no): cross-line check once the stanza is complete
    """

    groups_lines: bool = False

    @property
    @abstractmethod
    def kind(self) -> StanzaKind:
        """Return the stanza kind this handler produces."""
        pass

    @abstractmethod
    def matches(self, tokens: list[str]) -> bool:
        """Whether a top-level line starts a stanza of this kind."""
        pass

    def group_key(self, tokens: list[str]) -> str | None:
        return None

    def validate(self, command: Command, line_no: int) -> None:
        return None

    def finish(self, stanza: Stanza, line_no: int) -> None:
        return None

    @staticmethod
    def fail(line_no: int, command: Command, reason: str) -> MalformedLine:
        return MalformedLine(line_no, command.raw, reason)


def list_stanza_kinds() -> list[str]:
    """List the registered stanza kinds."""
    return [kind.value for kind in StanzaRegistry.list_kinds()]
