"""Exception hierarchy shared across the package.

Domain failures the pipeline can recover from (bad requests, unparseable
prompts) carry machine-readable detail dicts so the repair loop and the
HTTP layer can act on them without string parsing.
"""

from __future__ import annotations

from typing import Any


class PlayfinderError(Exception):
    """Base class for all domain errors raised by this package."""


class SchemaLoadError(PlayfinderError):
    pass


class DirectoryLoadError(PlayfinderError):
    pass


class LexiconError(PlayfinderError):
    pass


class IngestError(PlayfinderError):
    pass


class ExecutionError(PlayfinderError):
    """A search request was rejected by the executor.

    `details` is machine-readable and is fed verbatim into the repair loop:
    {"code": str, "schema": str, "field": str | None, "suggestion": str | None,
     "message": str}
    """

    def __init__(self, details: dict[str, Any]):
        super().__init__(details.get("message", "execution error"))
        self.details = details


class FormulationError(PlayfinderError):
    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.details = details or {"code": "formulation", "message": message}


class RoutingError(PlayfinderError):
    pass


class BindingError(PlayfinderError):
    """A clarification answer named an id that was never offered."""


class NoPendingClarificationError(PlayfinderError):
    """A clarification answer arrived for a session with nothing pending."""


class CacheError(PlayfinderError):
    pass


class GatewayError(PlayfinderError):
    """Transport-level failure talking to a remote model backend; retryable."""


class MalformedOutputError(PlayfinderError):
    """Model output that does not parse into the task's target type."""
