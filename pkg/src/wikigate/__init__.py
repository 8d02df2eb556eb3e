"""Moderated wiki: append-only pages behind a contribution review queue.

Submissions are split into identity and content, checked against hard
rules and a weighted score, routed automatically or to a human, and
every state change lands in an append-only event log that the whole
system replays from.
"""

from .config import ServiceConfig, load_config
from .engine import WikiEngine
from .errors import (
    AlreadyExistsError,
    AuthorizationError,
    ConflictError,
    IdentityError,
    IntegrityError,
    NotFoundError,
    StateError,
    ValidationError,
    WikiGateError,
)

__version__ = "0.1.0"

__all__ = [
    "ServiceConfig",
    "load_config",
    "WikiEngine",
    "WikiGateError",
    "IdentityError",
    "AuthorizationError",
    "NotFoundError",
    "AlreadyExistsError",
    "StateError",
    "ConflictError",
    "ValidationError",
    "IntegrityError",
    "__version__",
]
