"""Exception hierarchy shared by every layer.

Each error class carries the HTTP status the API layer maps it to, so the
service handler and the CLI can translate domain failures uniformly.
"""

from __future__ import annotations


class WikiGateError(Exception):
    """Base class for all domain errors."""

    http_status = 500


class IdentityError(WikiGateError):
    """Missing, expired, or unresolvable identity (the anonymous path)."""

    http_status = 401


class AuthorizationError(WikiGateError):
    """The caller is known but lacks the required role."""

    http_status = 403


class NotFoundError(WikiGateError):
    """Unknown page, revision, author, or contribution."""

    http_status = 404


class AlreadyExistsError(WikiGateError):
    """Duplicate page title, username, or outcome record."""

    http_status = 409


class StateError(WikiGateError):
    """An operation that is illegal in the current lifecycle state."""

    http_status = 409


class ConflictError(WikiGateError):
    """A change that no longer applies against the current content."""

    http_status = 409


class ValidationError(WikiGateError):
    """Malformed input: bad payload shape, weak secret, invalid config."""

    http_status = 422


class IntegrityError(WikiGateError):
    """The persisted event log is corrupt or violates replay invariants."""

    http_status = 500
