"""Authors, credentials, sessions, and the decayed history score.

Secrets never live in stored state. Registration keeps a salted PBKDF2
hash of the passphrase; sessions are keyed by the SHA-256 of the bearer
token, so resolving a presented token is a hash-and-lookup. Everything
here rebuilds from events because only derived values are ever stored.

The history score summarizes an author's track record as a sum of
outcome weights decayed by age:

    score = sum over outcomes of weight(kind) * 2 ** (-age_days / half_life)

with accepted counting +1, rejected -2, reverted -3, and a 90 day
half-life. The normalized form maps that unbounded sum into (0, 1) via
``h / (1 + |h|)`` shifted to midpoint 0.5, so an unknown author starts
at exactly 0.5.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import uuid
from dataclasses import dataclass, field
from datetime import timedelta

from .clock import days_between, parse_iso, to_iso
from .errors import (
    AlreadyExistsError,
    IdentityError,
    NotFoundError,
    ValidationError,
)

ROLE_CONTRIBUTOR = "contributor"
ROLE_MODERATOR = "moderator"

DEFAULT_ITERATIONS = 100_000
MIN_SECRET_LENGTH = 8

# Wording pinned by the product requirement that unidentified submitters
# are turned away; reused verbatim wherever that refusal surfaces.
ANONYMOUS_MESSAGE = "anonymous contributions may not be acceptable"


@dataclass(frozen=True)
class ScoreParams:
    half_life_days: float = 90.0
    weight_accepted: float = 1.0
    weight_rejected: float = -2.0
    weight_reverted: float = -3.0

    def weight(self, kind: str) -> float:
        if kind == "accepted":
            return self.weight_accepted
        if kind == "rejected":
            return self.weight_rejected
        if kind == "reverted":
            return self.weight_reverted
        raise ValidationError(f"unknown outcome kind {kind!r}")

    def to_dict(self) -> dict:
        return {
            "half_life_days": self.half_life_days,
            "weight_accepted": self.weight_accepted,
            "weight_rejected": self.weight_rejected,
            "weight_reverted": self.weight_reverted,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreParams":
        params = cls(
            half_life_days=float(data.get("half_life_days", 90.0)),
            weight_accepted=float(data.get("weight_accepted", 1.0)),
            weight_rejected=float(data.get("weight_rejected", -2.0)),
            weight_reverted=float(data.get("weight_reverted", -3.0)),
        )
        if params.half_life_days <= 0:
            raise ValidationError("half_life_days must be positive")
        return params


@dataclass(frozen=True)
class Outcome:
    """One resolved contribution in an author's track record."""

    contribution_id: str
    kind: str  # "accepted" | "rejected" | "reverted"
    at: str
    keywords: frozenset = frozenset()


@dataclass
class AuthorRecord:
    author_id: str
    username: str
    display_name: str
    affiliation: str
    cred_salt: str  # hex
    cred_hash: str  # hex, PBKDF2-HMAC-SHA256(secret, salt)
    iterations: int
    roles: set = field(default_factory=lambda: {ROLE_CONTRIBUTOR})
    registered_at: str = ""

    @property
    def is_moderator(self) -> bool:
        return ROLE_MODERATOR in self.roles


@dataclass(frozen=True)
class Session:
    token_sha256: str
    author_id: str
    issued_at: str
    expires_at: str


def new_author_id() -> str:
    return uuid.uuid4().hex


def new_salt() -> str:
    return secrets.token_hex(16)


def new_token() -> str:
    return secrets.token_hex(16)  # 128-bit random value


def hash_credential(secret: str, salt_hex: str, iterations: int) -> str:
    digest = hashlib.pbkdf2_hmac(
        "sha256", secret.encode("utf-8"), bytes.fromhex(salt_hex), iterations
    )
    return digest.hex()


def hash_token(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


def session_expiry(issued_at: str, ttl_hours: float) -> str:
    return to_iso(parse_iso(issued_at) + timedelta(hours=ttl_hours))


def check_secret_strength(secret: str) -> None:
    if len(secret) < MIN_SECRET_LENGTH:
        raise ValidationError(f"secret too weak: need at least {MIN_SECRET_LENGTH} characters")


def history_score(outcomes: list, now: str, params: ScoreParams = ScoreParams()) -> float:
    """Raw decayed score. Future-dated outcomes count at full weight."""
    total = 0.0
    for outcome in outcomes:
        age = max(0.0, days_between(outcome.at, now))
        total += params.weight(outcome.kind) * 2.0 ** (-age / params.half_life_days)
    return total


def normalize_score(raw: float) -> float:
    return (raw / (1.0 + abs(raw)) + 1.0) / 2.0


class Registry:
    """Author, session, and outcome state. Mutated only via event application."""

    def __init__(self) -> None:
        self.authors: dict[str, AuthorRecord] = {}  # author_id -> record
        self.by_username: dict[str, str] = {}  # username -> author_id
        self.sessions: dict[str, Session] = {}  # token_sha256 -> Session
        self.outcomes: dict[str, list] = {}  # author_id -> [Outcome]
        self._seen_outcomes: set = set()  # (contribution_id, kind)

    # -- authors ---------------------------------------------------------

    def add_author(
        self,
        author_id: str,
        username: str,
        display_name: str,
        affiliation: str,
        cred_salt: str,
        cred_hash: str,
        iterations: int,
        at: str,
    ) -> AuthorRecord:
        if not username or username != username.strip():
            raise ValidationError("username must be non-empty with no surrounding whitespace")
        if username in self.by_username:
            raise AlreadyExistsError(f"username {username!r} is taken")
        record = AuthorRecord(
            author_id=author_id,
            username=username,
            display_name=display_name,
            affiliation=affiliation,
            cred_salt=cred_salt,
            cred_hash=cred_hash,
            iterations=iterations,
            registered_at=at,
        )
        self.authors[author_id] = record
        self.by_username[username] = author_id
        self.outcomes.setdefault(author_id, [])
        return record

    def get(self, author_id: str) -> AuthorRecord:
        if author_id not in self.authors:
            raise NotFoundError(f"no author with id {author_id!r}")
        return self.authors[author_id]

    def get_by_username(self, username: str) -> AuthorRecord:
        if username not in self.by_username:
            raise NotFoundError(f"no author named {username!r}")
        return self.authors[self.by_username[username]]

    def check_credentials(self, username: str, secret: str) -> AuthorRecord:
        """Verify a login. Unknown user and wrong secret raise the same error."""
        author_id = self.by_username.get(username)
        if author_id is None:
            # Burn comparable work so timing does not reveal user existence.
            hash_credential(secret, "00" * 16, 1000)
            raise IdentityError("authentication failed")
        record = self.authors[author_id]
        presented = hash_credential(secret, record.cred_salt, record.iterations)
        if not hmac.compare_digest(presented, record.cred_hash):
            raise IdentityError("authentication failed")
        return record

    def grant_role(self, author_id: str, role: str) -> None:
        self.get(author_id).roles.add(role)

    # -- sessions --------------------------------------------------------

    def add_session(
        self, token_sha256: str, author_id: str, issued_at: str, expires_at: str
    ) -> Session:
        session = Session(
            token_sha256=token_sha256,
            author_id=author_id,
            issued_at=issued_at,
            expires_at=expires_at,
        )
        self.sessions[token_sha256] = session
        return session

    def resolve(self, token: str, now: str) -> AuthorRecord:
        session = self.sessions.get(hash_token(token))
        if session is None or now >= session.expires_at:
            raise IdentityError(ANONYMOUS_MESSAGE)
        return self.get(session.author_id)

    # -- outcomes --------------------------------------------------------

    def record_outcome(
        self, author_id: str, contribution_id: str, kind: str, at: str, keywords: frozenset
    ) -> None:
        self.get(author_id)
        # One outcome per lifecycle step: the same contribution may gain a
        # second outcome only under a different kind (accepted then reverted).
        key = (contribution_id, kind)
        if key in self._seen_outcomes:
            raise AlreadyExistsError(f"outcome {kind!r} already recorded for {contribution_id}")
        self._seen_outcomes.add(key)
        self.outcomes.setdefault(author_id, []).append(
            Outcome(contribution_id=contribution_id, kind=kind, at=at, keywords=keywords)
        )

    def outcomes_for(self, author_id: str) -> list:
        return list(self.outcomes.get(author_id, []))

    def score(self, author_id: str, now: str, params: ScoreParams = ScoreParams()) -> float:
        self.get(author_id)
        return history_score(self.outcomes.get(author_id, []), now, params)

    # -- snapshot --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "authors": {
                a: {
                    "username": r.username,
                    "display_name": r.display_name,
                    "affiliation": r.affiliation,
                    "cred_salt": r.cred_salt,
                    "cred_hash": r.cred_hash,
                    "iterations": r.iterations,
                    "roles": sorted(r.roles),
                    "registered_at": r.registered_at,
                }
                for a, r in self.authors.items()
            },
            "sessions": {
                t: {
                    "author_id": s.author_id,
                    "issued_at": s.issued_at,
                    "expires_at": s.expires_at,
                }
                for t, s in self.sessions.items()
            },
            "outcomes": {
                a: [
                    {
                        "contribution_id": o.contribution_id,
                        "kind": o.kind,
                        "at": o.at,
                        "keywords": sorted(o.keywords),
                    }
                    for o in outs
                ]
                for a, outs in self.outcomes.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Registry":
        reg = cls()
        for author_id, r in data.get("authors", {}).items():
            record = AuthorRecord(
                author_id=author_id,
                username=r["username"],
                display_name=r["display_name"],
                affiliation=r["affiliation"],
                cred_salt=r["cred_salt"],
                cred_hash=r["cred_hash"],
                iterations=int(r["iterations"]),
                roles=set(r["roles"]),
                registered_at=r["registered_at"],
            )
            reg.authors[author_id] = record
            reg.by_username[record.username] = author_id
            reg.outcomes.setdefault(author_id, [])
        for token_hash, s in data.get("sessions", {}).items():
            reg.sessions[token_hash] = Session(
                token_sha256=token_hash,
                author_id=s["author_id"],
                issued_at=s["issued_at"],
                expires_at=s["expires_at"],
            )
        for author_id, outs in data.get("outcomes", {}).items():
            for o in outs:
                reg.outcomes.setdefault(author_id, []).append(
                    Outcome(
                        contribution_id=o["contribution_id"],
                        kind=o["kind"],
                        at=o["at"],
                        keywords=frozenset(o["keywords"]),
                    )
                )
                reg._seen_outcomes.add((o["contribution_id"], o["kind"]))
        return reg
