"""Append-only event log on disk, plus analysis over the recorded events.

Layout: one data directory holding ``events.jsonl`` (UTF-8, one JSON
object per line, LF-terminated) with fields exactly
``{"seq": int, "at": "...Z", "kind": str, "actor": str, "payload": obj}``,
seq dense from 1, timestamps nondecreasing. An optional ``snapshot.json``
(``{"upto": seq, "state": obj}``) records a checkpoint; it is advisory
and the log always wins.

Durability model: a batch of events is serialized into one buffer and
written with a single unbuffered write before the triggering operation
reports success, so killing the process either persists a whole batch or
none of it. A torn final line left by a crash is discarded with a warning
on the next open; damage anywhere earlier is a fatal integrity error.

Exactly one process may hold the writer; the log file is flock-guarded.
"""

from __future__ import annotations

import fcntl
import json
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IntegrityError, StateError, ValidationError

E_AUTHOR_REGISTERED = "author-registered"
E_SESSION_ISSUED = "session-issued"
E_PAGE_CREATED = "page-created"
E_CONTRIB_SUBMITTED = "contribution-submitted"
E_CHECKS_COMPUTED = "checks-computed"
E_VERDICT_ISSUED = "verdict-issued"
E_CONTRIB_ACCEPTED = "contribution-accepted"
E_CONTRIB_REJECTED = "contribution-rejected"
E_CONTRIB_REVERTED = "contribution-reverted"
E_REVISION_COMMITTED = "revision-committed"
E_REVISION_REVERTED = "revision-reverted"
E_ROLE_GRANTED = "role-granted"

EVENT_KINDS = frozenset(
    {
        E_AUTHOR_REGISTERED,
        E_SESSION_ISSUED,
        E_PAGE_CREATED,
        E_CONTRIB_SUBMITTED,
        E_CHECKS_COMPUTED,
        E_VERDICT_ISSUED,
        E_CONTRIB_ACCEPTED,
        E_CONTRIB_REJECTED,
        E_CONTRIB_REVERTED,
        E_REVISION_COMMITTED,
        E_REVISION_REVERTED,
        E_ROLE_GRANTED,
    }
)

ACTOR_SYSTEM = "system"

LOG_NAME = "events.jsonl"
SNAPSHOT_NAME = "snapshot.json"


@dataclass(frozen=True)
class AuditEvent:
    seq: int
    at: str
    kind: str
    actor: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "at": self.at,
            "kind": self.kind,
            "actor": self.actor,
            "payload": self.payload,
        }

    def to_line(self) -> bytes:
        return json.dumps(self.to_dict(), ensure_ascii=False).encode("utf-8") + b"\n"

    @classmethod
    def from_dict(cls, data: dict) -> "AuditEvent":
        for key in ("seq", "at", "kind", "actor", "payload"):
            if key not in data:
                raise ValidationError(f"event missing field {key!r}")
        if data["kind"] not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind {data['kind']!r}")
        if not isinstance(data["payload"], dict):
            raise ValidationError("event payload must be an object")
        return cls(
            seq=int(data["seq"]),
            at=str(data["at"]),
            kind=str(data["kind"]),
            actor=str(data["actor"]),
            payload=data["payload"],
        )


def _parse_log_bytes(raw: bytes, path: Path) -> tuple[list[AuditEvent], int, str | None]:
    """Parse log content; returns (events, valid_byte_length, warning).

    A defective final line (truncated write) is dropped with a warning;
    a defective line followed by more data means real corruption.
    """
    events: list[AuditEvent] = []
    offset = 0
    prev_seq = 0
    prev_at = ""
    warning = None
    while offset < len(raw):
        newline = raw.find(b"\n", offset)
        is_last = newline == -1 or raw.find(b"\n", newline + 1) == -1 and newline == len(raw) - 1
        line = raw[offset:] if newline == -1 else raw[offset:newline]
        try:
            if newline == -1:
                raise ValueError("unterminated line")
            event = AuditEvent.from_dict(json.loads(line.decode("utf-8")))
            if event.seq != prev_seq + 1:
                raise ValueError(f"seq {event.seq} after {prev_seq}")
            if event.at < prev_at:
                raise ValueError(f"timestamp went backwards at seq {event.seq}")
        except (ValueError, ValidationError) as exc:
            if is_last:
                warning = f"discarded defective final log line in {path}: {exc}"
                return events, offset, warning
            raise IntegrityError(f"corrupt event log {path} at byte {offset}: {exc}") from exc
        events.append(event)
        prev_seq = event.seq
        prev_at = event.at
        offset = newline + 1
    return events, offset, warning


def read_events(data_dir: str | Path) -> list[AuditEvent]:
    """Read and validate the event log; tolerates only a torn final line."""
    path = Path(data_dir) / LOG_NAME
    if not path.exists():
        return []
    events, _, warning = _parse_log_bytes(path.read_bytes(), path)
    if warning:
        warnings.warn(warning)
    return events


class EventLog:
    """The single writer. Opening repairs a torn tail, then locks the file."""

    def __init__(self, data_dir: str | Path, fsync: bool = True):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.data_dir / LOG_NAME
        self.fsync = fsync
        self._fh = open(self.path, "ab", buffering=0)
        try:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            self._fh.close()
            raise StateError(f"another writer holds {self.path}") from exc

        raw = self.path.read_bytes()
        events, valid_length, warning = _parse_log_bytes(raw, self.path)
        if warning:
            warnings.warn(warning)
            os.truncate(self._fh.fileno(), valid_length)
        self.last_seq = events[-1].seq if events else 0
        self.last_at = events[-1].at if events else ""
        self._initial_events = events

    def take_initial_events(self) -> list[AuditEvent]:
        events, self._initial_events = self._initial_events, []
        return events

    def append_batch(self, entries: list[tuple[str, str, dict]], at: str) -> list[AuditEvent]:
        """Durably append events for one logical operation.

        ``entries`` is a list of (kind, actor, payload). All events in the
        batch share one timestamp and are written with a single write call;
        the batch is visible to replay either whole or not at all.
        """
        if not entries:
            return []
        if at < self.last_at:
            raise IntegrityError(f"clock went backwards: {at} < {self.last_at}")
        events = []
        buffer = b""
        seq = self.last_seq
        for kind, actor, payload in entries:
            if kind not in EVENT_KINDS:
                raise ValidationError(f"unknown event kind {kind!r}")
            seq += 1
            event = AuditEvent(seq=seq, at=at, kind=kind, actor=actor, payload=payload)
            events.append(event)
            buffer += event.to_line()
        self._fh.write(buffer)
        if self.fsync:
            os.fsync(self._fh.fileno())
        self.last_seq = seq
        self.last_at = at
        return events

    def close(self) -> None:
        if not self._fh.closed:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_UN)
            self._fh.close()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


# -- snapshots -------------------------------------------------------------


def write_snapshot(data_dir: str | Path, upto: int, state: dict) -> Path:
    path = Path(data_dir) / SNAPSHOT_NAME
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps({"upto": upto, "state": state}), encoding="utf-8")
    tmp.replace(path)
    return path


def load_snapshot(data_dir: str | Path) -> tuple[int, dict] | None:
    path = Path(data_dir) / SNAPSHOT_NAME
    if not path.exists():
        return None
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return int(data["upto"]), data["state"]
    except (ValueError, KeyError, TypeError):
        warnings.warn(f"ignoring unreadable snapshot {path}")
        return None


# -- analysis --------------------------------------------------------------


@dataclass
class AuthorStats:
    author_id: str
    username: str = ""
    submitted: int = 0
    accepted: int = 0
    rejected: int = 0
    reverted: int = 0

    @property
    def acceptance_rate(self) -> float | None:
        decided = self.accepted + self.rejected
        return self.accepted / decided if decided else None

    def to_dict(self) -> dict:
        return {
            "author_id": self.author_id,
            "username": self.username,
            "submitted": self.submitted,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "reverted": self.reverted,
            "acceptance_rate": self.acceptance_rate,
        }


@dataclass
class PageStats:
    title: str
    revisions: int = 0
    reverts: int = 0

    def to_dict(self) -> dict:
        return {"title": self.title, "revisions": self.revisions, "reverts": self.reverts}


@dataclass
class AnalysisReport:
    authors: dict = field(default_factory=dict)  # author_id -> AuthorStats
    pages: dict = field(default_factory=dict)  # title -> PageStats
    queue_depth: list = field(default_factory=list)  # [(seq, depth)], points of change
    decisions: dict = field(default_factory=lambda: {"auto": 0, "human": 0})

    def to_dict(self) -> dict:
        return {
            "authors": {a: s.to_dict() for a, s in sorted(self.authors.items())},
            "pages": {p: s.to_dict() for p, s in sorted(self.pages.items())},
            "queue_depth": [list(point) for point in self.queue_depth],
            "decisions": dict(self.decisions),
        }


def stats(
    events: list[AuditEvent],
    author: str | None = None,
    page: str | None = None,
    since: str | None = None,
    until: str | None = None,
    usernames: dict | None = None,
) -> AnalysisReport:
    """Fold the event list into an AnalysisReport.

    ``author`` and ``page`` narrow the per-author and per-page tables; the
    queue-depth series and decision counts always cover every event in the
    time range. ``author`` matches either author_id or username (when a
    ``usernames`` mapping is supplied).
    """
    report = AnalysisReport()
    usernames = usernames or {}
    contrib_author: dict[str, str] = {}  # contribution_id -> author_id
    contrib_page: dict[str, str] = {}
    depth = 0

    def author_row(author_id: str) -> AuthorStats:
        if author_id not in report.authors:
            report.authors[author_id] = AuthorStats(
                author_id=author_id, username=usernames.get(author_id, "")
            )
        return report.authors[author_id]

    def page_row(title: str) -> PageStats:
        if title not in report.pages:
            report.pages[title] = PageStats(title=title)
        return report.pages[title]

    for event in events:
        if since is not None and event.at < since:
            continue
        if until is not None and event.at > until:
            continue
        kind = event.kind
        payload = event.payload
        if kind == E_CONTRIB_SUBMITTED:
            cid = payload["contribution_id"]
            contrib_author[cid] = payload["author_id"]
            contrib_page[cid] = payload["page"]
            author_row(payload["author_id"]).submitted += 1
            depth += 1
            report.queue_depth.append((event.seq, depth))
        elif kind in (E_CONTRIB_ACCEPTED, E_CONTRIB_REJECTED, E_CONTRIB_REVERTED):
            cid = payload["contribution_id"]
            owner = contrib_author.get(cid)
            if owner is not None:
                row = author_row(owner)
                if kind == E_CONTRIB_ACCEPTED:
                    row.accepted += 1
                elif kind == E_CONTRIB_REJECTED:
                    row.rejected += 1
                else:
                    row.reverted += 1
            if kind in (E_CONTRIB_ACCEPTED, E_CONTRIB_REJECTED):
                depth -= 1
                report.queue_depth.append((event.seq, depth))
                side = "auto" if event.actor == ACTOR_SYSTEM else "human"
                report.decisions[side] += 1
        elif kind == E_PAGE_CREATED:
            page_row(payload["title"]).revisions += 1
        elif kind == E_REVISION_COMMITTED:
            page_row(payload["page"]).revisions += 1
        elif kind == E_REVISION_REVERTED:
            row = page_row(payload["page"])
            row.revisions += 1
            row.reverts += 1

    if author is not None:
        report.authors = {
            a: s
            for a, s in report.authors.items()
            if a == author or s.username == author
        }
    if page is not None:
        report.pages = {p: s for p, s in report.pages.items() if p == page}
    return report
