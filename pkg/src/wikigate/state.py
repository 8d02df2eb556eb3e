"""System state as a fold over the event log.

``apply_event`` is the only mutation path in the whole system: the live
engine feeds freshly appended events through it, and ``replay`` feeds the
log from disk through it. Live state and replayed state agree because they
are literally the same computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import audit
from .audit import AuditEvent
from .contributions import (
    Accepted,
    Contribution,
    ContributionStore,
    Rejected,
    Reverted,
)
from .errors import IntegrityError
from .identity import Registry
from .moderation import CheckReport, contribution_keywords
from .store import PageStore


@dataclass
class SystemState:
    pages: PageStore = field(default_factory=PageStore)
    registry: Registry = field(default_factory=Registry)
    contributions: ContributionStore = field(default_factory=ContributionStore)
    reports: dict = field(default_factory=dict)  # contribution_id -> CheckReport
    verdicts: dict = field(default_factory=dict)  # contribution_id -> verdict record

    def to_dict(self) -> dict:
        return {
            "pages": self.pages.to_dict(),
            "registry": self.registry.to_dict(),
            "contributions": self.contributions.to_dict(),
            "reports": {c: r.to_dict() for c, r in self.reports.items()},
            "verdicts": dict(self.verdicts),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SystemState":
        return cls(
            pages=PageStore.from_dict(data["pages"]),
            registry=Registry.from_dict(data["registry"]),
            contributions=ContributionStore.from_dict(data["contributions"]),
            reports={
                c: CheckReport.from_dict(r) for c, r in data.get("reports", {}).items()
            },
            verdicts=dict(data.get("verdicts", {})),
        )


def apply_event(state: SystemState, event: AuditEvent) -> None:
    try:
        _dispatch(state, event)
    except KeyError as exc:
        raise IntegrityError(
            f"event seq {event.seq} ({event.kind}) has a malformed payload: "
            f"missing {exc}"
        ) from exc


def _dispatch(state: SystemState, event: AuditEvent) -> None:
    kind = event.kind
    p = event.payload

    if kind == audit.E_AUTHOR_REGISTERED:
        state.registry.add_author(
            author_id=p["author_id"],
            username=p["username"],
            display_name=p["display_name"],
            affiliation=p["affiliation"],
            cred_salt=p["cred_salt"],
            cred_hash=p["cred_hash"],
            iterations=int(p["iterations"]),
            at=event.at,
        )
    elif kind == audit.E_SESSION_ISSUED:
        state.registry.add_session(
            token_sha256=p["token_sha256"],
            author_id=p["author_id"],
            issued_at=event.at,
            expires_at=p["expires_at"],
        )
    elif kind == audit.E_ROLE_GRANTED:
        state.registry.grant_role(p["author_id"], p["role"])
    elif kind == audit.E_PAGE_CREATED:
        state.pages.create(p["title"], p["text"], p["author_id"], event.at)
    elif kind == audit.E_CONTRIB_SUBMITTED:
        state.contributions.add(Contribution.from_dict(p))
    elif kind == audit.E_CHECKS_COMPUTED:
        report = CheckReport.from_dict(p)
        state.reports[report.contribution_id] = report
    elif kind == audit.E_VERDICT_ISSUED:
        state.verdicts[p["contribution_id"]] = {
            "verdict": p["verdict"],
            "reason": p.get("reason"),
            "at": event.at,
        }
    elif kind == audit.E_REVISION_COMMITTED:
        rev = state.pages.append(
            p["page"],
            p["text"],
            p["author_id"],
            event.at,
            {"type": "contribution", "contribution_id": p["contribution_id"]},
        )
        if rev.rev_seq != int(p["rev_seq"]):
            raise IntegrityError(
                f"event seq {event.seq}: expected revision {p['rev_seq']} "
                f"but page {p['page']!r} is at {rev.rev_seq}"
            )
    elif kind == audit.E_CONTRIB_ACCEPTED:
        contribution = state.contributions.transition(
            p["contribution_id"],
            Accepted(rev_seq=int(p["rev_seq"]), decided_by=event.actor, at=event.at),
        )
        state.registry.record_outcome(
            contribution.author_id,
            contribution.contribution_id,
            "accepted",
            event.at,
            contribution_keywords(contribution),
        )
    elif kind == audit.E_CONTRIB_REJECTED:
        contribution = state.contributions.transition(
            p["contribution_id"],
            Rejected(reason=p.get("reason") or "", decided_by=event.actor, at=event.at),
        )
        state.registry.record_outcome(
            contribution.author_id,
            contribution.contribution_id,
            "rejected",
            event.at,
            contribution_keywords(contribution),
        )
    elif kind == audit.E_REVISION_REVERTED:
        rev = state.pages.append(
            p["page"], p["text"], p["author_id"], event.at, p["source"]
        )
        if rev.rev_seq != int(p["rev_seq"]):
            raise IntegrityError(
                f"event seq {event.seq}: expected revision {p['rev_seq']} "
                f"but page {p['page']!r} is at {rev.rev_seq}"
            )
    elif kind == audit.E_CONTRIB_REVERTED:
        contribution = state.contributions.transition(
            p["contribution_id"],
            Reverted(revert_rev_seq=int(p["revert_rev_seq"]), by=event.actor, at=event.at),
        )
        state.registry.record_outcome(
            contribution.author_id,
            contribution.contribution_id,
            "reverted",
            event.at,
            contribution_keywords(contribution),
        )
    else:
        raise IntegrityError(f"event seq {event.seq}: unknown kind {event.kind!r}")


def replay(events: list[AuditEvent]) -> SystemState:
    """Deterministic reconstruction: same event prefix, same state."""
    state = SystemState()
    for event in events:
        apply_event(state, event)
    return state


def check_integrity(state: SystemState) -> None:
    """Cross-store invariants that must hold after any replay.

    Raises IntegrityError on: a revision author missing from the registry,
    or a broken one-to-one match between applied contributions (accepted,
    or accepted-then-reverted) and contribution-sourced revisions.
    """
    contribution_sources: list[str] = []
    for title in state.pages.titles():
        for rev in state.pages.get(title).revisions:
            if rev.author not in state.registry.authors:
                raise IntegrityError(
                    f"revision {title!r}@{rev.rev_seq} author {rev.author!r} "
                    "does not resolve"
                )
            if rev.source.get("type") == "contribution":
                contribution_sources.append(rev.source["contribution_id"])

    applied = [
        c.contribution_id
        for c in state.contributions.list()
        if c.status.state in ("accepted", "reverted")
    ]
    if sorted(contribution_sources) != sorted(applied):
        missing = set(applied) - set(contribution_sources)
        orphans = set(contribution_sources) - set(applied)
        raise IntegrityError(
            "contribution/revision mismatch: "
            f"accepted without revision {sorted(missing)}, "
            f"revision without acceptance {sorted(orphans)}"
        )
    if len(contribution_sources) != len(set(contribution_sources)):
        raise IntegrityError("a contribution sourced more than one revision")
