"""Pending contributions and their lifecycle state machine.

A contribution is the content half of a submission: what change is
proposed, where, by whom, against which base revision. The credential
half never enters this module. Status moves only along

    Pending -> Accepted -> Reverted
    Pending -> Rejected

and Rejected/Reverted are terminal. Transition legality is enforced
here; everything else (checks, application to pages) happens in the
moderation layer.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Union

from .errors import NotFoundError, StateError, ValidationError
from .patches import Patch

KIND_ADD = "add"
KIND_EDIT = "edit"
KIND_REPLACE = "replace"
KIND_REMOVE = "remove"
KINDS = (KIND_ADD, KIND_EDIT, KIND_REPLACE, KIND_REMOVE)


@dataclass(frozen=True)
class AddPayload:
    """New section text, inserted before the section at ``position`` (an
    index into the page's section list) or appended when position is None."""

    text: str
    position: int | None = None

    def to_dict(self) -> dict:
        return {"text": self.text, "position": self.position}


@dataclass(frozen=True)
class EditPayload:
    patch: Patch

    def to_dict(self) -> dict:
        return {"patch": self.patch.to_dict()}


@dataclass(frozen=True)
class ReplacePayload:
    text: str

    def to_dict(self) -> dict:
        return {"text": self.text}


@dataclass(frozen=True)
class RemovePayload:
    def to_dict(self) -> dict:
        return {}


Payload = Union[AddPayload, EditPayload, ReplacePayload, RemovePayload]


def payload_from_dict(kind: str, data: dict) -> Payload:
    if not isinstance(data, dict):
        raise ValidationError("payload must be an object")
    if kind == KIND_ADD:
        text = data.get("text")
        if not isinstance(text, str):
            raise ValidationError("add payload needs a 'text' string")
        position = data.get("position")
        if position is not None and not isinstance(position, int):
            raise ValidationError("add payload 'position' must be an integer or null")
        return AddPayload(text=text, position=position)
    if kind == KIND_EDIT:
        if "patch" not in data:
            raise ValidationError("edit payload needs a 'patch'")
        return EditPayload(patch=Patch.from_dict(data["patch"]))
    if kind == KIND_REPLACE:
        text = data.get("text")
        if not isinstance(text, str):
            raise ValidationError("replace payload needs a 'text' string")
        return ReplacePayload(text=text)
    if kind == KIND_REMOVE:
        return RemovePayload()
    raise ValidationError(f"unknown contribution kind {kind!r}; expected one of {KINDS}")


# -- status ----------------------------------------------------------------

STATE_PENDING = "pending"
STATE_ACCEPTED = "accepted"
STATE_REJECTED = "rejected"
STATE_REVERTED = "reverted"

LEGAL_TRANSITIONS = {
    (STATE_PENDING, STATE_ACCEPTED),
    (STATE_PENDING, STATE_REJECTED),
    (STATE_ACCEPTED, STATE_REVERTED),
}


@dataclass(frozen=True)
class Pending:
    state: str = STATE_PENDING

    def to_dict(self) -> dict:
        return {"state": self.state}


@dataclass(frozen=True)
class Accepted:
    rev_seq: int
    decided_by: str
    at: str
    state: str = STATE_ACCEPTED

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "rev_seq": self.rev_seq,
            "decided_by": self.decided_by,
            "at": self.at,
        }


@dataclass(frozen=True)
class Rejected:
    reason: str
    decided_by: str
    at: str
    state: str = STATE_REJECTED

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "reason": self.reason,
            "decided_by": self.decided_by,
            "at": self.at,
        }


@dataclass(frozen=True)
class Reverted:
    revert_rev_seq: int
    by: str
    at: str
    state: str = STATE_REVERTED

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "revert_rev_seq": self.revert_rev_seq,
            "by": self.by,
            "at": self.at,
        }


Status = Union[Pending, Accepted, Rejected, Reverted]


def status_from_dict(data: dict) -> Status:
    state = data.get("state")
    if state == STATE_PENDING:
        return Pending()
    if state == STATE_ACCEPTED:
        return Accepted(rev_seq=int(data["rev_seq"]), decided_by=data["decided_by"], at=data["at"])
    if state == STATE_REJECTED:
        return Rejected(reason=data["reason"], decided_by=data["decided_by"], at=data["at"])
    if state == STATE_REVERTED:
        return Reverted(revert_rev_seq=int(data["revert_rev_seq"]), by=data["by"], at=data["at"])
    raise ValidationError(f"unknown status state {state!r}")


@dataclass
class Contribution:
    contribution_id: str
    page: str
    base_rev_seq: int
    kind: str
    anchor_slug: str
    anchor_occurrence: int
    payload: Payload
    rationale: str
    author_id: str
    submitted_at: str
    status: Status = field(default_factory=Pending)

    def to_dict(self) -> dict:
        return {
            "contribution_id": self.contribution_id,
            "page": self.page,
            "base_rev_seq": self.base_rev_seq,
            "kind": self.kind,
            "anchor": {"slug": self.anchor_slug, "occurrence": self.anchor_occurrence},
            "payload": self.payload.to_dict(),
            "rationale": self.rationale,
            "author_id": self.author_id,
            "submitted_at": self.submitted_at,
            "status": self.status.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Contribution":
        kind = data["kind"]
        anchor = data["anchor"]
        return cls(
            contribution_id=data["contribution_id"],
            page=data["page"],
            base_rev_seq=int(data["base_rev_seq"]),
            kind=kind,
            anchor_slug=anchor["slug"],
            anchor_occurrence=int(anchor["occurrence"]),
            payload=payload_from_dict(kind, data["payload"]),
            rationale=data["rationale"],
            author_id=data["author_id"],
            submitted_at=data["submitted_at"],
            status=status_from_dict(data["status"]),
        )


def new_contribution_id() -> str:
    return uuid.uuid4().hex


class ContributionStore:
    """Submission-ordered contribution map. Mutated only via event application."""

    def __init__(self) -> None:
        self._by_id: dict[str, Contribution] = {}
        self._order: list[str] = []

    def add(self, contribution: Contribution) -> None:
        if contribution.contribution_id in self._by_id:
            raise StateError(f"contribution {contribution.contribution_id} already enqueued")
        self._by_id[contribution.contribution_id] = contribution
        self._order.append(contribution.contribution_id)

    def get(self, contribution_id: str) -> Contribution:
        if contribution_id not in self._by_id:
            raise NotFoundError(f"no contribution {contribution_id!r}")
        return self._by_id[contribution_id]

    def list(
        self,
        status: str | None = None,
        page: str | None = None,
        author_id: str | None = None,
    ) -> list[Contribution]:
        result = []
        for cid in self._order:
            c = self._by_id[cid]
            if status is not None and c.status.state != status:
                continue
            if page is not None and c.page != page:
                continue
            if author_id is not None and c.author_id != author_id:
                continue
            result.append(c)
        return result

    def transition(self, contribution_id: str, new_status: Status) -> Contribution:
        contribution = self.get(contribution_id)
        edge = (contribution.status.state, new_status.state)
        if edge not in LEGAL_TRANSITIONS:
            raise StateError(f"illegal transition {edge[0]} -> {edge[1]} for {contribution_id}")
        contribution.status = new_status
        return contribution

    def to_dict(self) -> dict:
        return {"order": list(self._order), "items": {c: self._by_id[c].to_dict() for c in self._order}}

    @classmethod
    def from_dict(cls, data: dict) -> "ContributionStore":
        store = cls()
        for cid in data.get("order", []):
            store._order.append(cid)
            store._by_id[cid] = Contribution.from_dict(data["items"][cid])
        return store
