"""The single-writer command layer over the event log.

Every mutation follows the same shape: validate against current state,
build the full event batch for the operation, append it durably, then
fold the very same events into live state. Nothing mutates state any
other way, so live state always equals a replay of the log.

A process-wide lock serializes mutations (and the short read sections);
the audit order is exactly the lock acquisition order.
"""

from __future__ import annotations

import threading
from pathlib import Path

from . import audit, markup
from .audit import ACTOR_SYSTEM, EventLog
from .clock import now_iso
from .config import ServiceConfig
from .contributions import (
    Contribution,
    new_contribution_id,
    payload_from_dict,
    STATE_ACCEPTED,
    STATE_PENDING,
)
from .errors import (
    AlreadyExistsError,
    AuthorizationError,
    ConflictError,
    NotFoundError,
    StateError,
    ValidationError,
)
from .identity import (
    AuthorRecord,
    check_secret_strength,
    hash_credential,
    hash_token,
    new_author_id,
    new_salt,
    new_token,
    ROLE_MODERATOR,
    session_expiry,
)
from .moderation import (
    CheckReport,
    decide,
    materialize,
    run_checks,
    StubEvidenceProvider,
    Verdict,
    VERDICT_AUTO_ACCEPT,
    VERDICT_AUTO_REJECT,
    VERDICT_NEEDS_HUMAN,
)
from .patches import PatchConflictError
from .state import SystemState, apply_event, check_integrity, replay
from .store import canonical_title, Revision


def _invert_blocks(prev_text: str, accepted_text: str, head_text: str) -> str:
    """Undo the prev->accepted change on top of head, block by block.

    Matching whole parsed blocks instead of raw lines keeps the
    inversion immune to later edits elsewhere on the page: only the
    blocks the contribution itself produced must still be present at
    head, exactly once.
    """
    prev = markup.parse(prev_text).blocks
    acc = markup.parse(accepted_text).blocks
    head = list(markup.parse(head_text).blocks)

    lo = 0
    while lo < len(prev) and lo < len(acc) and prev[lo] == acc[lo]:
        lo += 1
    hi = 0
    while (
        hi < len(prev) - lo
        and hi < len(acc) - lo
        and prev[len(prev) - 1 - hi] == acc[len(acc) - 1 - hi]
    ):
        hi += 1
    produced = list(acc[lo : len(acc) - hi])
    restored = list(prev[lo : len(prev) - hi])

    if produced:
        width = len(produced)
        spots = [
            i for i in range(len(head) - width + 1) if head[i : i + width] == produced
        ]
        if len(spots) != 1:
            raise ConflictError(
                f"the contributed blocks appear {len(spots)} times at head"
            )
        start = spots[0]
        new_blocks = head[:start] + restored + head[start + width :]
    else:
        new_blocks = _reinsert(head, restored, acc, lo)
    return markup.render(markup.DocumentTree(tuple(new_blocks)))


def _reinsert(head: list, restored: list, acc: tuple, lo: int) -> list:
    # Pure deletion: nothing of the contribution remains to match, so
    # anchor the re-insertion to an unchanged neighbor block, falling
    # back to the original offset.
    if lo < len(acc):
        spots = [i for i, block in enumerate(head) if block == acc[lo]]
        if len(spots) == 1:
            return head[: spots[0]] + restored + head[spots[0] :]
    if lo > 0:
        spots = [i for i, block in enumerate(head) if block == acc[lo - 1]]
        if len(spots) == 1:
            return head[: spots[0] + 1] + restored + head[spots[0] + 1 :]
    cut = min(lo, len(head))
    return head[:cut] + restored + head[cut:]


class WikiEngine:
    """Open the log, replay it, and serve commands and queries."""

    def __init__(self, config: ServiceConfig, clock=now_iso):
        self.config = config
        self._clock = clock
        self._lock = threading.RLock()
        self._log = EventLog(config.data_dir, fsync=config.fsync)
        try:
            self._events = self._log.take_initial_events()
            self.state = replay(self._events)
            check_integrity(self.state)
        except Exception:
            self._log.close()
            raise
        self.providers = []
        if config.evidence_stub_path is not None:
            self.providers.append(StubEvidenceProvider(config.evidence_stub_path))

    # -- plumbing --------------------------------------------------------

    def _now(self) -> str:
        # Clamp to the log tail so event timestamps never run backwards
        # even if the wall clock does.
        return max(self._clock(), self._log.last_at)

    def _commit(self, entries: list[tuple[str, str, dict]], at: str) -> list:
        events = self._log.append_batch(entries, at)
        for event in events:
            apply_event(self.state, event)
        self._events.extend(events)
        return events

    def _require_moderator(self, author: AuthorRecord) -> None:
        if not author.is_moderator:
            raise AuthorizationError(f"{author.username!r} lacks the moderator role")

    def close(self) -> None:
        self._log.close()

    def __enter__(self) -> "WikiEngine":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    @property
    def events(self) -> list:
        return list(self._events)

    # -- identity commands -----------------------------------------------

    def register_author(
        self, username: str, display_name: str, affiliation: str, secret: str
    ) -> AuthorRecord:
        # Everything is validated before the event is built; event
        # application must never fail after the batch is on disk.
        check_secret_strength(secret)
        if not username or username != username.strip():
            raise ValidationError("username must be non-empty with no surrounding whitespace")
        with self._lock:
            if username in self.state.registry.by_username:
                raise AlreadyExistsError(f"username {username!r} is taken")
            author_id = new_author_id()
            salt = new_salt()
            payload = {
                "author_id": author_id,
                "username": username,
                "display_name": display_name,
                "affiliation": affiliation,
                "cred_salt": salt,
                "cred_hash": hash_credential(secret, salt, self.config.hash_iterations),
                "iterations": self.config.hash_iterations,
            }
            self._commit([(audit.E_AUTHOR_REGISTERED, author_id, payload)], self._now())
            return self.state.registry.get(author_id)

    def authenticate(self, username: str, secret: str) -> tuple[str, str]:
        """Verify a login and issue a fresh session. Returns (token, expires_at);
        the raw token exists only in this return value, never in storage."""
        with self._lock:
            record = self.state.registry.check_credentials(username, secret)
            token = new_token()
            at = self._now()
            expires_at = session_expiry(at, self.config.session_ttl_hours)
            payload = {
                "token_sha256": hash_token(token),
                "author_id": record.author_id,
                "expires_at": expires_at,
            }
            self._commit([(audit.E_SESSION_ISSUED, record.author_id, payload)], at)
            return token, expires_at

    def resolve(self, token: str) -> AuthorRecord:
        with self._lock:
            return self.state.registry.resolve(token, self._now())

    def grant_moderator(self, username: str, actor: str = ACTOR_SYSTEM) -> AuthorRecord:
        with self._lock:
            record = self.state.registry.get_by_username(username)
            if not record.is_moderator:
                payload = {"author_id": record.author_id, "role": ROLE_MODERATOR}
                self._commit([(audit.E_ROLE_GRANTED, actor, payload)], self._now())
            return record

    # -- page commands ---------------------------------------------------

    def create_page(self, title: str, text: str, author: AuthorRecord) -> Revision:
        self._require_moderator(author)
        with self._lock:
            key = canonical_title(title)
            if key in self.state.pages:
                raise AlreadyExistsError(f"page {key!r} already exists")
            payload = {
                "title": key,
                "text": markup.canonicalize(text),
                "author_id": author.author_id,
            }
            self._commit([(audit.E_PAGE_CREATED, author.author_id, payload)], self._now())
            return self.state.pages.get(key).head

    # -- the contribution pipeline ---------------------------------------

    def submit(
        self,
        token: str,
        page: str,
        base_rev_seq: int,
        kind: str,
        anchor: dict,
        payload: dict,
        rationale: str = "",
    ) -> tuple[Contribution, CheckReport, Verdict]:
        """Separate, enqueue, check, and route one submission.

        The identity half stops at resolve(); the stored contribution holds
        only the author id. Auto verdicts are executed in the same atomic
        batch when policy allows.
        """
        with self._lock:
            author = self.state.registry.resolve(token, self._now())
            key = canonical_title(page)
            page_rec = self.state.pages.get(key)  # not-found propagates
            if not 1 <= base_rev_seq <= page_rec.head.rev_seq:
                raise NotFoundError(
                    f"page {key!r} has no revision {base_rev_seq} to base on"
                )
            if not isinstance(anchor, dict) or "slug" not in anchor:
                raise ValidationError("anchor must be an object with a slug")
            slug = str(anchor["slug"])
            occurrence = int(anchor.get("occurrence", 1))
            parsed_payload = payload_from_dict(kind, payload)
            base_tree = markup.parse(page_rec.revision(base_rev_seq).text)
            if not markup.has_anchor(base_tree, markup.Anchor(slug, occurrence)):
                raise NotFoundError(
                    f"anchor ({slug!r}, {occurrence}) not present in "
                    f"{key!r} revision {base_rev_seq}"
                )

            at = self._now()
            contribution = Contribution(
                contribution_id=new_contribution_id(),
                page=key,
                base_rev_seq=base_rev_seq,
                kind=kind,
                anchor_slug=slug,
                anchor_occurrence=occurrence,
                payload=parsed_payload,
                rationale=rationale,
                author_id=author.author_id,
                submitted_at=at,
            )
            report = run_checks(
                contribution,
                self.state.registry,
                self.state.pages,
                self.providers,
                at,
                self.config.scoring,
            )
            verdict = decide(report, self.config.policy)

            entries = [
                (audit.E_CONTRIB_SUBMITTED, author.author_id, contribution.to_dict()),
                (audit.E_CHECKS_COMPUTED, ACTOR_SYSTEM, report.to_dict()),
                (
                    audit.E_VERDICT_ISSUED,
                    ACTOR_SYSTEM,
                    {
                        "contribution_id": contribution.contribution_id,
                        "verdict": verdict.kind,
                        "reason": verdict.reason,
                    },
                ),
            ]
            if self.config.policy.auto_apply and verdict.kind == VERDICT_AUTO_ACCEPT:
                new_text = materialize(contribution, page_rec.head.text)
                entries.append(
                    (
                        audit.E_REVISION_COMMITTED,
                        ACTOR_SYSTEM,
                        {
                            "page": key,
                            "rev_seq": page_rec.head.rev_seq + 1,
                            "text": new_text,
                            "author_id": author.author_id,
                            "contribution_id": contribution.contribution_id,
                        },
                    )
                )
                entries.append(
                    (
                        audit.E_CONTRIB_ACCEPTED,
                        ACTOR_SYSTEM,
                        {
                            "contribution_id": contribution.contribution_id,
                            "rev_seq": page_rec.head.rev_seq + 1,
                        },
                    )
                )
            elif self.config.policy.auto_apply and verdict.kind == VERDICT_AUTO_REJECT:
                entries.append(
                    (
                        audit.E_CONTRIB_REJECTED,
                        ACTOR_SYSTEM,
                        {
                            "contribution_id": contribution.contribution_id,
                            "reason": verdict.reason,
                        },
                    )
                )
            self._commit(entries, at)
            return (
                self.state.contributions.get(contribution.contribution_id),
                report,
                verdict,
            )

    def decide_contribution(
        self,
        contribution_id: str,
        decision: str,
        actor: AuthorRecord,
        reason: str | None = None,
    ) -> Contribution:
        """A human moderator accepts or rejects a pending contribution.

        An accept on a page that drifted until the change no longer applies
        does not guess: the conflict is recorded as a fresh needs-human
        check report and the call fails with a conflict error.
        """
        self._require_moderator(actor)
        if decision not in ("accept", "reject"):
            raise ValidationError(f"decision must be accept or reject, got {decision!r}")
        with self._lock:
            contribution = self.state.contributions.get(contribution_id)
            if contribution.status.state != STATE_PENDING:
                raise StateError(
                    f"contribution {contribution_id} is {contribution.status.state}, "
                    "not pending"
                )
            at = self._now()
            if decision == "reject":
                self._commit(
                    [
                        (
                            audit.E_CONTRIB_REJECTED,
                            actor.author_id,
                            {"contribution_id": contribution_id, "reason": reason or ""},
                        )
                    ],
                    at,
                )
                return self.state.contributions.get(contribution_id)

            page_rec = self.state.pages.get(contribution.page)
            try:
                new_text = materialize(contribution, page_rec.head.text)
            except (PatchConflictError, NotFoundError) as exc:
                report = run_checks(
                    contribution,
                    self.state.registry,
                    self.state.pages,
                    self.providers,
                    at,
                    self.config.scoring,
                )
                self._commit(
                    [
                        (audit.E_CHECKS_COMPUTED, ACTOR_SYSTEM, report.to_dict()),
                        (
                            audit.E_VERDICT_ISSUED,
                            ACTOR_SYSTEM,
                            {
                                "contribution_id": contribution_id,
                                "verdict": VERDICT_NEEDS_HUMAN,
                                "reason": f"does not apply to current head: {exc}",
                            },
                        ),
                    ],
                    at,
                )
                raise ConflictError(
                    f"contribution {contribution_id} no longer applies to "
                    f"{contribution.page!r}: {exc}"
                ) from exc

            rev_seq = page_rec.head.rev_seq + 1
            self._commit(
                [
                    (
                        audit.E_REVISION_COMMITTED,
                        actor.author_id,
                        {
                            "page": contribution.page,
                            "rev_seq": rev_seq,
                            "text": new_text,
                            "author_id": contribution.author_id,
                            "contribution_id": contribution_id,
                        },
                    ),
                    (
                        audit.E_CONTRIB_ACCEPTED,
                        actor.author_id,
                        {"contribution_id": contribution_id, "rev_seq": rev_seq},
                    ),
                ],
                at,
            )
            return self.state.contributions.get(contribution_id)

    def revert_contribution(self, contribution_id: str, actor: AuthorRecord) -> Revision:
        """Undo an accepted contribution without destroying history.

        If its revision is still head, the preceding revision's text is
        restored outright. Otherwise the contribution's own change is
        inverted and re-applied, preserving later work elsewhere on the
        page; an ambiguous inversion is a conflict, resolved manually via
        revert_page.
        """
        self._require_moderator(actor)
        with self._lock:
            contribution = self.state.contributions.get(contribution_id)
            if contribution.status.state != STATE_ACCEPTED:
                raise StateError(
                    f"contribution {contribution_id} is {contribution.status.state}, "
                    "not accepted"
                )
            page_rec = self.state.pages.get(contribution.page)
            rev_seq = contribution.status.rev_seq
            before = page_rec.revision(rev_seq - 1).text
            head = page_rec.head
            if head.rev_seq == rev_seq:
                new_text = before
                source = {"type": "revert", "target": rev_seq - 1, "via": contribution_id}
            else:
                try:
                    new_text = _invert_blocks(
                        before, page_rec.revision(rev_seq).text, head.text
                    )
                except ConflictError as exc:
                    raise ConflictError(
                        f"cannot invert {contribution_id} cleanly: {exc}; "
                        "revert the page to an explicit revision instead"
                    ) from exc
                source = {"type": "revert", "target": None, "via": contribution_id}

            at = self._now()
            self._commit(
                [
                    (
                        audit.E_REVISION_REVERTED,
                        actor.author_id,
                        {
                            "page": contribution.page,
                            "rev_seq": head.rev_seq + 1,
                            "text": new_text,
                            "author_id": actor.author_id,
                            "source": source,
                        },
                    ),
                    (
                        audit.E_CONTRIB_REVERTED,
                        actor.author_id,
                        {
                            "contribution_id": contribution_id,
                            "revert_rev_seq": head.rev_seq + 1,
                        },
                    ),
                ],
                at,
            )
            return self.state.pages.get(contribution.page).head

    def revert_page(self, title: str, target_rev_seq: int, actor: AuthorRecord) -> Revision:
        """Restore a page to an explicit earlier revision (moderator tool)."""
        self._require_moderator(actor)
        with self._lock:
            page_rec = self.state.pages.get(canonical_title(title))
            head = page_rec.head
            if not 1 <= target_rev_seq < head.rev_seq:
                raise ValidationError(
                    f"revert target must be an earlier revision; "
                    f"page {page_rec.title!r} head is {head.rev_seq}, "
                    f"got {target_rev_seq}"
                )
            payload = {
                "page": page_rec.title,
                "rev_seq": head.rev_seq + 1,
                "text": page_rec.revision(target_rev_seq).text,
                "author_id": actor.author_id,
                "source": {
                    "type": "revert",
                    "target": target_rev_seq,
                    "via": f"moderator:{actor.author_id}",
                },
            }
            self._commit([(audit.E_REVISION_REVERTED, actor.author_id, payload)], self._now())
            return self.state.pages.get(page_rec.title).head

    # -- queries ---------------------------------------------------------

    def list_pages(self) -> list[dict]:
        with self._lock:
            return [
                {
                    "title": title,
                    "head_rev": self.state.pages.get(title).head.rev_seq,
                }
                for title in self.state.pages.titles()
            ]

    def page_view(self, title: str, rev_seq: int | None = None) -> dict:
        with self._lock:
            page_rec = self.state.pages.get(title)
            rev = page_rec.head if rev_seq is None else page_rec.revision(rev_seq)
            tree = markup.parse(rev.text)
            return {
                "title": page_rec.title,
                "rev_seq": rev.rev_seq,
                "text": rev.text,
                "author": rev.author,
                "at": rev.at,
                "source": rev.source,
                "anchors": [a.to_dict() for a in markup.anchors(tree)],
            }

    def page_history(self, title: str) -> list[dict]:
        with self._lock:
            page_rec = self.state.pages.get(title)
            return [
                {
                    "rev_seq": rev.rev_seq,
                    "author": rev.author,
                    "at": rev.at,
                    "source": rev.source,
                }
                for rev in page_rec.revisions
            ]

    def contribution_view(self, contribution_id: str) -> dict:
        with self._lock:
            contribution = self.state.contributions.get(contribution_id)
            view = contribution.to_dict()
            report = self.state.reports.get(contribution_id)
            view["check_report"] = report.to_dict() if report else None
            view["verdict"] = self.state.verdicts.get(contribution_id)
            return view

    def moderation_queue(self) -> list[dict]:
        with self._lock:
            result = []
            for contribution in self.state.contributions.list(status=STATE_PENDING):
                view = contribution.to_dict()
                report = self.state.reports.get(contribution.contribution_id)
                view["check_report"] = report.to_dict() if report else None
                view["verdict"] = self.state.verdicts.get(contribution.contribution_id)
                result.append(view)
            return result

    def usernames(self) -> dict:
        with self._lock:
            return {a: r.username for a, r in self.state.registry.authors.items()}

    def stats_report(
        self,
        author: str | None = None,
        page: str | None = None,
        since: str | None = None,
        until: str | None = None,
    ):
        with self._lock:
            return audit.stats(
                self._events,
                author=author,
                page=page,
                since=since,
                until=until,
                usernames=self.usernames(),
            )

    def author_profile(self, username: str) -> dict:
        with self._lock:
            record = self.state.registry.get_by_username(username)
            now = self._now()
            raw = self.state.registry.score(record.author_id, now, self.config.scoring)
            outcomes = self.state.registry.outcomes_for(record.author_id)
            return {
                "author_id": record.author_id,
                "username": record.username,
                "display_name": record.display_name,
                "affiliation": record.affiliation,
                "roles": sorted(record.roles),
                "registered_at": record.registered_at,
                "history_score": raw,
                "outcomes": [
                    {"contribution_id": o.contribution_id, "kind": o.kind, "at": o.at}
                    for o in outcomes
                ],
            }

    def write_snapshot(self) -> Path:
        with self._lock:
            return audit.write_snapshot(
                self.config.data_dir, self._log.last_seq, self.state.to_dict()
            )
