"""Quality gate: criteria checks, verdicts, and contribution materialization.

Every pending contribution gets a CheckReport: five structural hard rules
plus three graded signals folded into one composite,

    composite = 0.5 * history' + 0.3 * relatedness + 0.2 * min(evidence, 3) / 3

where history' is the normalized decayed track-record score, relatedness
is the best Jaccard overlap between this contribution's keywords and the
author's previously accepted ones, and evidence counts external items
matching at 0.5 or better. Routing is thresholded: any hard failure or a
composite below theta_lo auto-rejects, a composite at or above theta_hi
with a clean slate auto-accepts, everything between waits for a human.

Materialization turns an accepted contribution into new page text. It is
a pure function of (contribution, current head text) so checks can dry-run
it and replay reproduces it bit for bit.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from . import markup
from .contributions import (
    KIND_ADD,
    KIND_EDIT,
    KIND_REMOVE,
    KIND_REPLACE,
    KINDS,
    AddPayload,
    Contribution,
    EditPayload,
    RemovePayload,
    ReplacePayload,
)
from .errors import NotFoundError, ValidationError
from .identity import ANONYMOUS_MESSAGE, ScoreParams, history_score, normalize_score
from .markup import Anchor
from .patches import PatchConflictError, apply_patch

RULE_IDENTITY = "identity-verified"
RULE_KIND = "kind-labeled"
RULE_BASE = "base-exists"
RULE_ANCHOR = "anchor-valid"
RULE_PATCH = "patch-applies"
HARD_RULES = (RULE_IDENTITY, RULE_KIND, RULE_BASE, RULE_ANCHOR, RULE_PATCH)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

_PAYLOAD_TYPES = {
    KIND_ADD: AddPayload,
    KIND_EDIT: EditPayload,
    KIND_REPLACE: ReplacePayload,
    KIND_REMOVE: RemovePayload,
}


@dataclass(frozen=True)
class CheckReport:
    contribution_id: str
    hard_failures: tuple[str, ...]
    history: float  # normalized, in [0, 1]
    relatedness: float
    evidence_count: int
    composite: float
    computed_at: str

    def to_dict(self) -> dict:
        return {
            "contribution_id": self.contribution_id,
            "hard_failures": list(self.hard_failures),
            "history": self.history,
            "relatedness": self.relatedness,
            "evidence_count": self.evidence_count,
            "composite": self.composite,
            "computed_at": self.computed_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CheckReport":
        return cls(
            contribution_id=data["contribution_id"],
            hard_failures=tuple(data["hard_failures"]),
            history=float(data["history"]),
            relatedness=float(data["relatedness"]),
            evidence_count=int(data["evidence_count"]),
            composite=float(data["composite"]),
            computed_at=data["computed_at"],
        )


VERDICT_AUTO_ACCEPT = "auto-accept"
VERDICT_AUTO_REJECT = "auto-reject"
VERDICT_NEEDS_HUMAN = "needs-human"


@dataclass(frozen=True)
class Verdict:
    kind: str
    report: CheckReport
    reason: str | None = None


@dataclass(frozen=True)
class Policy:
    theta_hi: float = 0.8
    theta_lo: float = 0.1
    auto_apply: bool = True

    def __post_init__(self) -> None:
        if not (0.0 <= self.theta_lo < self.theta_hi <= 1.0):
            raise ValidationError(
                f"policy thresholds must satisfy 0 <= theta_lo < theta_hi <= 1, "
                f"got theta_lo={self.theta_lo} theta_hi={self.theta_hi}"
            )

    def to_dict(self) -> dict:
        return {"theta_hi": self.theta_hi, "theta_lo": self.theta_lo, "auto_apply": self.auto_apply}

    @classmethod
    def from_dict(cls, data: dict) -> "Policy":
        return cls(
            theta_hi=float(data.get("theta_hi", 0.8)),
            theta_lo=float(data.get("theta_lo", 0.1)),
            auto_apply=bool(data.get("auto_apply", True)),
        )


# -- evidence --------------------------------------------------------------


@dataclass(frozen=True)
class EvidenceItem:
    title: str
    source: str
    score: float  # in [0, 1]


class EvidenceProvider(Protocol):
    name: str

    def lookup(self, keywords: frozenset) -> list: ...


class StubEvidenceProvider:
    """Reads a JSON array of {title, keywords, source} records from disk.

    Match score is the Jaccard overlap between the query keyword set and
    the record's keyword set. Any file or format problem yields an empty
    result; evidence lookup must never block moderation.
    """

    def __init__(self, path: str | Path, name: str = "stub"):
        self.name = name
        self._path = Path(path)
        self._entries: list[dict] | None = None

    def _load(self) -> list[dict]:
        if self._entries is None:
            try:
                raw = json.loads(self._path.read_text(encoding="utf-8"))
                self._entries = [
                    e
                    for e in raw
                    if isinstance(e, dict) and isinstance(e.get("keywords"), list)
                ]
            except (OSError, ValueError):
                self._entries = []
        return self._entries

    def lookup(self, keywords: frozenset) -> list:
        items = []
        for entry in self._load():
            entry_keys = frozenset(str(k).lower() for k in entry["keywords"])
            score = jaccard(keywords, entry_keys)
            if score > 0.0:
                items.append(
                    EvidenceItem(
                        title=str(entry.get("title", "")),
                        source=str(entry.get("source", self.name)),
                        score=score,
                    )
                )
        return items


EVIDENCE_MATCH_THRESHOLD = 0.5


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


# -- keywords and relatedness ----------------------------------------------


def extract_keywords(*texts: str) -> frozenset:
    """Lowercase alphanumeric tokens of length >= 4, across all inputs."""
    tokens: set[str] = set()
    for text in texts:
        for token in _TOKEN_RE.findall(text.lower()):
            if len(token) >= 4:
                tokens.add(token)
    return frozenset(tokens)


def payload_text(contribution: Contribution) -> str:
    payload = contribution.payload
    if isinstance(payload, (AddPayload, ReplacePayload)):
        return payload.text
    if isinstance(payload, EditPayload):
        return "".join("".join(h.added) for h in payload.patch.hunks)
    return ""


def contribution_keywords(contribution: Contribution) -> frozenset:
    return extract_keywords(payload_text(contribution), contribution.rationale, contribution.page)


def relatedness(contribution: Contribution, accepted_outcomes: list) -> float:
    """Best Jaccard overlap with any of the author's accepted outcomes."""
    keys = contribution_keywords(contribution)
    if not keys:
        return 0.0
    best = 0.0
    for outcome in accepted_outcomes:
        best = max(best, jaccard(keys, outcome.keywords))
    return best


# -- composite and verdicts ------------------------------------------------


def composite_score(history_norm: float, related: float, evidence_count: int) -> float:
    return 0.5 * history_norm + 0.3 * related + 0.2 * min(evidence_count, 3) / 3


def decide(report: CheckReport, policy: Policy) -> Verdict:
    """Pure routing decision. Same report and policy, same verdict."""
    if report.hard_failures:
        if RULE_IDENTITY in report.hard_failures:
            reason = ANONYMOUS_MESSAGE
        else:
            reason = "hard rule failed: " + ", ".join(report.hard_failures)
        return Verdict(VERDICT_AUTO_REJECT, report, reason)
    if report.composite < policy.theta_lo:
        return Verdict(
            VERDICT_AUTO_REJECT,
            report,
            f"composite {report.composite:.4f} below threshold {policy.theta_lo}",
        )
    if report.composite >= policy.theta_hi:
        return Verdict(VERDICT_AUTO_ACCEPT, report)
    return Verdict(VERDICT_NEEDS_HUMAN, report)


def run_checks(
    contribution: Contribution,
    registry,
    pages,
    providers: list,
    now: str,
    score_params: ScoreParams = ScoreParams(),
) -> CheckReport:
    """Evaluate all five hard rules and the three graded signals.

    Check failures are data in the report, never exceptions. The patch and
    anchor rules are judged by dry-running materialization against the
    page's current head, so a passing report means the contribution would
    apply cleanly right now.
    """
    failures: list[str] = []

    identity_ok = contribution.author_id in registry.authors
    if not identity_ok:
        failures.append(RULE_IDENTITY)

    kind_ok = (
        contribution.kind in KINDS
        and isinstance(contribution.payload, _PAYLOAD_TYPES[contribution.kind])
    )
    if not kind_ok:
        failures.append(RULE_KIND)

    base_ok = False
    anchor_ok = False
    patch_ok = False
    if contribution.page in pages:
        page = pages.get(contribution.page)
        base_ok = 1 <= contribution.base_rev_seq <= page.head.rev_seq
        if base_ok and kind_ok:
            anchor = Anchor(contribution.anchor_slug, contribution.anchor_occurrence)
            base_tree = markup.parse(page.revision(contribution.base_rev_seq).text)
            anchor_ok = markup.has_anchor(base_tree, anchor)
            if anchor_ok:
                try:
                    materialize(contribution, page.head.text)
                    patch_ok = True
                except PatchConflictError:
                    patch_ok = False
                except NotFoundError:
                    # Anchor vanished between base and head.
                    anchor_ok = False
    if not base_ok:
        failures.append(RULE_BASE)
    if not anchor_ok:
        failures.append(RULE_ANCHOR)
    if not patch_ok:
        failures.append(RULE_PATCH)

    if identity_ok:
        raw = history_score(registry.outcomes_for(contribution.author_id), now, score_params)
        accepted = [
            o for o in registry.outcomes_for(contribution.author_id) if o.kind == "accepted"
        ]
    else:
        raw = 0.0
        accepted = []
    history_norm = normalize_score(raw)
    related = relatedness(contribution, accepted)

    keys = contribution_keywords(contribution)
    evidence_count = 0
    for provider in providers:
        try:
            for item in provider.lookup(keys):
                if item.score >= EVIDENCE_MATCH_THRESHOLD:
                    evidence_count += 1
        except Exception:
            # Degrade to zero evidence from a failing provider.
            continue

    return CheckReport(
        contribution_id=contribution.contribution_id,
        hard_failures=tuple(failures),
        history=history_norm,
        relatedness=related,
        evidence_count=evidence_count,
        composite=composite_score(history_norm, related, evidence_count),
        computed_at=now,
    )


# -- materialization -------------------------------------------------------


def materialize(contribution: Contribution, head_text: str) -> str:
    """New canonical page text produced by applying the contribution to
    the current head. Pure; raises PatchConflictError or NotFoundError
    instead of guessing when the page has drifted underneath the change."""
    anchor = Anchor(contribution.anchor_slug, contribution.anchor_occurrence)
    payload = contribution.payload

    if anchor.is_page:
        if isinstance(payload, AddPayload):
            return _insert_section(head_text, payload.text, payload.position)
        if isinstance(payload, EditPayload):
            return markup.canonicalize(apply_patch(payload.patch, head_text))
        if isinstance(payload, ReplacePayload):
            return markup.canonicalize(payload.text)
        return ""  # remove the whole page's content

    tree = markup.parse(head_text)
    preamble, sections = markup.split_sections(tree)
    index = None
    for i, section in enumerate(sections):
        if section.anchor == anchor:
            index = i
            break
    if index is None:
        raise NotFoundError(
            f"anchor ({anchor.slug!r}, {anchor.occurrence}) not present in page "
            f"{contribution.page!r}"
        )

    if isinstance(payload, AddPayload):
        # Anchored add: the new material goes immediately after the
        # anchored section; the position field is for whole-page adds.
        new_blocks = markup.parse(markup.canonicalize(payload.text)).blocks
        rebuilt = sections[: index + 1] + [markup.Section(anchor, new_blocks)] + sections[index + 1 :]
    elif isinstance(payload, EditPayload):
        section_text = markup.render(markup.DocumentTree(sections[index].blocks))
        patched = apply_patch(payload.patch, section_text)
        new_blocks = markup.parse(markup.canonicalize(patched)).blocks
        rebuilt = sections[:index] + [markup.Section(anchor, new_blocks)] + sections[index + 1 :]
    elif isinstance(payload, ReplacePayload):
        new_blocks = markup.parse(markup.canonicalize(payload.text)).blocks
        rebuilt = sections[:index] + [markup.Section(anchor, new_blocks)] + sections[index + 1 :]
    else:  # RemovePayload: drop the section, heading included
        rebuilt = sections[:index] + sections[index + 1 :]

    return markup.render(markup.assemble(preamble, rebuilt))


def _insert_section(head_text: str, new_text: str, position: int | None) -> str:
    tree = markup.parse(head_text)
    preamble, sections = markup.split_sections(tree)
    new_blocks = markup.parse(markup.canonicalize(new_text)).blocks
    if position is None:
        index = len(sections)
    else:
        index = max(0, min(position, len(sections)))
    rebuilt = sections[:index] + [markup.Section(markup.PAGE_ANCHOR, new_blocks)] + sections[index:]
    return markup.render(markup.assemble(preamble, rebuilt))
