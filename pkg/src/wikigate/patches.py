"""Contextual line patches: compute, serialize, and apply with bounded fuzz.

A patch is a sequence of hunks against a base text. Each hunk records where
it expects to land (``base_start``), the lines it removes, the lines it adds,
and up to ``context`` unchanged lines on each side. Application re-locates
each hunk by matching context plus removed lines, first at the recorded
position, then at growing offsets up to ``MAX_FUZZ`` lines in either
direction. A hunk that matches nowhere in its window is a conflict and the
whole application fails; nothing is merged silently.

Lines keep their endings (``splitlines(keepends=True)``), so
``apply_patch(diff(a, b), a) == b`` holds byte for byte, including texts
with no trailing newline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from difflib import SequenceMatcher

from .errors import ConflictError, ValidationError

MAX_FUZZ = 3

# Offset search order: exact position first, then nearest neighbors.
# Fixed order makes application deterministic when several positions match.
_OFFSETS = (0, -1, 1, -2, 2, -3, 3)


class PatchConflictError(ConflictError):
    """A hunk found no matching position within the fuzz window."""

    def __init__(self, hunk_index: int, detail: str):
        super().__init__(f"hunk {hunk_index + 1}: {detail}")
        self.hunk_index = hunk_index


@dataclass(frozen=True)
class Hunk:
    base_start: int  # 0-based line index where `removed` begins in the base
    context_before: tuple[str, ...]
    removed: tuple[str, ...]
    added: tuple[str, ...]
    context_after: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "base_start": self.base_start,
            "context_before": list(self.context_before),
            "removed": list(self.removed),
            "added": list(self.added),
            "context_after": list(self.context_after),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Hunk":
        try:
            return cls(
                base_start=int(data["base_start"]),
                context_before=tuple(str(s) for s in data["context_before"]),
                removed=tuple(str(s) for s in data["removed"]),
                added=tuple(str(s) for s in data["added"]),
                context_after=tuple(str(s) for s in data["context_after"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed hunk: {exc}") from exc


@dataclass(frozen=True)
class Patch:
    hunks: tuple[Hunk, ...] = ()
    base_length: int = 0  # line count of the base the patch was computed from

    @property
    def is_empty(self) -> bool:
        return not self.hunks

    def to_dict(self) -> dict:
        return {
            "base_length": self.base_length,
            "hunks": [h.to_dict() for h in self.hunks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Patch":
        if not isinstance(data, dict):
            raise ValidationError("patch must be an object")
        try:
            hunks = tuple(Hunk.from_dict(h) for h in data["hunks"])
            return cls(hunks=hunks, base_length=int(data["base_length"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed patch: {exc}") from exc


def split_lines(text: str) -> list[str]:
    return text.splitlines(keepends=True)


def diff(old: str, new: str, context: int = 2) -> Patch:
    """Line patch turning ``old`` into ``new``.

    Change regions closer than ``2 * context`` lines are merged into one
    hunk (their shared lines travel in both ``removed`` and ``added``), so
    hunk context windows never overlap.
    """
    old_lines = split_lines(old)
    new_lines = split_lines(new)
    matcher = SequenceMatcher(None, old_lines, new_lines, autojunk=False)

    regions: list[list[int]] = []  # [i1, i2, j1, j2]
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        if regions and i1 - regions[-1][1] <= 2 * context:
            regions[-1][1] = i2
            regions[-1][3] = j2
        else:
            regions.append([i1, i2, j1, j2])

    hunks = []
    for i1, i2, j1, j2 in regions:
        hunks.append(
            Hunk(
                base_start=i1,
                context_before=tuple(old_lines[max(0, i1 - context) : i1]),
                removed=tuple(old_lines[i1:i2]),
                added=tuple(new_lines[j1:j2]),
                context_after=tuple(old_lines[i2 : i2 + context]),
            )
        )
    return Patch(hunks=tuple(hunks), base_length=len(old_lines))


def apply_patch(patch: Patch, text: str) -> str:
    """Apply ``patch`` to ``text``, tolerating up to ``MAX_FUZZ`` lines of drift.

    Hunks are applied in order and never behind an already-consumed line,
    so earlier insertions cannot be re-matched by later hunks. Raises
    :class:`PatchConflictError` on the first hunk that fits nowhere.
    """
    lines = split_lines(text)
    out: list[str] = []
    cursor = 0
    for index, hunk in enumerate(patch.hunks):
        window = list(hunk.context_before) + list(hunk.removed) + list(hunk.context_after)
        expected = hunk.base_start - len(hunk.context_before)
        pos = _locate(lines, window, expected, cursor)
        if pos is None:
            raise PatchConflictError(index, "no matching context within fuzz window")
        out.extend(lines[cursor:pos])
        out.extend(hunk.context_before)
        out.extend(hunk.added)
        out.extend(hunk.context_after)
        cursor = pos + len(window)
    out.extend(lines[cursor:])
    return "".join(out)


def _locate(lines: list[str], window: list[str], expected: int, cursor: int) -> int | None:
    for offset in _OFFSETS:
        pos = expected + offset
        if pos < cursor or pos + len(window) > len(lines):
            continue
        if lines[pos : pos + len(window)] == window:
            return pos
    # Empty window matches anywhere; pin it to the expected spot (clamped)
    # so pure insertions into short files still land.
    if not window:
        pos = min(max(expected, cursor), len(lines))
        return pos
    return None


def apply_patch_unique(patch: Patch, text: str) -> str:
    """Apply ``patch`` wherever each hunk's content matches unambiguously.

    Like :func:`apply_patch` but when the fuzz window misses, a hunk may
    land at any later position where its context-plus-removed block occurs
    exactly once. Zero occurrences or several are conflicts. Used for
    undoing changes on pages that have drifted by more than the fuzz
    window in unrelated places.
    """
    lines = split_lines(text)
    out: list[str] = []
    cursor = 0
    for index, hunk in enumerate(patch.hunks):
        window = list(hunk.context_before) + list(hunk.removed) + list(hunk.context_after)
        expected = hunk.base_start - len(hunk.context_before)
        pos = _locate(lines, window, expected, cursor)
        if pos is None:
            matches = [
                p
                for p in range(cursor, len(lines) - len(window) + 1)
                if lines[p : p + len(window)] == window
            ]
            if len(matches) != 1:
                raise PatchConflictError(
                    index,
                    "no matching context within fuzz window and "
                    f"{len(matches)} exact matches elsewhere",
                )
            pos = matches[0]
        out.extend(lines[cursor:pos])
        out.extend(hunk.context_before)
        out.extend(hunk.added)
        out.extend(hunk.context_after)
        cursor = pos + len(window)
    out.extend(lines[cursor:])
    return "".join(out)
