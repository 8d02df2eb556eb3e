"""Pages as append-only revision chains.

A page is its title plus an immutable list of revisions; revision numbers
start at 1 and never reuse or reorder. There is no update-in-place and no
delete: every change, including reverts, lands as a new head revision with
a ``source`` record saying where it came from.

Titles are case-sensitive but whitespace-normalized (interior runs collapse
to one space, ends trimmed), so "A  B " and "A B" address the same page.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AlreadyExistsError, NotFoundError, ValidationError


def canonical_title(raw: str) -> str:
    title = " ".join(raw.split())
    if not title:
        raise ValidationError("page title must contain visible characters")
    return title


@dataclass(frozen=True)
class Revision:
    """One immutable page state.

    ``source`` says how the revision came to be:
      {"type": "genesis"}                                  page creation
      {"type": "contribution", "contribution_id": str}     accepted contribution
      {"type": "revert", "target": int | None, "via": str} restores revision
                                                           `target`, or undoes one
                                                           contribution by inverse
                                                           patch (target null);
                                                           `via` is the reverted
                                                           contribution id or
                                                           "moderator:<author_id>"
    """

    page: str
    rev_seq: int  # 1-based, dense, per page
    text: str  # canonical markup
    author: str
    at: str  # ISO-8601 UTC
    source: dict = field(default_factory=lambda: {"type": "genesis"})


class Page:
    def __init__(self, title: str):
        self.title = title
        self.revisions: list[Revision] = []

    @property
    def head(self) -> Revision:
        return self.revisions[-1]

    def revision(self, rev_seq: int) -> Revision:
        if not 1 <= rev_seq <= len(self.revisions):
            raise NotFoundError(f"page {self.title!r} has no revision {rev_seq}")
        return self.revisions[rev_seq - 1]


class PageStore:
    """In-memory page map. Mutations come only from event application."""

    def __init__(self) -> None:
        self._pages: dict[str, Page] = {}

    def __contains__(self, title: str) -> bool:
        return canonical_title(title) in self._pages

    def titles(self) -> list[str]:
        return sorted(self._pages)

    def get(self, title: str) -> Page:
        key = canonical_title(title)
        if key not in self._pages:
            raise NotFoundError(f"no page titled {key!r}")
        return self._pages[key]

    def head_text(self, title: str) -> str:
        return self.get(title).head.text

    def create(self, title: str, text: str, author: str, at: str) -> Revision:
        key = canonical_title(title)
        if key in self._pages:
            raise AlreadyExistsError(f"page {key!r} already exists")
        page = Page(key)
        rev = Revision(page=key, rev_seq=1, text=text, author=author, at=at)
        page.revisions.append(rev)
        self._pages[key] = page
        return rev

    def append(self, title: str, text: str, author: str, at: str, source: dict) -> Revision:
        page = self.get(title)
        rev = Revision(
            page=page.title,
            rev_seq=len(page.revisions) + 1,
            text=text,
            author=author,
            at=at,
            source=dict(source),
        )
        page.revisions.append(rev)
        return rev

    def to_dict(self) -> dict:
        return {
            title: [
                {
                    "rev_seq": r.rev_seq,
                    "text": r.text,
                    "author": r.author,
                    "at": r.at,
                    "source": r.source,
                }
                for r in page.revisions
            ]
            for title, page in self._pages.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PageStore":
        store = cls()
        for title, revs in data.items():
            page = Page(title)
            for r in revs:
                page.revisions.append(
                    Revision(
                        page=title,
                        rev_seq=int(r["rev_seq"]),
                        text=r["text"],
                        author=r["author"],
                        at=r["at"],
                        source=dict(r["source"]),
                    )
                )
            store._pages[title] = page
        return store
