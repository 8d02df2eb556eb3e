"""Minimal wiki markup: parsing, canonical rendering, and section anchors.

The grammar is line-oriented and total; any text parses:

  =  T  =  /  == T ==  /  === T ===   heading, level 1-3
  * item                              bullet item; consecutive items form one list
  (blank line)                        block separator
  anything else                       joins the current paragraph

Inline spans (``**bold**``, ``*italic*``, ``[[Page Title]]``) are tokenized
on demand by :func:`parse_inline`; block content keeps the raw span markup so
rendering is exact.

Canonical form, produced by :func:`render`: blocks separated by one blank
line, LF line endings, a single trailing newline, headings with single
spaces inside the fences. ``render(parse(x))`` is idempotent for every
input ``x``, and ``parse(render(t)) == t`` for trees in canonical form
(heading text trimmed, no embedded newlines in headings or items).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

PAGE_SLUG = "_page"

_HEADING_RE = re.compile(r"^(?P<fence>={1,3})\s+(?P<text>.*?)\s+(?P=fence)\s*$")
_SLUG_RE = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class Heading:
    level: int  # 1..3
    text: str


@dataclass(frozen=True)
class Paragraph:
    text: str  # one or more source lines joined with "\n"


@dataclass(frozen=True)
class BulletList:
    items: tuple[str, ...]


Block = Union[Heading, Paragraph, BulletList]


@dataclass(frozen=True)
class DocumentTree:
    blocks: tuple[Block, ...] = ()


@dataclass(frozen=True)
class Anchor:
    """Content-derived address of a section.

    ``slug`` is the lowercased, hyphenated heading text; ``occurrence``
    disambiguates repeated headings (1-based, in document order). The
    distinguished whole-page anchor is ``PAGE_ANCHOR``.
    """

    slug: str
    occurrence: int = 1

    @property
    def is_page(self) -> bool:
        return self.slug == PAGE_SLUG

    def to_dict(self) -> dict:
        return {"slug": self.slug, "occurrence": self.occurrence}


PAGE_ANCHOR = Anchor(PAGE_SLUG, 1)


@dataclass(frozen=True)
class InlineSpan:
    kind: str  # "text" | "bold" | "italic" | "link"
    content: str


def slugify(text: str) -> str:
    """Lowercase; collapse non-alphanumeric runs to one hyphen; trim hyphens."""
    return _SLUG_RE.sub("-", text.lower()).strip("-")


def parse(text: str) -> DocumentTree:
    """Parse markup into a block tree. Total: never fails on str input.

    Byte decoding is the caller's concern; this function takes decoded text.
    """
    blocks: list[Block] = []
    para_lines: list[str] = []
    list_items: list[str] = []

    def close_paragraph() -> None:
        if para_lines:
            blocks.append(Paragraph("\n".join(para_lines)))
            para_lines.clear()

    def close_list() -> None:
        if list_items:
            blocks.append(BulletList(tuple(list_items)))
            list_items.clear()

    for line in text.split("\n"):
        if line.strip() == "":
            close_paragraph()
            close_list()
            continue
        m = _HEADING_RE.match(line)
        if m:
            close_paragraph()
            close_list()
            blocks.append(Heading(len(m.group("fence")), m.group("text")))
            continue
        if line.startswith("* "):
            close_paragraph()
            list_items.append(line[2:])
            continue
        close_list()
        para_lines.append(line)
    close_paragraph()
    close_list()
    return DocumentTree(tuple(blocks))


def render_block(block: Block) -> str:
    if isinstance(block, Heading):
        fence = "=" * block.level
        return f"{fence} {block.text} {fence}"
    if isinstance(block, Paragraph):
        return block.text
    return "\n".join(f"* {item}" for item in block.items)


def render(tree: DocumentTree) -> str:
    """Canonical text: blocks joined by one blank line, trailing newline."""
    if not tree.blocks:
        return ""
    return "\n\n".join(render_block(b) for b in tree.blocks) + "\n"


def parse_inline(text: str) -> tuple[InlineSpan, ...]:
    """Tokenize one line of content into flat inline spans.

    Unclosed markers stay literal text. Spans do not nest.
    """
    token = re.compile(r"\*\*(?P<bold>.+?)\*\*|\*(?P<italic>.+?)\*|\[\[(?P<link>.+?)\]\]")
    spans: list[InlineSpan] = []
    pos = 0
    for m in token.finditer(text):
        if m.start() > pos:
            spans.append(InlineSpan("text", text[pos : m.start()]))
        if m.group("bold") is not None:
            spans.append(InlineSpan("bold", m.group("bold")))
        elif m.group("italic") is not None:
            spans.append(InlineSpan("italic", m.group("italic")))
        else:
            spans.append(InlineSpan("link", m.group("link")))
        pos = m.end()
    if pos < len(text):
        spans.append(InlineSpan("text", text[pos:]))
    return tuple(spans)


def anchors(tree: DocumentTree) -> list[Anchor]:
    """All anchors of a tree: ``_page`` first, then one per heading in order.

    Repeated slugs get occurrence 2, 3, ... so (slug, occurrence) is unique
    within the tree. Anchors are derived from content only.
    """
    result = [PAGE_ANCHOR]
    seen: dict[str, int] = {}
    for block in tree.blocks:
        if isinstance(block, Heading):
            slug = slugify(block.text)
            seen[slug] = seen.get(slug, 0) + 1
            result.append(Anchor(slug, seen[slug]))
    return result


@dataclass(frozen=True)
class Section:
    anchor: Anchor
    blocks: tuple[Block, ...]  # first block is the section's Heading


def split_sections(tree: DocumentTree) -> tuple[tuple[Block, ...], list[Section]]:
    """Split a tree into preamble blocks and heading-delimited sections.

    A section runs from its heading to the next heading of any level.
    Blocks before the first heading form the preamble (addressed only by
    the whole-page anchor).
    """
    preamble: list[Block] = []
    sections: list[Section] = []
    seen: dict[str, int] = {}
    current: list[Block] | None = None
    current_anchor: Anchor | None = None

    for block in tree.blocks:
        if isinstance(block, Heading):
            if current is not None:
                sections.append(Section(current_anchor, tuple(current)))
            slug = slugify(block.text)
            seen[slug] = seen.get(slug, 0) + 1
            current_anchor = Anchor(slug, seen[slug])
            current = [block]
        elif current is None:
            preamble.append(block)
        else:
            current.append(block)
    if current is not None:
        sections.append(Section(current_anchor, tuple(current)))
    return tuple(preamble), sections


def assemble(preamble: tuple[Block, ...], sections: list[Section]) -> DocumentTree:
    blocks: list[Block] = list(preamble)
    for section in sections:
        blocks.extend(section.blocks)
    return DocumentTree(tuple(blocks))


def find_section(tree: DocumentTree, anchor: Anchor) -> Section | None:
    """The section addressed by ``anchor``, or None (None for ``_page``)."""
    if anchor.is_page:
        return None
    _, sections = split_sections(tree)
    for section in sections:
        if section.anchor == anchor:
            return section
    return None


def has_anchor(tree: DocumentTree, anchor: Anchor) -> bool:
    return anchor.is_page or find_section(tree, anchor) is not None


def section_text(tree: DocumentTree, anchor: Anchor) -> str | None:
    """Canonical text of the addressed section; whole page for ``_page``."""
    if anchor.is_page:
        return render(tree)
    section = find_section(tree, anchor)
    if section is None:
        return None
    return render(DocumentTree(section.blocks))


def canonicalize(text: str) -> str:
    """Normalize arbitrary markup to canonical form. Idempotent."""
    return render(parse(text))
