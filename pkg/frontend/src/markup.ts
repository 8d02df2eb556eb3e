// Client-side mirror of the server's page markup: the same line grammar,
// the same slug and section rules, plus rendering into real DOM nodes.
// Rendering never goes through innerHTML, so page text cannot smuggle
// markup of its own: every character of user text lands in a text node.
//
// Grammar, as documented in the repo README:
//   = T =  / == T == / === T ===   heading, fence count = HTML heading level
//   * item                         bullet item; consecutive items form a list
//   blank line                     closes the open block
//   anything else                  paragraph line

export type Block =
    | { kind: 'heading'; level: number; text: string }
    | { kind: 'paragraph'; text: string }
    | { kind: 'bullets'; items: string[] };

export interface SectionRef {
    slug: string;
    occurrence: number;
}

export const PAGE_SLUG = '_page';

const HEADING_RE = /^(={1,3})\s+(.*?)\s+\1\s*$/;

export function slugify(text: string): string {
    return text.toLowerCase().replace(/[^a-z0-9]+/g, '-').replace(/^-+|-+$/g, '');
}

export function parseMarkup(text: string): Block[] {
    const blocks: Block[] = [];
    let paraLines: string[] = [];
    let listItems: string[] = [];

    const closeParagraph = () => {
        if (paraLines.length) {
            blocks.push({ kind: 'paragraph', text: paraLines.join('\n') });
            paraLines = [];
        }
    };
    const closeList = () => {
        if (listItems.length) {
            blocks.push({ kind: 'bullets', items: listItems });
            listItems = [];
        }
    };

    for (const line of text.split('\n')) {
        if (line.trim() === '') {
            closeParagraph();
            closeList();
            continue;
        }
        const m = HEADING_RE.exec(line);
        if (m) {
            closeParagraph();
            closeList();
            blocks.push({ kind: 'heading', level: m[1].length, text: m[2] });
            continue;
        }
        if (line.startsWith('* ')) {
            closeParagraph();
            listItems.push(line.slice(2));
            continue;
        }
        closeList();
        paraLines.push(line);
    }
    closeParagraph();
    closeList();
    return blocks;
}

function renderBlock(block: Block): string {
    if (block.kind === 'heading') {
        const fence = '='.repeat(block.level);
        return `${fence} ${block.text} ${fence}`;
    }
    if (block.kind === 'paragraph') {
        return block.text;
    }
    return block.items.map((item) => `* ${item}`).join('\n');
}

/** Canonical text: blocks joined by one blank line, trailing newline. */
export function renderMarkup(blocks: Block[]): string {
    if (!blocks.length) {
        return '';
    }
    return blocks.map(renderBlock).join('\n\n') + '\n';
}

export function canonicalize(text: string): string {
    return renderMarkup(parseMarkup(text));
}

/** All anchors of a document: `_page` first, then one per heading. */
export function anchorsOf(blocks: Block[]): SectionRef[] {
    const result: SectionRef[] = [{ slug: PAGE_SLUG, occurrence: 1 }];
    const seen: Record<string, number> = {};
    for (const block of blocks) {
        if (block.kind === 'heading') {
            const slug = slugify(block.text);
            seen[slug] = (seen[slug] || 0) + 1;
            result.push({ slug, occurrence: seen[slug] });
        }
    }
    return result;
}

interface Section {
    anchor: SectionRef;
    blocks: Block[];
}

/** A section runs from its heading to the next heading of any level. */
function splitSections(blocks: Block[]): { preamble: Block[]; sections: Section[] } {
    const preamble: Block[] = [];
    const sections: Section[] = [];
    const seen: Record<string, number> = {};
    let current: Section | null = null;

    for (const block of blocks) {
        if (block.kind === 'heading') {
            if (current) {
                sections.push(current);
            }
            const slug = slugify(block.text);
            seen[slug] = (seen[slug] || 0) + 1;
            current = { anchor: { slug, occurrence: seen[slug] }, blocks: [block] };
        } else if (current) {
            current.blocks.push(block);
        } else {
            preamble.push(block);
        }
    }
    if (current) {
        sections.push(current);
    }
    return { preamble, sections };
}

/** Canonical text of the addressed section; whole page for `_page`. */
export function sectionTextOf(text: string, anchor: SectionRef): string | null {
    if (anchor.slug === PAGE_SLUG) {
        return canonicalize(text);
    }
    const { sections } = splitSections(parseMarkup(text));
    for (const section of sections) {
        if (section.anchor.slug === anchor.slug && section.anchor.occurrence === anchor.occurrence) {
            return renderMarkup(section.blocks);
        }
    }
    return null;
}

// -- DOM rendering ---------------------------------------------------------

const INLINE_RE = /\*\*(.+?)\*\*|\*(.+?)\*|\[\[(.+?)\]\]/g;

/** One source line as inline nodes: **bold**, *italic*, [[Page]] links.
    Unclosed markers stay literal text. */
export function inlineNodes(doc: Document, line: string): Node[] {
    const nodes: Node[] = [];
    let pos = 0;
    INLINE_RE.lastIndex = 0;
    for (let m = INLINE_RE.exec(line); m !== null; m = INLINE_RE.exec(line)) {
        if (m.index > pos) {
            nodes.push(doc.createTextNode(line.slice(pos, m.index)));
        }
        if (m[1] !== undefined) {
            const el = doc.createElement('strong');
            el.textContent = m[1];
            nodes.push(el);
        } else if (m[2] !== undefined) {
            const el = doc.createElement('em');
            el.textContent = m[2];
            nodes.push(el);
        } else {
            const el = doc.createElement('a');
            el.textContent = m[3];
            el.setAttribute('href', `#/page/${encodeURIComponent(m[3])}`);
            nodes.push(el);
        }
        pos = m.index + m[0].length;
    }
    if (pos < line.length) {
        nodes.push(doc.createTextNode(line.slice(pos)));
    }
    return nodes;
}

export function blockElement(doc: Document, block: Block): HTMLElement {
    if (block.kind === 'heading') {
        const el = doc.createElement(`h${block.level}`);
        el.append(...inlineNodes(doc, block.text));
        return el;
    }
    if (block.kind === 'bullets') {
        const ul = doc.createElement('ul');
        for (const item of block.items) {
            const li = doc.createElement('li');
            li.append(...inlineNodes(doc, item));
            ul.appendChild(li);
        }
        return ul;
    }
    const p = doc.createElement('p');
    const lines = block.text.split('\n');
    lines.forEach((line, i) => {
        if (i > 0) {
            p.appendChild(doc.createElement('br'));
        }
        p.append(...inlineNodes(doc, line));
    });
    return p;
}

export function renderToFragment(doc: Document, text: string): DocumentFragment {
    const fragment = doc.createDocumentFragment();
    for (const block of parseMarkup(text)) {
        fragment.appendChild(blockElement(doc, block));
    }
    return fragment;
}
