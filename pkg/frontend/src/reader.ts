// Page reader: rendered markup, section outline, revision history, and
// an inline diff between any revision and its predecessor.

import type { AppContext, View } from './app';
import { PageView, RevisionInfo } from './api';
import { parseMarkup, blockElement, slugify } from './markup';
import { diffLines, Hunk } from './patch';

function describeSource(source: { type: string; target: number | null }): string {
    if (source.type === 'revert') {
        return source.target === null ? 'revert' : `revert to rev ${source.target}`;
    }
    return source.type;
}

export class PageReaderView implements View {
    constructor(
        private readonly app: AppContext,
        private readonly parent: HTMLElement,
        private readonly title: string,
        private readonly revSeq: number | null,
    ) {}

    async mount(): Promise<void> {
        const page = this.revSeq === null
            ? await this.app.api.getPage(this.title)
            : await this.app.api.getRevision(this.title, this.revSeq);
        const history = await this.app.api.getHistory(this.title);
        this.render(page, history);
    }

    destroy(): void {}

    private render(page: PageView, history: RevisionInfo[]): void {
        const header = document.createElement('header');
        const h = document.createElement('h1');
        h.textContent = page.title;
        const byline = document.createElement('p');
        byline.className = 'muted';
        const pinned = this.revSeq !== null ? ' (pinned, not the head)' : '';
        byline.textContent =
            `rev ${page.rev_seq} by ${page.author} at ${page.at}, ${describeSource(page.source)}${pinned}`;
        header.append(h, byline);

        const actions = document.createElement('p');
        const contribute = document.createElement('a');
        contribute.href = `#/page/${encodeURIComponent(page.title)}/contribute`;
        contribute.textContent = 'Propose a change';
        actions.appendChild(contribute);

        this.parent.append(header, actions, this.outline(page), this.article(page));
        this.parent.appendChild(this.historyTable(history));
    }

    private outline(page: PageView): HTMLElement {
        const box = document.createElement('nav');
        box.className = 'outline';
        const sections = page.anchors.filter((a) => a.slug !== '_page');
        if (!sections.length) {
            return box;
        }
        const ul = document.createElement('ul');
        for (const anchor of sections) {
            const li = document.createElement('li');
            const a = document.createElement('a');
            a.href = `#sec-${anchor.slug}-${anchor.occurrence}`;
            a.textContent = anchor.occurrence > 1 ? `${anchor.slug} (${anchor.occurrence})` : anchor.slug;
            li.appendChild(a);
            ul.appendChild(li);
        }
        box.appendChild(ul);
        return box;
    }

    private article(page: PageView): HTMLElement {
        const article = document.createElement('article');
        const seen: Record<string, number> = {};
        for (const block of parseMarkup(page.text)) {
            const el = blockElement(document, block);
            if (block.kind === 'heading') {
                const slug = slugify(block.text);
                seen[slug] = (seen[slug] || 0) + 1;
                el.id = `sec-${slug}-${seen[slug]}`;
            }
            article.appendChild(el);
        }
        return article;
    }

    private historyTable(history: RevisionInfo[]): HTMLElement {
        const box = document.createElement('section');
        const h = document.createElement('h2');
        h.textContent = 'History';
        box.appendChild(h);

        const table = document.createElement('table');
        table.className = 'history';
        const head = table.createTHead().insertRow();
        for (const label of ['rev', 'author', 'at', 'source', '']) {
            const th = document.createElement('th');
            th.textContent = label;
            head.appendChild(th);
        }
        const body = table.createTBody();
        for (const rev of [...history].reverse()) {
            const row = body.insertRow();
            const revCell = row.insertCell();
            const link = document.createElement('a');
            link.href = `#/page/${encodeURIComponent(this.title)}/rev/${rev.rev_seq}`;
            link.textContent = String(rev.rev_seq);
            revCell.appendChild(link);
            row.insertCell().textContent = rev.author;
            row.insertCell().textContent = rev.at;
            row.insertCell().textContent = describeSource(rev.source);
            const actionCell = row.insertCell();
            if (rev.rev_seq > 1) {
                const diffButton = document.createElement('button');
                diffButton.textContent = 'diff';
                diffButton.addEventListener('click', () => this.toggleDiff(row, rev.rev_seq));
                actionCell.appendChild(diffButton);
            }
        }
        box.appendChild(table);
        return box;
    }

    private async toggleDiff(row: HTMLTableRowElement, revSeq: number): Promise<void> {
        const existing = row.nextElementSibling;
        if (existing && existing.classList.contains('diff-row')) {
            existing.remove();
            return;
        }
        try {
            const [before, after] = await Promise.all([
                this.app.api.getRevision(this.title, revSeq - 1),
                this.app.api.getRevision(this.title, revSeq),
            ]);
            const diffRow = document.createElement('tr');
            diffRow.className = 'diff-row';
            const cell = document.createElement('td');
            cell.colSpan = 5;
            cell.appendChild(renderDiff(before.text, after.text));
            diffRow.appendChild(cell);
            row.after(diffRow);
        } catch (err) {
            this.app.showError(`Could not load the diff for rev ${revSeq}.`, err);
        }
    }
}

/** Hunk-by-hunk view of the change from `oldText` to `newText`. */
export function renderDiff(oldText: string, newText: string): HTMLElement {
    const container = document.createElement('div');
    container.className = 'diff';
    const patch = diffLines(oldText, newText);
    if (!patch.hunks.length) {
        const note = document.createElement('p');
        note.className = 'muted';
        note.textContent = 'No changes.';
        container.appendChild(note);
        return container;
    }
    for (const hunk of patch.hunks) {
        container.appendChild(renderHunk(hunk));
    }
    return container;
}

function renderHunk(hunk: Hunk): HTMLElement {
    const pre = document.createElement('pre');
    pre.className = 'hunk';
    const addLine = (prefix: string, cls: string, line: string) => {
        const span = document.createElement('span');
        span.className = cls;
        span.textContent = prefix + (line.endsWith('\n') ? line : line + '\n');
        pre.appendChild(span);
    };
    for (const line of hunk.context_before) addLine('  ', 'diff-ctx', line);
    for (const line of hunk.removed) addLine('- ', 'diff-del', line);
    for (const line of hunk.added) addLine('+ ', 'diff-add', line);
    for (const line of hunk.context_after) addLine('  ', 'diff-ctx', line);
    return pre;
}
