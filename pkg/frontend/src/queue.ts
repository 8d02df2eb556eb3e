// Moderator queue: pending contributions sorted by composite score, with
// the check report, a before/after preview, accept and reject controls,
// and one-click revert on items accepted in this session. The list polls
// the server every five seconds; every decision refetches immediately.

import type { AppContext, View } from './app';
import { ContributionView } from './api';
import { renderToFragment, sectionTextOf, canonicalize, PAGE_SLUG } from './markup';
import { applyPatch, Patch, PatchConflict } from './patch';

const POLL_MS = 5000;

function compositeOf(item: ContributionView): number {
    return item.check_report ? item.check_report.composite : -1;
}

function anchorLabel(item: ContributionView): string {
    if (item.anchor.slug === PAGE_SLUG) {
        return 'whole page';
    }
    return item.anchor.occurrence > 1
        ? `${item.anchor.slug} (${item.anchor.occurrence})`
        : item.anchor.slug;
}

export class ModeratorQueueView implements View {
    private timer: ReturnType<typeof setInterval> | null = null;
    private list!: HTMLElement;
    private recentList!: HTMLElement;
    private recent: ContributionView[] = [];
    private busy: Promise<void> = Promise.resolve();

    constructor(private readonly app: AppContext, private readonly parent: HTMLElement) {}

    async mount(): Promise<void> {
        const h = document.createElement('h1');
        h.textContent = 'Moderation queue';
        this.list = document.createElement('div');
        this.list.className = 'queue-list';

        const recentBox = document.createElement('section');
        recentBox.className = 'recent-decisions';
        const rh = document.createElement('h2');
        rh.textContent = 'Decided this session';
        this.recentList = document.createElement('ul');
        recentBox.append(rh, this.recentList);

        this.parent.append(h, this.list, recentBox);
        await this.refresh();
        this.timer = setInterval(() => void this.refresh(), POLL_MS);
    }

    destroy(): void {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }

    /** Resolves when the decision in flight (if any) has fully settled,
        including the refetch that follows it. */
    settled(): Promise<void> {
        return this.busy;
    }

    async refresh(): Promise<void> {
        let items: ContributionView[];
        try {
            items = await this.app.api.getQueue();
        } catch (err) {
            this.app.showError('Could not load the queue.', err);
            return;
        }
        items.sort((a, b) =>
            compositeOf(b) - compositeOf(a) || a.submitted_at.localeCompare(b.submitted_at));

        this.list.textContent = '';
        if (!items.length) {
            const empty = document.createElement('p');
            empty.className = 'queue-empty';
            empty.textContent = 'The queue is empty.';
            this.list.appendChild(empty);
        }
        for (const item of items) {
            this.list.appendChild(this.renderItem(item));
        }
        this.renderRecent();
    }

    private renderItem(item: ContributionView): HTMLElement {
        const box = document.createElement('section');
        box.className = 'queue-item';
        box.dataset.cid = item.contribution_id;

        const header = document.createElement('header');
        const title = document.createElement('strong');
        title.textContent = `${item.page}: ${item.kind} on ${anchorLabel(item)}`;
        const score = document.createElement('span');
        score.className = 'composite';
        score.textContent = item.check_report
            ? ` composite ${item.check_report.composite.toFixed(3)}`
            : ' composite n/a';
        const verdict = document.createElement('span');
        verdict.className = 'verdict';
        verdict.textContent = item.verdict ? ` [${item.verdict.verdict}]` : '';
        header.append(title, score, verdict);

        const meta = document.createElement('p');
        meta.className = 'muted';
        const profile = `#/author/${encodeURIComponent(item.author_id)}`;
        const author = document.createElement('a');
        author.href = profile;
        author.textContent = item.author_id;
        meta.append(`by `, author, ` at ${item.submitted_at}, base rev ${item.base_rev_seq}`);

        const rationale = document.createElement('p');
        rationale.textContent = item.rationale ? `Rationale: ${item.rationale}` : 'No rationale given.';

        box.append(header, meta, rationale, this.renderReport(item), this.previewDetails(item));
        box.appendChild(this.decisionControls(item));
        return box;
    }

    private renderReport(item: ContributionView): HTMLElement {
        const div = document.createElement('div');
        div.className = 'check-report';
        const report = item.check_report;
        if (!report) {
            div.textContent = 'No check report.';
            return div;
        }
        const parts = [
            `history ${report.history.toFixed(3)}`,
            `relatedness ${report.relatedness.toFixed(3)}`,
            `evidence ${report.evidence_count}`,
        ];
        const failures = report.hard_failures.length
            ? `hard failures: ${report.hard_failures.join(', ')}`
            : 'no hard failures';
        div.textContent = `${failures}; ${parts.join(', ')}`;
        return div;
    }

    private previewDetails(item: ContributionView): HTMLElement {
        const details = document.createElement('details');
        details.className = 'preview';
        const summary = document.createElement('summary');
        summary.textContent = 'Before / after';
        details.appendChild(summary);
        const body = document.createElement('div');
        details.appendChild(body);
        let loaded = false;
        details.addEventListener('toggle', () => {
            if (details.open && !loaded) {
                loaded = true;
                void this.loadPreview(item, body);
            }
        });
        return details;
    }

    private async loadPreview(item: ContributionView, body: HTMLElement): Promise<void> {
        try {
            const base = await this.app.api.getRevision(item.page, item.base_rev_seq);
            const before = sectionTextOf(base.text, item.anchor);
            const panel = (label: string, text: string | null, note?: string) => {
                const wrap = document.createElement('div');
                wrap.className = 'preview-panel';
                const h = document.createElement('h3');
                h.textContent = label;
                wrap.appendChild(h);
                if (note) {
                    const p = document.createElement('p');
                    p.className = 'muted';
                    p.textContent = note;
                    wrap.appendChild(p);
                } else {
                    wrap.appendChild(renderToFragment(document, text || ''));
                }
                return wrap;
            };
            body.textContent = '';
            body.appendChild(panel(`Before (at base rev ${item.base_rev_seq})`, before,
                before === null ? 'The anchored section does not exist at the base revision.' : undefined));
            body.appendChild(this.afterPanel(item, before, panel));
        } catch (err) {
            this.app.showError('Could not load the preview.', err);
        }
    }

    private afterPanel(
        item: ContributionView,
        before: string | null,
        panel: (label: string, text: string | null, note?: string) => HTMLElement,
    ): HTMLElement {
        if (item.kind === 'remove') {
            return panel('After', null, 'The section is removed.');
        }
        if (item.kind === 'add') {
            return panel('After (new material)', canonicalize(String(item.payload.text ?? '')));
        }
        if (item.kind === 'replace') {
            return panel('After', canonicalize(String(item.payload.text ?? '')));
        }
        try {
            const patched = applyPatch(item.payload.patch as Patch, before || '');
            return panel('After', canonicalize(patched));
        } catch (err) {
            const detail = err instanceof PatchConflict ? ` (${err.message})` : '';
            return panel('After', null, `The patch no longer applies cleanly${detail}.`);
        }
    }

    private decisionControls(item: ContributionView): HTMLElement {
        const controls = document.createElement('div');
        controls.className = 'decision-controls';
        const accept = document.createElement('button');
        accept.className = 'accept';
        accept.textContent = 'Accept';
        const reason = document.createElement('input');
        reason.className = 'reason';
        reason.placeholder = 'Reason for rejection';
        const reject = document.createElement('button');
        reject.className = 'reject';
        reject.textContent = 'Reject';

        accept.addEventListener('click', () => this.decide(item.contribution_id, 'accept'));
        reject.addEventListener('click', () =>
            this.decide(item.contribution_id, 'reject', reason.value || 'rejected from the queue'));
        controls.append(accept, reason, reject);
        return controls;
    }

    private decide(contributionId: string, decision: 'accept' | 'reject', reason?: string): void {
        this.busy = this.busy.then(async () => {
            this.app.clearError();
            try {
                const decided = await this.app.api.decide(contributionId, decision, reason);
                this.recent.unshift(decided);
            } catch (err) {
                this.app.showError(`Could not ${decision} ${contributionId}. The queue may have moved; it has been refreshed.`, err);
            }
            await this.refresh();
        });
    }

    private revert(contributionId: string): void {
        this.busy = this.busy.then(async () => {
            this.app.clearError();
            try {
                const result = await this.app.api.revert(contributionId);
                const entry = this.recent.find((c) => c.contribution_id === contributionId);
                if (entry) {
                    entry.status = {
                        state: 'reverted',
                        revert_rev_seq: result.revision.rev_seq,
                        by: '',
                        at: result.revision.at,
                    };
                }
            } catch (err) {
                this.app.showError(`Could not revert ${contributionId}.`, err);
            }
            await this.refresh();
        });
    }

    private renderRecent(): void {
        this.recentList.textContent = '';
        for (const item of this.recent) {
            const li = document.createElement('li');
            li.dataset.cid = item.contribution_id;
            const state = item.status.state;
            let line = `${item.contribution_id} on ${item.page}: ${state}`;
            if (state === 'accepted' && item.status.rev_seq !== undefined) {
                line += ` as rev ${item.status.rev_seq}`;
            }
            if (state === 'reverted' && item.status.revert_rev_seq !== undefined) {
                line += ` by rev ${item.status.revert_rev_seq}`;
            }
            li.textContent = line;
            if (state === 'accepted') {
                const revert = document.createElement('button');
                revert.className = 'revert';
                revert.textContent = 'Revert';
                revert.addEventListener('click', () => this.revert(item.contribution_id));
                li.appendChild(revert);
            }
            this.recentList.appendChild(li);
        }
    }
}
