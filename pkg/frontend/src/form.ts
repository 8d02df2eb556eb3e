// Contribution form: pick a kind and an anchor, edit the section text,
// explain why. Edit submissions carry a line patch against the base
// revision's section; the base is pinned when the form loads.

import type { AppContext, View } from './app';
import { PageView, AnchorRef } from './api';
import { sectionTextOf, PAGE_SLUG } from './markup';
import { diffLines } from './patch';

const KIND_HELP: Record<string, string> = {
    add: 'Insert a new section after the anchored one (or append to the page).',
    edit: 'Change the anchored section; only your changed lines travel.',
    replace: 'Supply the full replacement text for the anchored section.',
    remove: 'Delete the anchored section, heading included.',
};

function anchorLabel(anchor: AnchorRef): string {
    if (anchor.slug === PAGE_SLUG) {
        return 'whole page';
    }
    return anchor.occurrence > 1 ? `${anchor.slug} (${anchor.occurrence})` : anchor.slug;
}

export class ContributionFormView implements View {
    private page!: PageView;
    private kindSelect!: HTMLSelectElement;
    private anchorSelect!: HTMLSelectElement;
    private textArea!: HTMLTextAreaElement;
    private rationaleInput!: HTMLInputElement;
    private help!: HTMLElement;
    private result!: HTMLElement;

    constructor(
        private readonly app: AppContext,
        private readonly parent: HTMLElement,
        private readonly title: string,
    ) {}

    async mount(): Promise<void> {
        this.page = await this.app.api.getPage(this.title);
        this.render();
        this.syncTextArea();
    }

    destroy(): void {}

    private render(): void {
        const h = document.createElement('h1');
        h.textContent = `Propose a change to ${this.page.title}`;
        const base = document.createElement('p');
        base.className = 'muted';
        base.textContent = `against rev ${this.page.rev_seq}`;

        const form = document.createElement('form');
        form.className = 'contribution-form';

        this.kindSelect = document.createElement('select');
        for (const kind of Object.keys(KIND_HELP)) {
            const option = document.createElement('option');
            option.value = kind;
            option.textContent = kind;
            this.kindSelect.appendChild(option);
        }
        this.anchorSelect = document.createElement('select');
        for (const anchor of this.page.anchors) {
            const option = document.createElement('option');
            option.value = `${anchor.slug} ${anchor.occurrence}`;
            option.textContent = anchorLabel(anchor);
            this.anchorSelect.appendChild(option);
        }
        this.help = document.createElement('p');
        this.help.className = 'muted';

        this.textArea = document.createElement('textarea');
        this.textArea.rows = 12;
        this.rationaleInput = document.createElement('input');
        this.rationaleInput.placeholder = 'Why this change?';

        const submit = document.createElement('button');
        submit.type = 'submit';
        submit.textContent = 'Submit contribution';

        const row = (label: string, node: HTMLElement) => {
            const wrap = document.createElement('label');
            wrap.className = 'form-row';
            const caption = document.createElement('span');
            caption.textContent = label;
            wrap.append(caption, node);
            return wrap;
        };
        form.append(
            row('Kind', this.kindSelect),
            row('Section', this.anchorSelect),
            this.help,
            row('Text', this.textArea),
            row('Rationale', this.rationaleInput),
            submit,
        );

        this.kindSelect.addEventListener('change', () => this.syncTextArea());
        this.anchorSelect.addEventListener('change', () => this.syncTextArea());
        form.addEventListener('submit', (event) => {
            event.preventDefault();
            this.submit();
        });

        this.result = document.createElement('section');
        this.result.className = 'submit-result';
        this.parent.append(h, base, form, this.result);
    }

    private selectedAnchor(): AnchorRef {
        const [slug, occurrence] = this.anchorSelect.value.split(' ');
        return { slug, occurrence: parseInt(occurrence, 10) };
    }

    private syncTextArea(): void {
        const kind = this.kindSelect.value;
        this.help.textContent = KIND_HELP[kind];
        this.textArea.disabled = kind === 'remove';
        if (kind === 'edit' || kind === 'replace') {
            this.textArea.value = sectionTextOf(this.page.text, this.selectedAnchor()) || '';
        } else {
            this.textArea.value = '';
        }
    }

    private buildPayload(): Record<string, unknown> {
        const kind = this.kindSelect.value;
        const text = this.textArea.value.replace(/\r\n/g, '\n');
        if (kind === 'add') {
            return { text, position: null };
        }
        if (kind === 'edit') {
            const before = sectionTextOf(this.page.text, this.selectedAnchor()) || '';
            return { patch: diffLines(before, text) };
        }
        if (kind === 'replace') {
            return { text };
        }
        return {};
    }

    private async submit(): Promise<void> {
        this.app.clearError();
        try {
            const submitted = await this.app.api.submitContribution({
                page: this.page.title,
                base_rev_seq: this.page.rev_seq,
                kind: this.kindSelect.value,
                anchor: this.selectedAnchor(),
                payload: this.buildPayload(),
                rationale: this.rationaleInput.value,
            });
            const full = await this.app.api.getContribution(submitted.contribution_id);
            this.result.textContent = '';
            const h = document.createElement('h2');
            h.textContent = 'Submitted';
            const p = document.createElement('p');
            const composite = full.check_report ? ` (composite ${full.check_report.composite.toFixed(3)})` : '';
            p.textContent =
                `${full.contribution_id}: ${full.status.state}, `
                + `verdict ${full.verdict ? full.verdict.verdict : 'n/a'}${composite}`;
            const back = document.createElement('a');
            back.href = `#/page/${encodeURIComponent(this.page.title)}`;
            back.textContent = 'Back to the page';
            this.result.append(h, p, back);
        } catch (err) {
            this.app.showError('The contribution was not accepted for review.', err);
        }
    }
}
