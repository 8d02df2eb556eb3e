// Page index: every page with its head revision, plus a create form for
// logged-in users (the server decides who may actually create).

import type { AppContext, View } from './app';

export class PageListView implements View {
    constructor(private readonly app: AppContext, private readonly parent: HTMLElement) {}

    async mount(): Promise<void> {
        const pages = await this.app.api.listPages();

        const h = document.createElement('h1');
        h.textContent = 'Pages';
        this.parent.appendChild(h);

        if (!pages.length) {
            const empty = document.createElement('p');
            empty.textContent = 'No pages yet.';
            this.parent.appendChild(empty);
        } else {
            const ul = document.createElement('ul');
            ul.className = 'page-list';
            for (const page of pages) {
                const li = document.createElement('li');
                const a = document.createElement('a');
                a.href = `#/page/${encodeURIComponent(page.title)}`;
                a.textContent = page.title;
                const rev = document.createElement('span');
                rev.className = 'muted';
                rev.textContent = ` rev ${page.head_rev}`;
                li.append(a, rev);
                ul.appendChild(li);
            }
            this.parent.appendChild(ul);
        }

        if (this.app.username !== null) {
            this.parent.appendChild(this.createForm());
        }
    }

    destroy(): void {}

    private createForm(): HTMLElement {
        const details = document.createElement('details');
        const summary = document.createElement('summary');
        summary.textContent = 'Create a page';
        details.appendChild(summary);

        const form = document.createElement('form');
        const titleInput = document.createElement('input');
        titleInput.placeholder = 'Title';
        const textArea = document.createElement('textarea');
        textArea.placeholder = '= First section =\n\nIntroductory text.';
        textArea.rows = 8;
        const submit = document.createElement('button');
        submit.type = 'submit';
        submit.textContent = 'Create';
        form.append(titleInput, textArea, submit);

        form.addEventListener('submit', async (event) => {
            event.preventDefault();
            this.app.clearError();
            try {
                const created = await this.app.api.createPage(titleInput.value, textArea.value);
                window.location.hash = `#/page/${encodeURIComponent(created.title)}`;
            } catch (err) {
                this.app.showError('Could not create the page.', err);
            }
        });

        details.appendChild(form);
        return details;
    }
}
