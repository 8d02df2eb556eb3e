// Author profile: outcome counts and acceptance rate, folded from the
// server's audit stats for one author (matched by username or id).

import type { AppContext, View } from './app';
import { AuthorStats } from './api';

export class AuthorProfileView implements View {
    constructor(
        private readonly app: AppContext,
        private readonly parent: HTMLElement,
        private readonly author: string,
    ) {}

    async mount(): Promise<void> {
        const stats = await this.app.api.getStats({ author: this.author });
        const rows = Object.values(stats.authors);
        const h = document.createElement('h1');
        h.textContent = `Author: ${this.author}`;
        this.parent.appendChild(h);

        if (!rows.length) {
            const p = document.createElement('p');
            p.textContent = 'No contributions on record for this author.';
            this.parent.appendChild(p);
            return;
        }
        for (const row of rows) {
            this.parent.appendChild(this.card(row));
        }
    }

    destroy(): void {}

    private card(row: AuthorStats): HTMLElement {
        const section = document.createElement('section');
        section.className = 'profile-card';

        const name = document.createElement('h2');
        name.textContent = row.username || row.author_id;
        section.appendChild(name);

        const table = document.createElement('table');
        const entries: Array<[string, string]> = [
            ['submitted', String(row.submitted)],
            ['accepted', String(row.accepted)],
            ['rejected', String(row.rejected)],
            ['reverted later', String(row.reverted)],
            ['acceptance rate', row.acceptance_rate === null
                ? 'no decisions yet'
                : `${(row.acceptance_rate * 100).toFixed(1)}%`],
        ];
        for (const [label, value] of entries) {
            const tr = table.insertRow();
            const th = document.createElement('th');
            th.textContent = label;
            tr.appendChild(th);
            tr.insertCell().textContent = value;
        }
        section.appendChild(table);
        return section;
    }
}
