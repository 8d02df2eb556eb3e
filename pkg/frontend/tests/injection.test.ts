// Page text is attacker-supplied. Whatever it contains, the reader must
// render it as text: no elements from the stored markup, no handlers, no
// script execution.

import { describe, it, expect, beforeEach } from 'vitest';
import { ApiClient } from '../src/api';
import type { AppContext } from '../src/app';
import { PageReaderView, renderDiff } from '../src/reader';
import { parseMarkup, anchorsOf } from '../src/markup';

const EVIL_TEXT = [
    '= Greetings <script>window.pwned = "heading"</script> =',
    '',
    'Before <script>window.pwned = "paragraph"</script> after.',
    '',
    '* item <img src=x onerror="window.pwned = \'bullet\'">',
    '* <iframe src="javascript:window.pwned=1"></iframe>',
    '',
    'plain "quotes" & <b>tags</b> stay literal',
    '',
].join('\n');

function stubResponse(status: number, body: unknown): Response {
    return {
        ok: status >= 200 && status < 300,
        status,
        headers: { get: (name: string) => (name.toLowerCase() === 'content-type' ? 'application/json' : null) },
        text: () => Promise.resolve(JSON.stringify(body)),
    } as unknown as Response;
}

function apiFor(routes: Record<string, unknown>): ApiClient {
    return new ApiClient('http://stub', (input) => {
        const path = input.replace('http://stub', '');
        if (path in routes) {
            return Promise.resolve(stubResponse(200, routes[path]));
        }
        return Promise.resolve(stubResponse(404, { error: `no stub for ${path}` }));
    });
}

function contextFor(api: ApiClient): AppContext & { errors: string[] } {
    const errors: string[] = [];
    return {
        api,
        username: null,
        errors,
        showError(lead: string, err: unknown) {
            errors.push(`${lead} ${err instanceof Error ? err.message : String(err)}`);
        },
        clearError() {},
    };
}

describe('PageReaderView with hostile page text', () => {
    let parent: HTMLElement;

    beforeEach(() => {
        document.body.textContent = '';
        delete (window as { pwned?: unknown }).pwned;
        parent = document.createElement('div');
        document.body.appendChild(parent);
    });

    it('renders script-bearing text inert', async () => {
        const api = apiFor({
            '/pages/Attack': {
                title: 'Attack',
                rev_seq: 1,
                text: EVIL_TEXT,
                author: 'mallory',
                at: '2026-01-01T00:00:00+00:00',
                source: { type: 'create', target: null },
                anchors: anchorsOf(parseMarkup(EVIL_TEXT)),
            },
            '/pages/Attack/history': [
                { rev_seq: 1, author: 'mallory', at: '2026-01-01T00:00:00+00:00', source: { type: 'create', target: null } },
            ],
        });
        const ctx = contextFor(api);
        const view = new PageReaderView(ctx, parent, 'Attack', null);
        await view.mount();
        await new Promise((resolve) => setTimeout(resolve, 20));

        expect(ctx.errors).toEqual([]);
        expect(parent.querySelector('script')).toBeNull();
        expect(parent.querySelector('img')).toBeNull();
        expect(parent.querySelector('iframe')).toBeNull();
        expect((window as { pwned?: unknown }).pwned).toBeUndefined();

        // The hostile markup is still there, readable as ordinary text.
        const article = parent.querySelector('article');
        expect(article?.textContent).toContain('<script>window.pwned = "paragraph"</script>');
        expect(article?.textContent).toContain('<img src=x onerror=');
        expect(article?.querySelector('h1')?.textContent)
            .toBe('Greetings <script>window.pwned = "heading"</script>');
    });

    it('keeps hostile author names and titles inert in the history table', async () => {
        const name = '<img src=x onerror="window.pwned=3">';
        const api = apiFor({
            '/pages/Plain': {
                title: 'Plain',
                rev_seq: 1,
                text: 'hello\n',
                author: name,
                at: '2026-01-01T00:00:00+00:00',
                source: { type: 'create', target: null },
                anchors: [{ slug: '_page', occurrence: 1 }],
            },
            '/pages/Plain/history': [
                { rev_seq: 1, author: name, at: '2026-01-01T00:00:00+00:00', source: { type: 'create', target: null } },
            ],
        });
        const ctx = contextFor(api);
        await new PageReaderView(ctx, parent, 'Plain', null).mount();
        await new Promise((resolve) => setTimeout(resolve, 20));

        expect(ctx.errors).toEqual([]);
        expect(parent.querySelector('img')).toBeNull();
        expect((window as { pwned?: unknown }).pwned).toBeUndefined();
        expect(parent.querySelector('table.history')?.textContent).toContain(name);
    });
});

describe('renderDiff with hostile lines', () => {
    it('shows changed markup as text', () => {
        const el = renderDiff('safe line\n', 'safe line\n<script>window.pwned=4</script>\n');
        expect(el.querySelector('script')).toBeNull();
        expect(el.textContent).toContain('+ <script>window.pwned=4</script>');
        expect((window as { pwned?: unknown }).pwned).toBeUndefined();
    });
});
