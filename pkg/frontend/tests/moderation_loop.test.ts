// Full moderation loop against a real server: log in through the UI, see
// the pending item, accept it, watch it leave the queue, revert it, and
// race two sessions on the same decision. The server binds an ephemeral
// port; the moderator role is granted by CLI between two server runs.

import { describe, it, expect, beforeAll, afterAll } from 'vitest';
import { spawn, execFileSync, ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { App } from '../src/app';
import { ApiClient } from '../src/api';
import { ModeratorQueueView } from '../src/queue';

const PAGE_TEXT =
    '= Observations =\n\nThe first day was quiet.\n\n= Methods =\n\nWe used the usual instruments.\n';

let site: string;
let configPath: string;
let server: ChildProcess | null = null;
let base = '';
let miraApi: ApiClient;
let bobApi: ApiClient;
const mounted: ModeratorQueueView[] = [];

function startServer(): Promise<{ proc: ChildProcess; base: string }> {
    return new Promise((resolve, reject) => {
        const proc = spawn('wikigate', ['serve', '--config', configPath], {
            stdio: ['ignore', 'pipe', 'pipe'],
        });
        let out = '';
        let err = '';
        let settled = false;
        proc.stdout!.on('data', (chunk: Buffer) => {
            out += chunk.toString();
            const m = out.match(/listening on (http:\/\/[^\s]+)/);
            if (m && !settled) {
                settled = true;
                resolve({ proc, base: m[1] });
            }
        });
        proc.stderr!.on('data', (chunk: Buffer) => {
            err += chunk.toString();
        });
        proc.on('exit', (code) => {
            if (!settled) {
                settled = true;
                reject(new Error(`server exited before listening (${code}): ${err}`));
            }
        });
    });
}

function stopServer(proc: ChildProcess): Promise<void> {
    return new Promise((resolve) => {
        if (proc.exitCode !== null) {
            resolve();
            return;
        }
        proc.once('exit', () => resolve());
        proc.kill('SIGTERM');
    });
}

async function until<T>(probe: () => T | null | undefined | false, what: string, timeoutMs = 20000): Promise<T> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
        const value = probe();
        if (value) {
            return value;
        }
        if (Date.now() > deadline) {
            throw new Error(`timed out waiting for ${what}`);
        }
        await new Promise((r) => setTimeout(r, 50));
    }
}

beforeAll(async () => {
    site = mkdtempSync(join(tmpdir(), 'wikigate-ui-'));
    execFileSync('wikigate', ['init', site, '--listen', '127.0.0.1:0']);
    configPath = join(site, 'config.json');
    // Weak hashing and no fsync keep the test fast; nothing here is secret.
    const config = JSON.parse(readFileSync(configPath, 'utf8'));
    config.hash_iterations = 1000;
    config.fsync = false;
    writeFileSync(configPath, JSON.stringify(config, null, 2));

    // First run: create the accounts. The moderator grant is CLI-only and
    // needs the log to itself, so the server stops in between.
    const first = await startServer();
    const setup = new ApiClient(first.base);
    await setup.register('mira', 'mira-secret', 'Mira');
    await setup.register('bob', 'bob-secret', 'Bob');
    await stopServer(first.proc);
    execFileSync('wikigate', ['grant-moderator', '--config', configPath, 'mira']);

    const second = await startServer();
    server = second.proc;
    base = second.base;

    miraApi = new ApiClient(base);
    await miraApi.login('mira', 'mira-secret');
    await miraApi.createPage('Field Notes', PAGE_TEXT);

    bobApi = new ApiClient(base);
    await bobApi.login('bob', 'bob-secret');
});

afterAll(async () => {
    for (const view of mounted) {
        view.destroy();
    }
    if (server) {
        await stopServer(server);
    }
    rmSync(site, { recursive: true, force: true });
});

describe('moderation loop through the UI', () => {
    it('logs in, accepts the pending item, then reverts it', async () => {
        const submitted = await bobApi.submitContribution({
            page: 'Field Notes',
            base_rev_seq: 1,
            kind: 'replace',
            anchor: { slug: 'observations', occurrence: 1 },
            payload: { text: '= Observations =\n\nThe first day was quiet, apart from one incident.\n' },
            rationale: 'record the incident',
        });
        const cid = submitted.contribution_id;
        expect((await bobApi.getContribution(cid)).status.state).toBe('pending');

        const root = document.createElement('div');
        document.body.appendChild(root);
        const app = new App(root, base);
        app.start();

        // Log in through the form, as a person would.
        window.location.hash = '#/login';
        const form = await until(() => root.querySelector('form.login-form'), 'login form');
        (form.querySelector('input[name="username"]') as HTMLInputElement).value = 'mira';
        (form.querySelector('input[name="secret"]') as HTMLInputElement).value = 'mira-secret';
        form.dispatchEvent(new Event('submit', { bubbles: true, cancelable: true }));
        await until(
            () => Array.from(root.querySelectorAll('nav a')).find((a) => a.textContent === 'Queue'),
            'the Queue link after login');

        window.location.hash = '#/queue';
        const item = await until(
            () => root.querySelector(`.queue-item[data-cid="${cid}"]`),
            'the pending item in the queue');
        expect(item.querySelector('.composite')?.textContent).toMatch(/composite \d\.\d{3}/);
        expect(item.querySelector('.verdict')?.textContent).toContain('needs-human');
        expect(item.textContent).toContain('record the incident');

        // The before/after preview is computed from what the API returns.
        const details = item.querySelector('details.preview') as HTMLDetailsElement;
        details.open = true;
        details.dispatchEvent(new Event('toggle'));
        await until(() => item.querySelectorAll('.preview-panel').length === 2, 'the preview panels');
        const panels = item.querySelectorAll('.preview-panel');
        expect(panels[0].textContent).toContain('The first day was quiet.');
        expect(panels[1].textContent).toContain('apart from one incident');

        (item.querySelector('.decision-controls .accept') as HTMLButtonElement).click();
        await until(() => root.querySelector('.queue-empty'), 'the queue to drain after accepting');
        expect(root.querySelector(`.queue-item[data-cid="${cid}"]`)).toBeNull();

        const accepted = await bobApi.getContribution(cid);
        expect(accepted.status.state).toBe('accepted');
        expect(accepted.status.rev_seq).toBe(2);
        const head = await bobApi.getPage('Field Notes');
        expect(head.rev_seq).toBe(2);
        expect(head.text).toContain('apart from one incident');

        // One-click revert from the recent-decisions list.
        const entry = await until(
            () => root.querySelector(`.recent-decisions li[data-cid="${cid}"]`),
            'the decided entry');
        expect(entry.textContent).toContain('accepted as rev 2');
        (entry.querySelector('button.revert') as HTMLButtonElement).click();
        await until(
            () => root.querySelector(`.recent-decisions li[data-cid="${cid}"]`)?.textContent?.includes('reverted'),
            'the revert to land');

        const reverted = await bobApi.getContribution(cid);
        expect(reverted.status.state).toBe('reverted');
        expect(reverted.status.revert_rev_seq).toBe(3);
        const restored = await bobApi.getPage('Field Notes');
        expect(restored.rev_seq).toBe(3);
        const original = await bobApi.getRevision('Field Notes', 1);
        expect(restored.text).toBe(original.text);

        // Leave the queue so its poll timer stops before the next test.
        window.location.hash = '#/pages';
        await until(() => root.querySelector('ul.page-list'), 'the page list');
    });

    it('serializes a double decision: one session wins, the other sees the 409', async () => {
        const headNow = await bobApi.getPage('Field Notes');
        const submitted = await bobApi.submitContribution({
            page: 'Field Notes',
            base_rev_seq: headNow.rev_seq,
            kind: 'replace',
            anchor: { slug: 'observations', occurrence: 1 },
            payload: { text: '= Observations =\n\nThe first day was quiet, apart from one rainy incident.\n' },
            rationale: 'note the rain',
        });
        const cid = submitted.contribution_id;

        // Two browser tabs, two sessions, the same moderator.
        const makeTab = async () => {
            const root = document.createElement('div');
            document.body.appendChild(root);
            const app = new App(root, base);
            await app.api.login('mira', 'mira-secret');
            const view = new ModeratorQueueView(app, app.main);
            mounted.push(view);
            await view.mount();
            return { root, app, view };
        };
        const tabA = await makeTab();
        const tabB = await makeTab();

        const acceptA = tabA.root.querySelector(
            `.queue-item[data-cid="${cid}"] .accept`) as HTMLButtonElement;
        const rejectB = tabB.root.querySelector(
            `.queue-item[data-cid="${cid}"] .reject`) as HTMLButtonElement;
        expect(acceptA).not.toBeNull();
        expect(rejectB).not.toBeNull();

        // Fire both before either response lands, so the server has to pick.
        acceptA.click();
        rejectB.click();
        await tabA.view.settled();
        await tabB.view.settled();

        const banners = [tabA.app.banner, tabB.app.banner];
        const visible = banners.filter((b) => !b.hidden);
        expect(visible.length).toBe(1);
        expect(visible[0].textContent).toContain('(409)');
        expect(visible[0].textContent).toContain('not pending');

        // Both tabs refetched; the loser's view survived the error.
        expect(tabA.root.querySelector(`.queue-item[data-cid="${cid}"]`)).toBeNull();
        expect(tabB.root.querySelector(`.queue-item[data-cid="${cid}"]`)).toBeNull();
        expect(tabA.root.querySelector('.queue-list')).not.toBeNull();
        expect(tabB.root.querySelector('.queue-list')).not.toBeNull();

        const final = (await bobApi.getContribution(cid)).status.state;
        if (visible[0] === tabB.app.banner) {
            expect(final).toBe('accepted');
        } else {
            expect(final).toBe('rejected');
        }
    });
});
