// Application shell: hash router, session state, navigation, and the
// global error banner. Views mount into the main region and clean up
// after themselves when the route changes.

import { ApiClient, ApiError } from './api';
import { PageListView } from './pages';
import { PageReaderView } from './reader';
import { ContributionFormView } from './form';
import { ModeratorQueueView } from './queue';
import { AuthorProfileView } from './profile';
import { LoginView } from './login';

export interface View {
    mount(): Promise<void>;
    destroy(): void;
}

/** What a view needs from the shell. */
export interface AppContext {
    readonly api: ApiClient;
    readonly username: string | null;
    showError(lead: string, err: unknown): void;
    clearError(): void;
}

export class App implements AppContext {
    readonly api: ApiClient;
    username: string | null = null;
    moderator = false;

    readonly nav: HTMLElement;
    readonly banner: HTMLElement;
    readonly main: HTMLElement;
    private activeView: View | null = null;

    constructor(root: HTMLElement, apiBase: string) {
        this.api = new ApiClient(apiBase);
        root.textContent = '';
        this.nav = document.createElement('nav');
        this.nav.className = 'app-nav';
        this.banner = document.createElement('div');
        this.banner.className = 'app-banner';
        this.banner.hidden = true;
        this.main = document.createElement('main');
        this.main.className = 'app-main';
        root.append(this.nav, this.banner, this.main);
        this.renderNav();
    }

    start(): void {
        window.addEventListener('hashchange', () => this.route());
        this.route();
    }

    // -- session -----------------------------------------------------------

    async finishLogin(username: string): Promise<void> {
        this.username = username;
        // The server is the authority on roles; probing the queue once only
        // decides whether the nav shows a Queue link at all.
        try {
            await this.api.getQueue();
            this.moderator = true;
        } catch {
            this.moderator = false;
        }
        this.renderNav();
    }

    logout(): void {
        this.api.setToken(null);
        this.username = null;
        this.moderator = false;
        this.renderNav();
        window.location.hash = '#/pages';
    }

    // -- errors ------------------------------------------------------------

    showError(lead: string, err: unknown): void {
        let text = lead;
        if (err instanceof ApiError) {
            text = `${lead} The server said (${err.status}): ${err.message}`;
        } else if (err instanceof Error) {
            text = `${lead} ${err.message}`;
        }
        this.banner.textContent = text;
        this.banner.hidden = false;
        if (err instanceof ApiError && err.status === 401) {
            window.location.hash = '#/login';
        }
    }

    clearError(): void {
        this.banner.hidden = true;
        this.banner.textContent = '';
    }

    // -- navigation --------------------------------------------------------

    private renderNav(): void {
        this.nav.textContent = '';
        const links: Array<[string, string]> = [['#/pages', 'Pages']];
        if (this.moderator) {
            links.push(['#/queue', 'Queue']);
        }
        if (this.username !== null) {
            links.push([`#/author/${encodeURIComponent(this.username)}`, 'My profile']);
        }
        for (const [href, label] of links) {
            const a = document.createElement('a');
            a.href = href;
            a.textContent = label;
            this.nav.appendChild(a);
        }
        if (this.username === null) {
            const a = document.createElement('a');
            a.href = '#/login';
            a.textContent = 'Log in';
            this.nav.appendChild(a);
        } else {
            const who = document.createElement('span');
            who.className = 'nav-user';
            who.textContent = this.username;
            const out = document.createElement('button');
            out.textContent = 'Log out';
            out.addEventListener('click', () => this.logout());
            this.nav.append(who, out);
        }
    }

    // -- routing -----------------------------------------------------------

    route(): void {
        const hash = window.location.hash || '#/pages';
        const parts = hash.replace(/^#\//, '').split('/').map(decodeURIComponent);
        this.mount(this.viewFor(parts));
    }

    private viewFor(parts: string[]): View {
        switch (parts[0]) {
            case 'login':
                return new LoginView(this, this.main);
            case 'queue':
                return new ModeratorQueueView(this, this.main);
            case 'author':
                return new AuthorProfileView(this, this.main, parts[1] || '');
            case 'page': {
                const title = parts[1] || '';
                if (parts[2] === 'contribute') {
                    return new ContributionFormView(this, this.main, title);
                }
                const rev = parts[2] === 'rev' ? parseInt(parts[3], 10) : null;
                return new PageReaderView(this, this.main, title, rev);
            }
            default:
                return new PageListView(this, this.main);
        }
    }

    private mount(view: View): void {
        if (this.activeView) {
            this.activeView.destroy();
        }
        this.clearError();
        this.main.textContent = '';
        this.activeView = view;
        view.mount().catch((err) => this.showError('Could not load this view.', err));
    }
}

export function bootApp(): void {
    const root = document.getElementById('app');
    if (!root) {
        return;
    }
    const meta = document.querySelector('meta[name="api-base"]');
    const apiBase = (meta && meta.getAttribute('content')) || '';
    new App(root, apiBase).start();
}

bootApp();
