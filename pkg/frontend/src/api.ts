// Typed client for the wikigate HTTP/JSON API. The session token lives in
// memory only; closing the tab forgets it.

export interface AnchorRef {
    slug: string;
    occurrence: number;
}

export interface PageSummary {
    title: string;
    head_rev: number;
}

export interface PageView {
    title: string;
    rev_seq: number;
    text: string;
    author: string;
    at: string;
    source: { type: string; target: number | null; via?: string | null };
    anchors: AnchorRef[];
}

export interface RevisionInfo {
    rev_seq: number;
    author: string;
    at: string;
    source: { type: string; target: number | null; via?: string | null };
}

export interface CheckReport {
    contribution_id: string;
    hard_failures: string[];
    history: number;
    relatedness: number;
    evidence_count: number;
    composite: number;
    computed_at: string;
}

export interface ContributionStatus {
    state: 'pending' | 'accepted' | 'rejected' | 'reverted';
    rev_seq?: number;
    revert_rev_seq?: number;
    decided_by?: string;
    by?: string;
    reason?: string;
    at?: string;
}

export interface VerdictInfo {
    verdict: string;
    reason: string | null;
    at: string;
}

export interface ContributionView {
    contribution_id: string;
    page: string;
    base_rev_seq: number;
    kind: string;
    anchor: AnchorRef;
    payload: Record<string, unknown>;
    rationale: string;
    author_id: string;
    submitted_at: string;
    status: ContributionStatus;
    check_report: CheckReport | null;
    verdict: VerdictInfo | null;
}

export interface AuthorStats {
    author_id: string;
    username: string;
    submitted: number;
    accepted: number;
    rejected: number;
    reverted: number;
    acceptance_rate: number | null;
}

export interface StatsReport {
    authors: Record<string, AuthorStats>;
    pages: Record<string, { title: string; revisions: number; reverts: number }>;
    queue_depth: Array<[number, number]>;
    decisions: { auto: number; human: number };
}

export interface SubmitResult {
    contribution_id: string;
    status: ContributionStatus;
}

/** Error body from the server, kept verbatim in `message`. */
export class ApiError extends Error {
    constructor(public readonly status: number, message: string) {
        super(message);
        this.name = 'ApiError';
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    private token: string | null = null;

    constructor(
        public readonly baseUrl: string,
        private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    get hasSession(): boolean {
        return this.token !== null;
    }

    setToken(token: string | null): void {
        this.token = token;
    }

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const headers: Record<string, string> = {};
        if (this.token !== null) {
            headers['Authorization'] = `Bearer ${this.token}`;
        }
        const init: RequestInit = { method, headers };
        if (body !== undefined) {
            headers['Content-Type'] = 'application/json';
            init.body = JSON.stringify(body);
        }
        const response = await this.fetchFn(this.baseUrl + path, init);
        const text = await response.text();
        if (!response.ok) {
            let message = text;
            try {
                const parsed = JSON.parse(text);
                if (typeof parsed.error === 'string') {
                    message = parsed.error;
                }
            } catch {
                // non-JSON error body: surface it as-is
            }
            throw new ApiError(response.status, message);
        }
        const contentType = response.headers.get('Content-Type') || '';
        if (!contentType.includes('application/json')) {
            return text as unknown as T;
        }
        return JSON.parse(text) as T;
    }

    register(username: string, secret: string, displayName = '', affiliation = ''): Promise<{ author_id: string }> {
        return this.request('POST', '/authors', {
            username,
            secret,
            display_name: displayName,
            affiliation,
        });
    }

    async login(username: string, secret: string): Promise<void> {
        const result = await this.request<{ token: string; expires_at: string }>(
            'POST', '/session', { username, secret });
        this.token = result.token;
    }

    async listPages(): Promise<PageSummary[]> {
        const result = await this.request<{ pages: PageSummary[] }>('GET', '/pages');
        return result.pages;
    }

    getPage(title: string): Promise<PageView> {
        return this.request('GET', `/pages/${encodeURIComponent(title)}`);
    }

    getRevision(title: string, revSeq: number): Promise<PageView> {
        return this.request('GET', `/pages/${encodeURIComponent(title)}/rev/${revSeq}`);
    }

    getHistory(title: string): Promise<RevisionInfo[]> {
        return this.request('GET', `/pages/${encodeURIComponent(title)}/history`);
    }

    createPage(title: string, text: string): Promise<{ title: string; rev_seq: number }> {
        return this.request('POST', '/pages', { title, text });
    }

    submitContribution(fields: {
        page: string;
        base_rev_seq: number;
        kind: string;
        anchor: AnchorRef;
        payload: Record<string, unknown>;
        rationale: string;
    }): Promise<SubmitResult> {
        return this.request('POST', '/contributions', fields);
    }

    getContribution(contributionId: string): Promise<ContributionView> {
        return this.request('GET', `/contributions/${encodeURIComponent(contributionId)}`);
    }

    getQueue(): Promise<ContributionView[]> {
        return this.request('GET', '/moderation/queue');
    }

    decide(contributionId: string, decision: 'accept' | 'reject', reason?: string): Promise<ContributionView> {
        const body: Record<string, unknown> = { decision };
        if (reason !== undefined) {
            body.reason = reason;
        }
        return this.request('POST', `/moderation/${encodeURIComponent(contributionId)}/decision`, body);
    }

    revert(contributionId: string): Promise<{ revision: RevisionInfo & { page: string } }> {
        return this.request('POST', `/moderation/${encodeURIComponent(contributionId)}/revert`, {});
    }

    getStats(filter: { author?: string; page?: string } = {}): Promise<StatsReport> {
        const params = new URLSearchParams();
        if (filter.author) params.set('author', filter.author);
        if (filter.page) params.set('page', filter.page);
        const query = params.toString();
        return this.request('GET', query ? `/audit/stats?${query}` : '/audit/stats');
    }
}
