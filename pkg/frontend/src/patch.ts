// Line patches in the server's wire format: hunks with up to two context
// lines on each side, applied with a small fuzz window. The shapes here
// serialize directly into an edit contribution's payload.

export interface Hunk {
    base_start: number;
    context_before: string[];
    removed: string[];
    added: string[];
    context_after: string[];
}

export interface Patch {
    base_length: number;
    hunks: Hunk[];
}

export class PatchConflict extends Error {
    constructor(public readonly hunkIndex: number, detail: string) {
        super(`hunk ${hunkIndex + 1}: ${detail}`);
        this.name = 'PatchConflict';
    }
}

const MAX_FUZZ_OFFSETS = [0, -1, 1, -2, 2, -3, 3];
const CONTEXT = 2;

/** Split keeping line endings, so patches round-trip byte for byte. */
export function splitLines(text: string): string[] {
    if (text === '') {
        return [];
    }
    const lines = text.split(/(?<=\n)/);
    if (lines[lines.length - 1] === '') {
        lines.pop();
    }
    return lines;
}

interface Region {
    i1: number;
    i2: number;
    j1: number;
    j2: number;
}

// Change regions between two line arrays, from a longest-common-subsequence
// walk. Oversized inputs fall back to one whole-text hunk.
function changeRegions(a: string[], b: string[]): Region[] {
    if (a.length * b.length > 4_000_000) {
        if (!a.length && !b.length) {
            return [];
        }
        return [{ i1: 0, i2: a.length, j1: 0, j2: b.length }];
    }
    const n = a.length;
    const m = b.length;
    // dp[i][j] = LCS length of a[i:] and b[j:]
    const dp: Int32Array[] = [];
    for (let i = 0; i <= n; i++) {
        dp.push(new Int32Array(m + 1));
    }
    for (let i = n - 1; i >= 0; i--) {
        for (let j = m - 1; j >= 0; j--) {
            dp[i][j] = a[i] === b[j]
                ? dp[i + 1][j + 1] + 1
                : Math.max(dp[i + 1][j], dp[i][j + 1]);
        }
    }

    const regions: Region[] = [];
    let i = 0;
    let j = 0;
    let open: Region | null = null;
    while (i < n || j < m) {
        if (i < n && j < m && a[i] === b[j] && dp[i][j] === dp[i + 1][j + 1] + 1) {
            if (open) {
                regions.push(open);
                open = null;
            }
            i++;
            j++;
        } else {
            if (!open) {
                open = { i1: i, i2: i, j1: j, j2: j };
            }
            if (j >= m || (i < n && dp[i + 1][j] >= dp[i][j + 1])) {
                i++;
            } else {
                j++;
            }
            open.i2 = i;
            open.j2 = j;
        }
    }
    if (open) {
        regions.push(open);
    }
    return regions;
}

/** Line patch turning `oldText` into `newText`. Regions closer than
    2 * context lines merge into one hunk so context windows never overlap. */
export function diffLines(oldText: string, newText: string): Patch {
    const oldLines = splitLines(oldText);
    const newLines = splitLines(newText);

    const merged: Region[] = [];
    for (const region of changeRegions(oldLines, newLines)) {
        const last = merged[merged.length - 1];
        if (last && region.i1 - last.i2 <= 2 * CONTEXT) {
            last.i2 = region.i2;
            last.j2 = region.j2;
        } else {
            merged.push({ ...region });
        }
    }

    const hunks: Hunk[] = merged.map((r) => ({
        base_start: r.i1,
        context_before: oldLines.slice(Math.max(0, r.i1 - CONTEXT), r.i1),
        removed: oldLines.slice(r.i1, r.i2),
        added: newLines.slice(r.j1, r.j2),
        context_after: oldLines.slice(r.i2, r.i2 + CONTEXT),
    }));
    return { base_length: oldLines.length, hunks };
}

function locate(lines: string[], window: string[], expected: number, cursor: number): number | null {
    for (const offset of MAX_FUZZ_OFFSETS) {
        const pos = expected + offset;
        if (pos < cursor || pos + window.length > lines.length) {
            continue;
        }
        let hit = true;
        for (let k = 0; k < window.length; k++) {
            if (lines[pos + k] !== window[k]) {
                hit = false;
                break;
            }
        }
        if (hit) {
            return pos;
        }
    }
    if (!window.length) {
        return Math.min(Math.max(expected, cursor), lines.length);
    }
    return null;
}

/** Apply `patch` to `text`, tolerating a few lines of drift. Hunks apply
    in order and never behind already-consumed lines. */
export function applyPatch(patch: Patch, text: string): string {
    const lines = splitLines(text);
    const out: string[] = [];
    let cursor = 0;
    patch.hunks.forEach((hunk, index) => {
        const window = [...hunk.context_before, ...hunk.removed, ...hunk.context_after];
        const expected = hunk.base_start - hunk.context_before.length;
        const pos = locate(lines, window, expected, cursor);
        if (pos === null) {
            throw new PatchConflict(index, 'no matching context within fuzz window');
        }
        out.push(...lines.slice(cursor, pos));
        out.push(...hunk.context_before);
        out.push(...hunk.added);
        out.push(...hunk.context_after);
        cursor = pos + window.length;
    });
    out.push(...lines.slice(cursor));
    return out.join('');
}
