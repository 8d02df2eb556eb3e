"""Turn an AnalysisReport into delimited files and charts.

The CSV files are the canonical output; the PNG charts are rendered next
to them from the same report object, so numbers and pictures cannot
drift apart. matplotlib is imported lazily with the Agg backend since
this runs headless.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .audit import AnalysisReport


def authors_rows(report: AnalysisReport) -> list[list]:
    rows = [["author_id", "username", "submitted", "accepted", "rejected", "reverted", "acceptance_rate"]]
    for author_id in sorted(report.authors):
        s = report.authors[author_id]
        rate = "" if s.acceptance_rate is None else f"{s.acceptance_rate:.4f}"
        rows.append([s.author_id, s.username, s.submitted, s.accepted, s.rejected, s.reverted, rate])
    return rows


def pages_rows(report: AnalysisReport) -> list[list]:
    rows = [["title", "revisions", "reverts"]]
    for title in sorted(report.pages):
        s = report.pages[title]
        rows.append([s.title, s.revisions, s.reverts])
    return rows


def queue_depth_rows(report: AnalysisReport) -> list[list]:
    rows = [["seq", "depth"]]
    rows.extend([seq, depth] for seq, depth in report.queue_depth)
    return rows


def decisions_rows(report: AnalysisReport) -> list[list]:
    return [["mode", "count"], ["auto", report.decisions["auto"]], ["human", report.decisions["human"]]]


def format_stats(report: AnalysisReport) -> str:
    """All four tables as one CSV stream with blank-line separators."""
    out = io.StringIO()
    for block in (authors_rows(report), pages_rows(report), queue_depth_rows(report), decisions_rows(report)):
        writer = csv.writer(out, lineterminator="\n")
        writer.writerows(block)
        out.write("\n")
    return out.getvalue()


def _write_csv(path: Path, rows: list[list]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    return path


def write_report(report: AnalysisReport, out_dir: str | Path) -> list[Path]:
    """Write CSVs and charts into ``out_dir``; returns the files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _write_csv(out / "authors.csv", authors_rows(report)),
        _write_csv(out / "pages.csv", pages_rows(report)),
        _write_csv(out / "queue_depth.csv", queue_depth_rows(report)),
        _write_csv(out / "decisions.csv", decisions_rows(report)),
    ]
    written.extend(_write_charts(report, out))
    return written


def _write_charts(report: AnalysisReport, out: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []

    fig, ax = plt.subplots(figsize=(8, 4))
    if report.queue_depth:
        seqs = [s for s, _ in report.queue_depth]
        depths = [d for _, d in report.queue_depth]
        ax.step([0] + seqs, [0] + depths, where="post")
    ax.set_xlabel("event seq")
    ax.set_ylabel("pending contributions")
    ax.set_title("Moderation queue depth over time")
    fig.tight_layout()
    path = out / "queue_depth.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(["auto", "human"], [report.decisions["auto"], report.decisions["human"]])
    ax.set_ylabel("decisions")
    ax.set_title("Automatic vs human decisions")
    fig.tight_layout()
    path = out / "decisions.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4))
    authors = sorted(report.authors.values(), key=lambda s: -s.submitted)[:20]
    labels = [s.username or s.author_id[:8] for s in authors]
    xs = range(len(authors))
    bottom = [0] * len(authors)
    for kind, color in (("accepted", "#2a9d2a"), ("rejected", "#d04040"), ("reverted", "#e0a020")):
        values = [getattr(s, kind) for s in authors]
        ax.bar(xs, values, bottom=bottom, label=kind, color=color)
        bottom = [b + v for b, v in zip(bottom, values)]
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("contributions")
    ax.set_title("Outcomes by author")
    if authors:
        ax.legend()
    fig.tight_layout()
    path = out / "authors.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    return written
