"""UTC timestamp helpers. All persisted times are ISO-8601 with a Z suffix.

One fixed format (microsecond precision, Z suffix) keeps string comparison
equivalent to chronological comparison, which the engine relies on for its
monotonic clamp.
"""

from __future__ import annotations

from datetime import datetime, timezone


def now_iso() -> str:
    return to_iso(datetime.now(timezone.utc))


def to_iso(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat(timespec="microseconds").replace("+00:00", "Z")


def parse_iso(stamp: str) -> datetime:
    dt = datetime.fromisoformat(stamp.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def days_between(earlier: str, later: str) -> float:
    return (parse_iso(later) - parse_iso(earlier)).total_seconds() / 86400.0
