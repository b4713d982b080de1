"""Date and query-time formats used across fixtures, prompts and records."""

from __future__ import annotations

import re
from datetime import date, datetime

_QUERY_TIME = re.compile(r"^\s*(\d{2}/\d{2}/\d{4}),\s*(\d{2}:\d{2}:\d{2})(?:\s+(\S+))?\s*$")


def parse_date(text: str) -> date:
    """Parse an ISO ``YYYY-MM-DD`` date."""
    return datetime.strptime(text.strip(), "%Y-%m-%d").date()


def parse_query_time(text: str) -> tuple[datetime, str]:
    """Parse ``MM/DD/YYYY, HH:MM:SS TZ`` into a naive datetime and the zone label.

    The zone is kept as an opaque label ("PT" and friends are not IANA names).
    """
    m = _QUERY_TIME.match(text or "")
    if not m:
        raise ValueError(f"unparseable query time {text!r}; expected 'MM/DD/YYYY, HH:MM:SS TZ'")
    when = datetime.strptime(f"{m.group(1)} {m.group(2)}", "%m/%d/%Y %H:%M:%S")
    return when, m.group(3) or ""


def datetime_to_iso(text: str) -> str:
    when, tz = parse_query_time(text)
    iso = when.isoformat()
    return f"{iso} {tz}" if tz else iso


def mdy(d: date) -> str:
    return d.strftime("%m/%d/%Y")
