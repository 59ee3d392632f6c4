"""Timestamp handling and small shared helpers.

All timestamps inside the hub are stored as RFC 3339 UTC text with
millisecond precision ("2024-01-02T03:04:05.678Z"). The fixed-width format
makes lexicographic order equal to chronological order, which the ordered
queries rely on.
"""

from __future__ import annotations

import re
from datetime import datetime, timezone

EPOCH_TS = "1970-01-01T00:00:00.000Z"

_CANONICAL_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z$")


class TimestampError(ValueError):
    """Raised when a value cannot be interpreted as a timestamp."""


def parse_timestamp(value) -> datetime:
    """Parse a timestamp into an aware UTC datetime.

    Accepts datetime objects and ISO-8601 / RFC 3339 text (with 'Z',
    an explicit offset, or no offset at all, in which case UTC is assumed).
    """
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, str):
        text = value.strip()
        if not text:
            raise TimestampError("empty timestamp")
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError as exc:
            raise TimestampError(f"unparseable timestamp: {value!r}") from exc
    else:
        raise TimestampError(
            f"unsupported timestamp type: {type(value).__name__}"
        )
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def normalize_timestamp(value) -> str:
    """Render a timestamp as canonical RFC 3339 UTC text (ms precision)."""
    if isinstance(value, str) and _CANONICAL_RE.match(value):
        return value
    dt = parse_timestamp(value)
    ms = dt.microsecond // 1000
    return dt.strftime("%Y-%m-%dT%H:%M:%S") + f".{ms:03d}Z"


def is_valid_timestamp(value) -> bool:
    if not isinstance(value, str):
        return False
    try:
        parse_timestamp(value)
    except TimestampError:
        return False
    return True


def sanitize_name(name: str) -> str:
    """Lowercase a type name and map non-alphanumerics to underscores."""
    cleaned = re.sub(r"[^0-9a-zA-Z]+", "_", name.strip().lower()).strip("_")
    return cleaned or "unnamed"


def dedupe_name(name: str, taken: set) -> str:
    """Resolve sanitization collisions with a numeric suffix."""
    candidate = name
    counter = 2
    while candidate in taken:
        candidate = f"{name}_{counter}"
        counter += 1
    taken.add(candidate)
    return candidate
