"""
RFC 3339 timestamps at seconds precision, always UTC with a 'Z' suffix
"""

import re
from datetime import datetime, timezone
from typing import Callable

Clock = Callable[[], datetime]

_RFC3339_Z = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def normalize_utc(value: datetime) -> datetime:
    """Convert to aware UTC and drop sub-second precision; naive values are taken as UTC"""
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc).replace(microsecond=0)


def format_rfc3339(value: datetime) -> str:
    v = normalize_utc(value)
    # strftime does not zero-pad years below 1000 on every platform
    return f"{v.year:04d}-{v.month:02d}-{v.day:02d}T{v.hour:02d}:{v.minute:02d}:{v.second:02d}Z"


def parse_rfc3339(text: str) -> datetime:
    """
    Parse the exact 'YYYY-MM-DDTHH:MM:SSZ' form

    Raises:
        ValueError: text is not in that form or not a real date
    """
    if not _RFC3339_Z.fullmatch(text):
        raise ValueError(f"not an RFC 3339 UTC timestamp: {text!r}")
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
