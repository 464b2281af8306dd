"""Millisecond-timestamp arithmetic.

All timestamps in the engine are integer milliseconds since the Unix epoch,
and every component takes an injected clock so tests and simulations stay
deterministic. Elapsed time is expressed in fractional days.
"""

import time
from datetime import datetime, timezone
from typing import Callable

MS_PER_DAY = 86_400_000
MS_PER_MINUTE = 60_000

Clock = Callable[[], int]  # returns current time in ms


def now_ms() -> int:
    """Wall clock in milliseconds. Only the outermost CLI defaults to this."""
    return int(time.time() * 1000)


def days_between(start_ms: int, end_ms: int) -> float:
    """Elapsed fractional days from start to end."""
    return (end_ms - start_ms) / MS_PER_DAY


def parse_timestamp(value) -> int:
    """Accept an int ms timestamp or an ISO-8601 string, return ms.

    Naive datetimes are read as UTC.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a timestamp: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip().replace("Z", "+00:00")
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp() * 1000)
    raise ValueError(f"not a timestamp: {value!r}")
