"""Calendar-free durations and SOP-relative offset rendering.

All arithmetic is in whole days with fixed designators: a year is 360 days,
a month 30, a week 7. Sub-day resolution is not supported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

DAYS_PER_MONTH = 30
DAYS_PER_WEEK = 7
DAYS_PER_YEAR = 360

_DURATION = re.compile(r"^P(?:(\d+)Y)?(?:(\d+)M)?(?:(\d+)W)?(?:(\d+)D)?$")


@dataclass(frozen=True, order=True)
class Duration:
    """A non-negative span of whole days."""

    days: int

    def __post_init__(self):
        if self.days < 0:
            raise ValueError(f"duration must be non-negative, got {self.days}")

    def __str__(self) -> str:
        return f"P{self.days}D"


def parse_duration(text: str) -> Duration:
    """Parse an ISO-8601 duration with Y/M/W/D designators into days.

    Mixed designators sum, e.g. P1M2W -> 44 days. Time-of-day components
    are rejected.
    """
    m = _DURATION.match(text.strip())
    if m is None or all(g is None for g in m.groups()):
        raise ValueError(f"unsupported ISO-8601 duration {text!r}")
    years, months, weeks, days = (int(g) if g else 0 for g in m.groups())
    return Duration(
        days=years * DAYS_PER_YEAR + months * DAYS_PER_MONTH + weeks * DAYS_PER_WEEK + days
    )


def parse_offset_days(text: str) -> int:
    """Parse a declared SOP offset: signed integer days, negative = before SOP."""
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"declared offset must be signed integer days, got {text!r}") from None


def render_offset(days: int) -> str:
    """Human wording for an SOP-relative offset.

    Whole multiples of 30 days render in months; anything else in days.
    """
    if days == 0:
        return "at SOP"
    side = "before SOP" if days < 0 else "after SOP"
    magnitude = abs(days)
    if magnitude % DAYS_PER_MONTH == 0:
        months = magnitude // DAYS_PER_MONTH
        unit = "month" if months == 1 else "months"
        return f"{months} {unit} {side}"
    unit = "day" if magnitude == 1 else "days"
    return f"{magnitude} {unit} {side}"
