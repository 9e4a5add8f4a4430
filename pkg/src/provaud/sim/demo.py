"""Generators for the bundled demo scenarios."""

from __future__ import annotations

import random
from datetime import date, datetime, timedelta, timezone

from ..timeutil import format_timestamp

GARAGE_START = date(2024, 3, 4)  # a Monday
EARLY_0500_DAYS = (2, 7, 12)  # weekday indices when the owner leaves around 05:00
EARLY_0600_DAYS = (4, 9, 15)


def _at(day: date, minutes: int) -> datetime:
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc) + timedelta(minutes=minutes)


def _session(lines: list[str], user: str, start: datetime, seconds: int) -> None:
    lines.append(f"{format_timestamp(start)} | {user} | open the garage door")
    lines.append(f"{format_timestamp(start + timedelta(seconds=seconds))} | {user} | close the garage door")


def garage_scenario_text(weeks: int = 4, seed: int = 34, user: str = "alice") -> str:
    """Garage-door usage following the weekday/weekend routine.

    Weekdays: a 2-5 minute opening around 08:00 (or around 05:00/06:00 on
    travel days) and another around 18:00. Weekends: 30-55 minute openings
    every hour between 09:00 and 22:00, alternating days shifted by half an
    hour so every half-hour bin is covered.
    """
    rng = random.Random(seed)
    lines = [
        f"# Synthetic garage-door log: {weeks} weeks from {GARAGE_START.isoformat()}",
        f"@datapoint {user} name Alice",
    ]
    weekday_index = weekend_index = 0
    for offset in range(weeks * 7):
        day = GARAGE_START + timedelta(days=offset)
        if day.weekday() < 5:
            if weekday_index in EARLY_0500_DAYS:
                morning = 5 * 60 + rng.randint(0, 20)
            elif weekday_index in EARLY_0600_DAYS:
                morning = 6 * 60 + rng.randint(0, 20)
            else:
                morning = 8 * 60 + rng.randint(-8, 12)
            _session(lines, user, _at(day, morning), rng.randint(120, 300))
            _session(lines, user, _at(day, 18 * 60 + rng.randint(-5, 15)), rng.randint(120, 300))
            weekday_index += 1
        else:
            shift = 30 if weekend_index % 2 else 0
            start = 9 * 60 + shift
            while start < 22 * 60:
                _session(lines, user, _at(day, start + rng.randint(0, 4)), rng.randint(30 * 60, 55 * 60))
                start += 60
            weekend_index += 1
    return "\n".join(lines) + "\n"
