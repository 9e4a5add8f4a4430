"""Plain-English answers to audit questions, and data generalization.

Answers are built as small sentence frames (subject, verb, objects) and
realized deterministically; repeated recipients are aggregated.
"""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from importlib import resources

from .errors import OutOfRange
from .prov.model import QualifiedName
from .query import DataFlowRow
from .timeutil import normalize_timestamp

NO_DATA_SENTENCE = "No personal data was sent to any external service."

HALF_HOUR = 1800


def generalize_time(t: datetime) -> datetime:
    """Round to the nearest half hour; exact quarter-past/to ties round down."""
    t = normalize_timestamp(t)
    midnight = t.replace(hour=0, minute=0, second=0)
    seconds = int((t - midnight).total_seconds())
    base = seconds - seconds % HALF_HOUR
    if seconds % HALF_HOUR > HALF_HOUR // 2:
        base += HALF_HOUR
    return midnight + timedelta(seconds=base)


_TENTH = Decimal("0.1")


def _to_decimal(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    try:
        return Decimal(str(value).strip())
    except InvalidOperation:
        raise ValueError(f"not a number: {value!r}") from None


def generalize_location(lat, lon) -> tuple[Decimal, Decimal]:
    """Round coordinates to one decimal place (about 11 km), halves away from zero."""
    lat, lon = _to_decimal(lat), _to_decimal(lon)
    if not lat.is_finite() or abs(lat) > 90:
        raise OutOfRange(f"latitude {lat} out of range")
    if not lon.is_finite() or abs(lon) > 180:
        raise OutOfRange(f"longitude {lon} out of range")
    return lat.quantize(_TENTH, ROUND_HALF_UP), lon.quantize(_TENTH, ROUND_HALF_UP)


def generalize_value(data_type: str, value: str) -> str:
    if data_type == "geo-location":
        lat, _, lon = value.partition(",")
        g_lat, g_lon = generalize_location(lat, lon)
        return f"{g_lat},{g_lon}"
    return value


class DisplayNames:
    """Human names for services and skills, falling back to the local name."""

    def __init__(self, names: Mapping[str, str] | None = None):
        self.names = dict(names or {})

    @classmethod
    def default(cls) -> DisplayNames:
        text = resources.files("provaud").joinpath("data", "display_names.json").read_text(encoding="utf-8")
        return cls(json.loads(text))

    @classmethod
    def from_file(cls, path) -> DisplayNames:
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def __call__(self, name: QualifiedName | str) -> str:
        key = str(name)
        if key in self.names:
            return self.names[key]
        return key.partition(":")[2] or key


def conjoin(parts: Sequence[str]) -> str:
    parts = [p for p in parts if p]
    if len(parts) <= 1:
        return "".join(parts)
    return ", ".join(parts[:-1]) + " and " + parts[-1]


@dataclass
class SentenceFrame:
    subject: str
    verb: str
    objects: list[str]
    modifiers: list[str] = field(default_factory=list)

    def realize(self) -> str:
        words = [self.subject, self.verb, conjoin(self.objects), *self.modifiers]
        return " ".join(w for w in words if w) + "."


@dataclass
class NarrativePlan:
    frames: list[SentenceFrame] = field(default_factory=list)
    fallback: str = ""

    def realize(self) -> str:
        if not self.frames:
            return self.fallback
        return " ".join(frame.realize() for frame in self.frames)


def _when(t: datetime | None, generalize: bool) -> str:
    if t is None:
        return ""
    if generalize:
        t = generalize_time(t)
    return f"on {t:%Y-%m-%d} at {t:%H:%M}"


def plan_recipients(rows: Sequence[DataFlowRow], names: DisplayNames | None = None, generalize: bool = True) -> NarrativePlan:
    names = names or DisplayNames.default()
    ordered = sorted(rows, key=DataFlowRow.sort_key)
    by_type: dict[str, dict[tuple, list[DataFlowRow]]] = {}
    for row in ordered:
        by_type.setdefault(row.data_type, {}).setdefault((row.service_id, row.skill_id), []).append(row)
    plan = NarrativePlan(fallback=NO_DATA_SENTENCE)
    for data_type, groups in by_type.items():
        objects = []
        for (service, skill), group in groups.items():
            phrase = f"{names(service)} by the {names(skill)} skill"
            latest = _when(group[-1].time, generalize)
            if len(group) == 1:
                phrase = f"{phrase} {latest}".rstrip()
            else:
                phrase = f"{phrase} {len(group)} times"
                if latest:
                    phrase += f", most recently {latest}"
            objects.append(phrase)
        plan.frames.append(SentenceFrame(f"Your {data_type}", "was sent to", objects))
    return plan


def narrate_recipients(rows: Sequence[DataFlowRow], names: DisplayNames | None = None, generalize: bool = True) -> str:
    """Answer "which services got my personal data" from query rows."""
    return plan_recipients(rows, names, generalize).realize()


def narrate_usage(count: int, skill_id, names: DisplayNames | None = None) -> str:
    names = names or DisplayNames.default()
    times = "once" if count == 1 else f"{count} times"
    return f"You used the {names(skill_id)} skill {times}."
