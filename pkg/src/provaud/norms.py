"""Mining usage norms from audit trails and flagging departures from them.

Events are split by (action type, weekday/weekend), their start times are
binned into a histogram over the day, and each maximal run of adjacent bins
reaching ``min_support`` becomes a norm: a padded time window plus the range
of durations seen inside the run.
"""

from __future__ import annotations

import json
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from datetime import datetime

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .prov.model import NodeKind, ProvDocument, QualifiedName, RelationKind
from .query import SKILL_RESPONSE
from .timeutil import format_timestamp, normalize_timestamp

ACTION = QualifiedName("sais", "action")
MINUTES_PER_DAY = 24 * 60

#: action type -> (opening action, closing action)
INTERVAL_ACTIONS = {
    "door_open_interval": ("door_opened", "door_closed"),
}

WEEKDAY, WEEKEND = "weekday", "weekend"
OUTSIDE_WINDOW, EXCESSIVE_DURATION = "OutsideWindow", "ExcessiveDuration"


def day_class(t: datetime) -> str:
    return WEEKEND if t.weekday() >= 5 else WEEKDAY


def minute_of_day(t: datetime) -> float:
    return t.hour * 60 + t.minute + t.second / 60


@dataclass(frozen=True)
class ActionEvent:
    action_type: str
    start: datetime
    duration: float | None  # seconds; None while still open

    def __post_init__(self):
        object.__setattr__(self, "start", normalize_timestamp(self.start))
        if self.duration is not None:
            if self.duration < 0:
                raise ValueError("duration must be non-negative")
            object.__setattr__(self, "duration", float(self.duration))

    @property
    def open_ended(self) -> bool:
        return self.duration is None

    @property
    def day_class(self) -> str:
        return day_class(self.start)

    def describe(self) -> str:
        length = "still open" if self.open_ended else f"{self.duration / 60:g} min"
        return f"{self.action_type} at {format_timestamp(self.start)} ({length})"


@dataclass(frozen=True)
class NormConfig:
    bin_width: int = 30  # minutes
    min_support: int = 3
    window_pad: int = 30  # minutes
    duration_factor: float = 2.0

    def __post_init__(self):
        for name in ("bin_width", "min_support", "window_pad", "duration_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if MINUTES_PER_DAY % self.bin_width:
            raise ValueError("bin_width must divide a day")

    @classmethod
    def from_file(cls, path) -> NormConfig:
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


@dataclass(frozen=True)
class Norm:
    action_type: str
    day_class: str
    window: tuple[float, float]  # minutes of day, padded; start inclusive, end exclusive
    duration_range: tuple[float, float]  # seconds
    support: int
    core_window: tuple[float, float] | None = None  # the unpadded bin run

    def contains(self, event: ActionEvent) -> bool:
        return (
            event.action_type == self.action_type
            and event.day_class == self.day_class
            and self.window[0] <= minute_of_day(event.start) < self.window[1]
        )

    def to_record(self) -> dict:
        record = asdict(self)
        record["window"] = list(self.window)
        record["duration_range"] = list(self.duration_range)
        record["core_window"] = list(self.core_window) if self.core_window else None
        return record

    @classmethod
    def from_record(cls, record: dict) -> Norm:
        core = record.get("core_window")
        return cls(
            record["action_type"],
            record["day_class"],
            tuple(record["window"]),
            tuple(record["duration_range"]),
            int(record["support"]),
            tuple(core) if core else None,
        )

    def summary(self) -> str:
        lo, hi = self.duration_range
        return (
            f"{self.day_class}s {_hhmm(self.window[0])}-{_hhmm(self.window[1])}, "
            f"{_minutes(lo)}-{_minutes(hi)} min, support {self.support} ({self.action_type})"
        )


def _hhmm(minutes: float) -> str:
    m = int(round(minutes))
    return f"{m // 60:02d}:{m % 60:02d}"


def _minutes(seconds: float) -> str:
    return f"{seconds / 60:.0f}"


@dataclass(frozen=True)
class Violation:
    event: ActionEvent
    kind: str
    matched_norm: Norm | None = None

    def __post_init__(self):
        if self.kind == OUTSIDE_WINDOW and self.matched_norm is not None:
            raise ValueError("OutsideWindow violations have no matched norm")
        if self.kind == EXCESSIVE_DURATION and self.matched_norm is None:
            raise ValueError("ExcessiveDuration violations need the matched norm")

    def describe(self) -> str:
        return f"{self.kind}: {self.event.describe()}"


def extract_events(trail: ProvDocument, action_type: str = "door_open_interval") -> list[ActionEvent]:
    """Pair opening and closing skill actions into timed intervals.

    Actions are taken in (time, trace id) order; each opening is closed by
    the next closing action. An opening followed by another opening, or by
    nothing, yields an open-ended event.
    """
    opening, closing = INTERVAL_ACTIONS[action_type]
    actions = []
    for act in trail.nodes_of_kind(NodeKind.ACTIVITY):
        if not act.has_type(SKILL_RESPONSE) or act.start_time is None:
            continue
        action = act.value(ACTION)
        if action in (opening, closing):
            actions.append((act.start_time, str(act.id), action))
    actions.sort()
    events = []
    pending = None
    for when, _, action in actions:
        if action == opening:
            if pending is not None:
                events.append(ActionEvent(action_type, pending, None))
            pending = when
        elif pending is not None:
            events.append(ActionEvent(action_type, pending, (when - pending).total_seconds()))
            pending = None
    if pending is not None:
        events.append(ActionEvent(action_type, pending, None))
    return events


def mine_norms(events: Sequence[ActionEvent], config: NormConfig | None = None) -> list[Norm]:
    """Histogram-run mining of time-of-day norms; open-ended events are ignored."""
    config = config or NormConfig()
    width = config.bin_width
    n_bins = MINUTES_PER_DAY // width
    partitions: dict[tuple[str, str], list[list[ActionEvent]]] = defaultdict(lambda: [[] for _ in range(n_bins)])
    for event in events:
        if event.open_ended:
            continue
        b = int(minute_of_day(event.start) // width)
        partitions[(event.action_type, event.day_class)][b].append(event)

    norms = []
    for (action_type, dclass) in sorted(partitions):
        bins = partitions[(action_type, dclass)]
        b = 0
        while b < n_bins:
            if len(bins[b]) < config.min_support:
                b += 1
                continue
            first = b
            while b < n_bins and len(bins[b]) >= config.min_support:
                b += 1
            members = [e for bucket in bins[first:b] for e in bucket]
            durations = [e.duration for e in members]
            core = (float(first * width), float(b * width))
            window = (max(0.0, core[0] - config.window_pad), min(float(MINUTES_PER_DAY), core[1] + config.window_pad))
            norms.append(Norm(action_type, dclass, window, (min(durations), max(durations)), len(members), core))
    return norms


def check_violation(
    event: ActionEvent,
    norms: Sequence[Norm],
    config: NormConfig | None = None,
    now: datetime | None = None,
) -> Violation | None:
    """Compare one event with the mined norms.

    Among norms whose window contains the event start, the most lenient
    (largest maximum duration) is used for the duration check. Open-ended
    events are measured up to ``now`` when given.
    """
    config = config or NormConfig()
    matching = [n for n in norms if n.contains(event)]
    if not matching:
        return Violation(event, OUTSIDE_WINDOW)
    norm = max(matching, key=lambda n: (n.duration_range[1], n.window))
    duration = event.duration
    if duration is None and now is not None:
        duration = (normalize_timestamp(now) - event.start).total_seconds()
    if duration is not None and duration > config.duration_factor * norm.duration_range[1]:
        return Violation(event, EXCESSIVE_DURATION, norm)
    return None


def norms_to_jsonl(norms: Sequence[Norm]) -> str:
    return "".join(json.dumps(n.to_record()) + "\n" for n in norms)


def norms_from_jsonl(text: str) -> list[Norm]:
    return [Norm.from_record(json.loads(line)) for line in text.splitlines() if line.strip()]


class NormMiner(BaseEstimator):
    """Estimator wrapper: ``fit`` mines norms, ``predict`` flags violations.

    Parameters
    ----------
    bin_width : int, default=30
        Histogram bin width in minutes.
    min_support : int, default=3
        Minimum events per bin for the bin to belong to a norm.
    window_pad : int, default=30
        Minutes added on both sides of a bin run.
    duration_factor : float, default=2.0
        Events lasting longer than this multiple of a norm's longest
        duration are flagged as excessive.

    Attributes
    ----------
    norms_ : list of Norm
    """

    def __init__(self, bin_width=30, min_support=3, window_pad=30, duration_factor=2.0):
        self.bin_width = bin_width
        self.min_support = min_support
        self.window_pad = window_pad
        self.duration_factor = duration_factor

    @property
    def config(self) -> NormConfig:
        return NormConfig(self.bin_width, self.min_support, self.window_pad, self.duration_factor)

    def fit(self, X, y=None):
        from .validation import check_events

        self.norms_ = mine_norms(check_events(X), self.config)
        return self

    def predict(self, X, now: datetime | None = None) -> list[Violation | None]:
        from .validation import check_events

        check_is_fitted(self, "norms_")
        config = self.config
        return [check_violation(e, self.norms_, config, now) for e in check_events(X)]

    def violations(self, X, now: datetime | None = None) -> list[Violation]:
        return [v for v in self.predict(X, now) if v is not None]
