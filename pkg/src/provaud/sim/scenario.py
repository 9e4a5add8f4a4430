"""Scenario files: timed user utterances plus user profile data.

Format (UTF-8, one record per line)::

    # comment
    @datapoint alice geo-location 51.5128,-0.1168
    2024-03-12T08:13:00Z | alice | What is the weather today?
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from ..errors import ScenarioParseError
from ..timeutil import parse_timestamp

DATA_TYPES = ("geo-location", "name", "email", "phone", "address", "birthday")

USER_ID_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.\-]*")


@dataclass
class UserProfile:
    user_id: str
    datapoints: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not USER_ID_RE.fullmatch(self.user_id):
            raise ValueError(f"invalid user id {self.user_id!r}")
        for data_type in self.datapoints:
            if data_type not in DATA_TYPES:
                raise ValueError(f"unknown data type {data_type!r}")

    def __contains__(self, data_type) -> bool:
        return data_type in self.datapoints

    def __getitem__(self, data_type) -> str:
        return self.datapoints[data_type]


@dataclass(frozen=True)
class Turn:
    time: datetime
    user_id: str
    text: str
    line: int = 0


@dataclass
class Scenario:
    turns: list[Turn] = field(default_factory=list)
    profiles: dict[str, UserProfile] = field(default_factory=dict)
    path: str | None = None

    def profile(self, user_id: str) -> UserProfile:
        return self.profiles.get(user_id) or UserProfile(user_id)

    def ordered_turns(self) -> list[Turn]:
        # stable: equal timestamps keep file order
        return sorted(self.turns, key=lambda t: t.time)


def parse_scenario(text: str, path: str | None = None) -> Scenario:
    scenario = Scenario(path=path)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            _parse_directive(scenario, line, lineno, path)
            continue
        parts = [p.strip() for p in line.split("|", 2)]
        if len(parts) != 3:
            raise ScenarioParseError("expected '<time> | <user> | <utterance>'", lineno, path)
        when, user_id, utterance = parts
        try:
            time = parse_timestamp(when)
        except ValueError as exc:
            raise ScenarioParseError(str(exc), lineno, path) from None
        if not USER_ID_RE.fullmatch(user_id):
            raise ScenarioParseError(f"invalid user id {user_id!r}", lineno, path)
        if not utterance:
            raise ScenarioParseError("empty utterance", lineno, path)
        scenario.turns.append(Turn(time, user_id, utterance, lineno))
    return scenario


def _parse_directive(scenario: Scenario, line: str, lineno: int, path: str | None) -> None:
    parts = line.split(None, 3)
    if parts[0] != "@datapoint":
        raise ScenarioParseError(f"unknown directive {parts[0]!r}", lineno, path)
    if len(parts) != 4:
        raise ScenarioParseError("expected '@datapoint <user> <type> <value>'", lineno, path)
    _, user_id, data_type, value = parts
    if not USER_ID_RE.fullmatch(user_id):
        raise ScenarioParseError(f"invalid user id {user_id!r}", lineno, path)
    if data_type not in DATA_TYPES:
        raise ScenarioParseError(
            f"unknown data type {data_type!r} (expected one of {', '.join(DATA_TYPES)})", lineno, path
        )
    profile = scenario.profiles.setdefault(user_id, UserProfile(user_id))
    profile.datapoints[data_type] = value.strip()


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))
