from __future__ import annotations

import random
from collections import Counter
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from provaud.auditor import build_audit_trail
from provaud.norms import (
    EXCESSIVE_DURATION,
    OUTSIDE_WINDOW,
    ActionEvent,
    Norm,
    NormConfig,
    NormMiner,
    check_violation,
    extract_events,
    mine_norms,
    norms_from_jsonl,
    norms_to_jsonl,
)
from provaud.pipeline import record_scenario
from provaud.prov import ProvDocument
from provaud.sim import parse_scenario

MONDAY = datetime(2024, 3, 4, tzinfo=timezone.utc)
KIND = "door_open_interval"


def at(day: int, hour: int, minute: int = 0) -> datetime:
    return MONDAY + timedelta(days=day, hours=hour, minutes=minute)


def event(day, hour, minute=0, seconds=180.0):
    return ActionEvent(KIND, at(day, hour, minute), seconds)


def synthetic_month(rng: random.Random, early=True) -> list[ActionEvent]:
    events = []
    for day in range(28):
        if day % 7 < 5:
            events.append(event(day, 8, rng.randint(-8, 12), rng.uniform(120, 300)))
            events.append(event(day, 18, rng.randint(-5, 15), rng.uniform(120, 300)))
        else:
            offset = 30 if day % 7 == 6 else 0
            for hour in range(9, 22):
                events.append(event(day, hour, offset, rng.uniform(1800, 5400)))
    if early:
        for day in (2, 9, 16):
            events.append(event(day, 5, rng.randint(0, 10), rng.uniform(120, 240)))
    return events


def _minutes(hhmm: str) -> int:
    h, m = hhmm.split(":")
    return int(h) * 60 + int(m)


def covering(norms, day_class, hhmm):
    return [n for n in norms if n.day_class == day_class and n.window[0] <= _minutes(hhmm) < n.window[1]]


class TestExtractEvents:
    def _trail(self, tmp_path, lines):
        _, auditor = record_scenario(parse_scenario("".join(lines)), tmp_path)
        return build_audit_trail(auditor.log)

    def test_open_close_pair(self, tmp_path):
        trail = self._trail(
            tmp_path,
            ["2024-03-04T08:00:00Z | alice | open the garage door\n", "2024-03-04T08:03:00Z | alice | close the garage door\n"],
        )
        assert extract_events(trail) == [ActionEvent(KIND, at(0, 8), 180)]

    def test_empty(self):
        assert extract_events(ProvDocument()) == []

    def test_open_without_close(self, tmp_path):
        trail = self._trail(tmp_path, ["2024-03-04T08:00:00Z | alice | open the garage door\n"])
        (only,) = extract_events(trail)
        assert only.open_ended and only.duration is None

    def test_double_open(self, tmp_path):
        trail = self._trail(
            tmp_path,
            [
                "2024-03-04T08:00:00Z | alice | open the garage door\n",
                "2024-03-04T08:01:00Z | alice | open the garage door\n",
                "2024-03-04T08:04:00Z | alice | close the garage door\n",
                "2024-03-04T08:05:00Z | alice | close the garage door\n",
            ],
        )
        assert extract_events(trail) == [ActionEvent(KIND, at(0, 8), None), ActionEvent(KIND, at(0, 8, 1), 180)]


class TestMineNorms:
    def test_empty(self):
        assert mine_norms([]) == []

    def test_below_support(self):
        assert mine_norms([event(0, 8), event(1, 8)], NormConfig(min_support=3)) == []

    def test_exactly_at_support(self):
        (norm,) = mine_norms([event(0, 8), event(1, 8), event(2, 8, 10)])
        assert norm.support == 3 and norm.core_window == (480.0, 510.0) and norm.window == (450.0, 540.0)

    def test_month_of_usage(self):
        norms = mine_norms(synthetic_month(random.Random(7)))
        morning = covering(norms, "weekday", "08:00")
        evening = covering(norms, "weekday", "18:00")
        assert morning and evening
        for norm in morning + evening:
            assert 120 <= norm.duration_range[0] and norm.duration_range[1] <= 300
        (early,) = covering(norms, "weekday", "05:00")
        assert early not in morning
        weekend = [n for n in norms if n.day_class == "weekend"]
        assert len(weekend) == 1
        assert weekend[0].window[0] <= _minutes("09:00") and weekend[0].window[1] >= _minutes("22:00")
        assert weekend[0].duration_range[0] >= 1800

    def test_no_early_norm_without_early_trips(self):
        norms = mine_norms(synthetic_month(random.Random(7), early=False))
        assert covering(norms, "weekday", "05:00") == []

    def test_open_ended_events_are_ignored(self):
        assert mine_norms([ActionEvent(KIND, at(0, 8), None)] * 5) == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            NormConfig(bin_width=7)
        with pytest.raises(ValueError):
            NormConfig(min_support=0)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 13), st.integers(0, 24 * 60 - 1), st.integers(0, 4000)), max_size=60))
    def test_supported_events_are_inside_some_norm(self, raw):
        events = [ActionEvent(KIND, MONDAY + timedelta(days=d, minutes=m), s) for d, m, s in raw]
        config = NormConfig()
        norms = mine_norms(events, config)
        bins = Counter((e.day_class, int((e.start.hour * 60 + e.start.minute) // config.bin_width)) for e in events)
        for e in events:
            key = (e.day_class, int((e.start.hour * 60 + e.start.minute) // config.bin_width))
            inside = [n for n in norms if n.contains(e)]
            if bins[key] >= config.min_support:
                assert inside
                assert any(n.duration_range[0] <= e.duration <= n.duration_range[1] for n in inside)
        assert sum(n.support for n in norms) == sum(c for c in bins.values() if c >= config.min_support)


@pytest.fixture(scope="module")
def norms():
    return mine_norms(synthetic_month(random.Random(7)))


class TestCheckViolation:
    def test_night_open(self, norms):
        v = check_violation(event(29, 2, 30), norms)
        assert v.kind == OUTSIDE_WINDOW and v.matched_norm is None

    def test_long_open(self, norms):
        v = check_violation(event(30, 8, 5, 40 * 60), norms)
        assert v.kind == EXCESSIVE_DURATION and v.matched_norm.day_class == "weekday"

    def test_normal_open(self, norms):
        assert check_violation(event(31, 8, 10, 180), norms) is None

    def test_open_ended_uses_now(self, norms):
        e = ActionEvent(KIND, at(30, 8, 5), None)
        assert check_violation(e, norms) is None
        assert check_violation(e, norms, now=at(30, 9)).kind == EXCESSIVE_DURATION

    def test_weekday_norm_does_not_cover_weekend(self, norms):
        # Saturday 07:00: weekday norms do not apply and the weekend window starts later
        assert check_violation(event(5, 7, 0, 180), norms).kind == OUTSIDE_WINDOW

    def test_factor_boundary(self):
        norm = Norm(KIND, "weekday", (0.0, 1440.0), (60.0, 100.0), 3)
        assert check_violation(event(0, 8, 0, 200), [norm]) is None
        assert check_violation(event(0, 8, 0, 200.5), [norm]).kind == EXCESSIVE_DURATION


def test_jsonl_roundtrip():
    norms = mine_norms(synthetic_month(random.Random(3)))
    assert norms_from_jsonl(norms_to_jsonl(norms)) == norms


def test_summary_text():
    norm = Norm(KIND, "weekday", (450.0, 540.0), (120.0, 300.0), 14, (480.0, 510.0))
    assert norm.summary() == "weekdays 07:30-09:00, 2-5 min, support 14 (door_open_interval)"


class TestNormMiner:
    def test_fit_predict(self):
        events = synthetic_month(random.Random(7))
        miner = NormMiner().fit(events)
        assert miner.norms_ == mine_norms(events)
        flagged = miner.predict([event(29, 2, 30), event(31, 8, 10)])
        assert flagged[0].kind == OUTSIDE_WINDOW and flagged[1] is None
        assert len(miner.violations([event(29, 2, 30), event(31, 8, 10)])) == 1

    def test_params(self):
        miner = NormMiner(min_support=5)
        assert miner.get_params()["min_support"] == 5
        assert miner.set_params(bin_width=60).config.bin_width == 60

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            NormMiner().predict([event(0, 8)])

    def test_accepts_tuples_and_validates(self):
        miner = NormMiner().fit([(KIND, at(d, 8), 180) for d in range(3)])
        assert len(miner.norms_) == 1
        with pytest.raises(ValueError):
            NormMiner().fit([(KIND, at(0, 8), -1)])
