"""Keyword-based intent matching."""

from __future__ import annotations

import string
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from ..errors import NoIntentMatched

_PUNCT = str.maketrans("", "", string.punctuation)


def normalize(utterance: str) -> list[str]:
    """Lowercase, drop punctuation and split on whitespace."""
    return utterance.lower().translate(_PUNCT).split()


@dataclass(frozen=True)
class IntentRule:
    skill_id: str
    intent_name: str
    required_keywords: frozenset[str]
    optional_keywords: frozenset[str] = frozenset()
    # (slot name, keyword): the slot takes the words following the keyword
    slot_extractors: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        required = frozenset(w.lower() for w in self.required_keywords)
        optional = frozenset(w.lower() for w in self.optional_keywords)
        if not required:
            raise ValueError(f"{self.skill_id}/{self.intent_name}: required keywords must not be empty")
        if required & optional:
            raise ValueError(f"{self.skill_id}/{self.intent_name}: keyword sets overlap")
        object.__setattr__(self, "required_keywords", required)
        object.__setattr__(self, "optional_keywords", optional)
        object.__setattr__(self, "slot_extractors", tuple(tuple(s) for s in self.slot_extractors))

    def score(self, tokens: Iterable[str]) -> tuple[int, int] | None:
        words = set(tokens)
        if not self.required_keywords <= words:
            return None
        return len(self.required_keywords), len(self.optional_keywords & words)

    def extract_slots(self, tokens: Sequence[str]) -> dict[str, str]:
        slots = {}
        for name, keyword in self.slot_extractors:
            if keyword in tokens:
                rest = tokens[tokens.index(keyword) + 1:]
                if rest:
                    slots[name] = " ".join(rest)
        return slots


@dataclass(frozen=True)
class Intent:
    skill_id: str
    name: str
    slots: dict = field(default_factory=dict)
    utterance: str = ""


def match_intent(rules: Sequence[IntentRule], utterance: str) -> Intent:
    """Pick the rule with all required keywords present and the best score.

    Scores compare the number of required keywords, then optional keywords
    matched; remaining ties go to the rule registered first.
    """
    if not utterance or not utterance.strip():
        raise ValueError("empty utterance")
    tokens = normalize(utterance)
    best = None
    best_score = None
    for rule in rules:
        score = rule.score(tokens)
        if score is not None and (best_score is None or score > best_score):
            best, best_score = rule, score
    if best is None:
        raise NoIntentMatched(f"no intent matches {utterance!r}")
    return Intent(best.skill_id, best.intent_name, best.extract_slots(tokens), utterance)
