"""Synchronous in-process message bus for the simulated assistant."""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from datetime import datetime
from fnmatch import fnmatchcase

from ..errors import UnknownTopic
from ..timeutil import format_timestamp, normalize_timestamp

TOPICS = (
    "utterance",
    "intent.matched",
    "prov.intent_matching",
    "prov.skill_invocation",
    "prov.sa_response",
    "skill.response",
)


@dataclass(frozen=True)
class BusMessage:
    topic: str
    trace_id: str
    sim_time: datetime
    payload: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.topic not in TOPICS:
            raise UnknownTopic(f"unknown topic {self.topic!r}")
        object.__setattr__(self, "sim_time", normalize_timestamp(self.sim_time))
        object.__setattr__(self, "payload", dict(self.payload))

    def to_record(self) -> dict:
        return {
            "topic": self.topic,
            "trace_id": self.trace_id,
            "sim_time": format_timestamp(self.sim_time),
            "payload": {k: self.payload[k] for k in sorted(self.payload)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)


Handler = Callable[[BusMessage], None]


class Subscription:
    def __init__(self, bus: MessageBus, pattern: str, handler: Handler | None):
        self.bus = bus
        self.pattern = pattern
        self.handler = handler
        self.received: list[BusMessage] = []

    def matches(self, topic: str) -> bool:
        return fnmatchcase(topic, self.pattern)

    def deliver(self, msg: BusMessage) -> None:
        self.received.append(msg)
        if self.handler is not None:
            self.handler(msg)

    def cancel(self) -> None:
        self.bus.unsubscribe(self)


class MessageBus:
    """Delivers each published message to matching subscribers, in order.

    Delivery is synchronous: ``publish`` returns once every subscriber has
    handled the message. Messages published from inside a handler are queued
    and delivered after the current one, so every subscriber sees messages in
    publish order.
    """

    def __init__(self):
        self._subscriptions: list[Subscription] = []
        self._queue: list[BusMessage] = []
        self._dispatching = False

    def subscribe(self, pattern: str, handler: Handler | None = None) -> Subscription:
        if not any(fnmatchcase(t, pattern) for t in TOPICS):
            raise UnknownTopic(f"pattern {pattern!r} matches no topic")
        sub = Subscription(self, pattern, handler)
        self._subscriptions.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        if sub in self._subscriptions:
            self._subscriptions.remove(sub)

    def publish(self, msg: BusMessage) -> None:
        if msg.topic not in TOPICS:
            raise UnknownTopic(f"unknown topic {msg.topic!r}")
        self._queue.append(msg)
        if self._dispatching:
            return
        self._dispatching = True
        try:
            while self._queue:
                current = self._queue.pop(0)
                for sub in list(self._subscriptions):
                    if sub.matches(current.topic):
                        sub.deliver(current)
        finally:
            self._dispatching = False
            self._queue.clear()
