"""Drives utterances through intent matching and skills on the message bus."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime

from ..errors import NoIntentMatched
from ..timeutil import normalize_timestamp
from .bus import BusMessage, MessageBus
from .ids import skill_qname, trace_id_for, trace_qname, user_qname
from .intents import Intent, IntentRule, match_intent
from .scenario import Scenario, UserProfile
from .services import ServiceStub, StubCall, demo_services
from .skills import NO_ACTION, Skill, SkillContext, SkillResponse, demo_skills


class SimClock:
    """Simulated time; only ever set from scenario timestamps."""

    def __init__(self, start: datetime | None = None):
        self.now = normalize_timestamp(start) if start is not None else None

    def advance_to(self, when: datetime) -> datetime:
        when = normalize_timestamp(when)
        if self.now is not None and when < self.now:
            raise ValueError(f"clock cannot go back from {self.now} to {when}")
        self.now = when
        return when


@dataclass
class TurnResult:
    trace_id: str
    user_id: str
    text: str
    intent: Intent | None = None
    response: SkillResponse | None = None


def invoke_skill(
    skill: Skill,
    intent: Intent,
    profile: UserProfile,
    services: Mapping[str, ServiceStub],
    *,
    bus: MessageBus,
    trace_id: str,
    sim_time: datetime,
) -> SkillResponse:
    """Run ``skill`` on ``intent`` and publish its sa_response and spoken reply."""
    if intent.skill_id != skill.skill_id:
        raise ValueError(f"intent for {intent.skill_id} sent to {skill.skill_id}")
    ctx = SkillContext(skill.skill_id, trace_id, sim_time, profile, services, bus)
    response = skill.handle(intent, ctx)
    response_id = ctx.calls[0].response_id if ctx.calls else str(trace_qname(trace_id, "response"))
    payload = {
        "handling": str(trace_qname(trace_id, "handling")),
        "skill": str(skill_qname(skill.skill_id)),
        "intent": ctx.intent_id,
        "response": response_id,
        "voice_response": str(trace_qname(trace_id, "voice-response")),
        "voice_text": response.text,
        "action": response.action or NO_ACTION,
    }
    bus.publish(BusMessage("prov.sa_response", trace_id, sim_time, payload))
    bus.publish(BusMessage("skill.response", trace_id, sim_time, {"skill": skill.skill_id, "text": response.text}))
    return response


class Assistant:
    """The simulated voice assistant: matcher, skills, service stubs, bus."""

    def __init__(
        self,
        skills: Iterable[Skill] | None = None,
        services: Mapping[str, ServiceStub] | None = None,
        profiles: Mapping[str, UserProfile] | None = None,
        bus: MessageBus | None = None,
        first_trace: int = 1,
    ):
        self.skills = {s.skill_id: s for s in (demo_skills() if skills is None else skills)}
        self.services = dict(demo_services() if services is None else services)
        self.profiles = dict(profiles or {})
        self.bus = bus or MessageBus()
        self.rules: list[IntentRule] = [r for s in self.skills.values() for r in s.rules()]
        self._next_trace = first_trace

    def profile(self, user_id: str) -> UserProfile:
        return self.profiles.get(user_id) or UserProfile(user_id)

    def new_trace_id(self) -> str:
        trace_id = trace_id_for(self._next_trace)
        self._next_trace += 1
        return trace_id

    def handle_utterance(self, user_id: str, text: str, when: datetime) -> TurnResult:
        when = normalize_timestamp(when)
        trace_id = self.new_trace_id()
        self.bus.publish(BusMessage("utterance", trace_id, when, {"user": user_id, "text": text}))
        result = TurnResult(trace_id, user_id, text)
        try:
            intent = match_intent(self.rules, text)
        except NoIntentMatched:
            return result
        result.intent = intent
        payload = {
            "matching": str(trace_qname(trace_id, "matching")),
            "utterance": str(trace_qname(trace_id, "utterance")),
            "intent": str(trace_qname(trace_id, "intent")),
            "intent_name": intent.name,
            "user": str(user_qname(user_id)),
        }
        self.bus.publish(BusMessage("prov.intent_matching", trace_id, when, payload))
        result.response = invoke_skill(
            self.skills[intent.skill_id],
            intent,
            self.profile(user_id),
            self.services,
            bus=self.bus,
            trace_id=trace_id,
            sim_time=when,
        )
        return result

    def service_calls(self) -> list[StubCall]:
        return [c for stub in self.services.values() for c in stub.calls]


@dataclass
class SimulationLog:
    messages: list[BusMessage] = field(default_factory=list)
    turns: list[TurnResult] = field(default_factory=list)
    service_calls: list[StubCall] = field(default_factory=list)

    def __len__(self):
        return len(self.messages)

    def topics(self) -> list[str]:
        return [m.topic for m in self.messages]

    def dumps(self) -> str:
        return "".join(m.to_json() + "\n" for m in self.messages)

    def __eq__(self, other):
        if not isinstance(other, SimulationLog):
            return NotImplemented
        return self.dumps() == other.dumps()


def run_scenario(scenario: Scenario, assistant: Assistant | None = None, clock: SimClock | None = None) -> SimulationLog:
    """Play every turn of ``scenario`` in timestamp order."""
    if assistant is None:
        assistant = Assistant(profiles=scenario.profiles)
    else:
        for user_id, profile in scenario.profiles.items():
            assistant.profiles.setdefault(user_id, profile)
    clock = clock or SimClock()
    log = SimulationLog()
    recorder = assistant.bus.subscribe("*", log.messages.append)
    calls_before = len(assistant.service_calls())
    try:
        for turn in scenario.ordered_turns():
            clock.advance_to(turn.time)
            log.turns.append(assistant.handle_utterance(turn.user_id, turn.text, clock.now))
    finally:
        recorder.cancel()
    log.service_calls = assistant.service_calls()[calls_before:]
    return log
