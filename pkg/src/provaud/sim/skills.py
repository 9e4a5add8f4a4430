"""Skills shipped with the simulated assistant.

A skill handles a matched intent through a :class:`SkillContext`, which is
where provenance capture happens: every external service call made through
``ctx.call`` emits one ``prov.skill_invocation`` message.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from datetime import datetime

from ..errors import ServiceUnavailable
from .bus import BusMessage, MessageBus
from .ids import datapoint_qname, service_qname, skill_qname, trace_number, trace_qname
from .intents import Intent, IntentRule
from .scenario import UserProfile
from .services import ServiceStub, StubResponse

NO_ACTION = "none"


@dataclass
class SkillResponse:
    text: str
    action: str | None = None
    error: str | None = None


@dataclass
class ServiceCallRecord:
    service_id: str
    endpoint: str
    data_type: str
    status: int
    response_id: str


@dataclass
class SkillContext:
    skill_id: str
    trace_id: str
    sim_time: datetime
    profile: UserProfile
    services: Mapping[str, ServiceStub]
    bus: MessageBus
    calls: list[ServiceCallRecord] = field(default_factory=list)

    @property
    def intent_id(self) -> str:
        return str(trace_qname(self.trace_id, "intent"))

    def _role(self, role: str) -> str:
        n = len(self.calls) + 1
        return str(trace_qname(self.trace_id, role if n == 1 else f"{role}-{n}"))

    def call(self, service_id: str, endpoint: str, params: Mapping[str, object], datapoint: str) -> StubResponse:
        """Call an external service, sending the profile datapoint ``datapoint``."""
        if datapoint not in self.profile:
            raise KeyError(f"profile of {self.profile.user_id} has no {datapoint}")
        stub = self.services[service_id]
        try:
            response = stub.call(endpoint, params)
        except ServiceUnavailable as exc:
            response = StubResponse(exc.status)
        payload = {
            "invocation": self._role("invocation"),
            "skill": str(skill_qname(self.skill_id)),
            "service": str(service_qname(service_id)),
            "intent": self.intent_id,
            "request": self._role("request"),
            "user_datapoint": str(datapoint_qname(self.profile.user_id, datapoint)),
            "response": self._role("response"),
            "status": response.status,
        }
        self.bus.publish(BusMessage("prov.skill_invocation", self.trace_id, self.sim_time, payload))
        self.calls.append(ServiceCallRecord(service_id, endpoint, datapoint, response.status, payload["response"]))
        return response


class Skill:
    skill_id = ""
    display_name = ""

    def rules(self) -> list[IntentRule]:
        raise NotImplementedError

    def handle(self, intent: Intent, ctx: SkillContext) -> SkillResponse:
        raise NotImplementedError


class WeatherSkill(Skill):
    skill_id = "weather-skill"
    display_name = "Weather"

    def rules(self):
        return [
            IntentRule(
                self.skill_id,
                "get_forecast",
                {"weather"},
                {"what", "is", "the", "today", "tomorrow", "forecast"},
            )
        ]

    def handle(self, intent, ctx):
        if "geo-location" not in ctx.profile:
            return SkillResponse("I don't know where you are. Please add your location to your profile.")
        response = ctx.call(
            "openweather", "forecast", {"location": ctx.profile["geo-location"]}, datapoint="geo-location"
        )
        if response.ok:
            return SkillResponse(f"Today's forecast is {response.body}.")
        if response.status >= 500:
            return SkillResponse("Sorry, the weather service is unavailable right now.", error="ServiceUnavailable")
        return SkillResponse("Sorry, I could not find a forecast for your location.", error="NotFound")


class GarageDoorSkill(Skill):
    skill_id = "garage-door-skill"
    display_name = "Garage Door"

    def rules(self):
        return [
            IntentRule(self.skill_id, "open_door", {"garage", "open"}, {"door", "the"}),
            IntentRule(self.skill_id, "close_door", {"garage", "close"}, {"door", "the"}),
        ]

    def handle(self, intent, ctx):
        if intent.name == "open_door":
            return SkillResponse("Opening the garage door.", action="door_opened")
        return SkillResponse("Closing the garage door.", action="door_closed")


JOKES = (
    "I told my computer I needed a break, and it said no problem, it would go to sleep.",
    "Why did the scarecrow win an award? Because he was outstanding in his field.",
    "I would tell you a UDP joke, but you might not get it.",
)


class JokeSkill(Skill):
    skill_id = "joke-skill"
    display_name = "Joke"

    def rules(self):
        return [IntentRule(self.skill_id, "tell_joke", {"joke"}, {"tell", "me", "a", "funny"})]

    def handle(self, intent, ctx):
        n = trace_number(ctx.trace_id) or 0
        return SkillResponse(JOKES[n % len(JOKES)])


def demo_skills() -> list[Skill]:
    return [WeatherSkill(), GarageDoorSkill(), JokeSkill()]
