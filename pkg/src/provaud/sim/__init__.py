from .bus import TOPICS, BusMessage, MessageBus
from .intents import Intent, IntentRule, match_intent, normalize
from .runtime import Assistant, SimClock, SimulationLog, TurnResult, invoke_skill, run_scenario
from .scenario import DATA_TYPES, Scenario, Turn, UserProfile, load_scenario, parse_scenario
from .services import ServiceStub, StubResponse, demo_services
from .skills import GarageDoorSkill, JokeSkill, Skill, SkillContext, SkillResponse, WeatherSkill, demo_skills

__all__ = [
    "TOPICS",
    "BusMessage",
    "MessageBus",
    "Intent",
    "IntentRule",
    "match_intent",
    "normalize",
    "Assistant",
    "SimClock",
    "SimulationLog",
    "TurnResult",
    "invoke_skill",
    "run_scenario",
    "DATA_TYPES",
    "Scenario",
    "Turn",
    "UserProfile",
    "load_scenario",
    "parse_scenario",
    "ServiceStub",
    "StubResponse",
    "demo_services",
    "GarageDoorSkill",
    "JokeSkill",
    "Skill",
    "SkillContext",
    "SkillResponse",
    "WeatherSkill",
    "demo_skills",
]
