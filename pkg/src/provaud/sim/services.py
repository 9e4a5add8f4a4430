"""Canned stand-ins for the external web services skills talk to."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

from ..errors import ServiceUnavailable

NOT_FOUND = 404


def normalize_params(params: Mapping[str, object] | None) -> tuple:
    return tuple(sorted((str(k), str(v)) for k, v in (params or {}).items()))


@dataclass(frozen=True)
class StubResponse:
    status: int
    body: str = ""

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


@dataclass(frozen=True)
class StubCall:
    service_id: str
    endpoint: str
    params: tuple
    response: StubResponse


class ServiceStub:
    """A fake web service answering from a fixed table.

    ``rules`` maps ``(endpoint, params)`` to a response, where ``params`` is
    either the output of :func:`normalize_params` or ``None`` to match any
    parameters on that endpoint. Unmatched calls get a 404. When
    ``fail_status`` is set every call raises :class:`ServiceUnavailable`.
    """

    def __init__(self, service_id: str, rules: Mapping | None = None, fail_status: int | None = None):
        self.service_id = service_id
        self.rules = dict(rules or {})
        self.fail_status = fail_status
        self.calls: list[StubCall] = []

    def lookup(self, endpoint: str, params) -> StubResponse:
        key = normalize_params(params)
        if (endpoint, key) in self.rules:
            return self.rules[(endpoint, key)]
        return self.rules.get((endpoint, None), StubResponse(NOT_FOUND))

    def call(self, endpoint: str, params: Mapping[str, object] | None = None) -> StubResponse:
        if self.fail_status is not None:
            response = StubResponse(self.fail_status)
        else:
            response = self.lookup(endpoint, params)
        self.calls.append(StubCall(self.service_id, endpoint, normalize_params(params), response))
        if response.status >= 500:
            raise ServiceUnavailable(self.service_id, response.status)
        return response


def demo_services() -> dict[str, ServiceStub]:
    return {
        "openweather": ServiceStub(
            "openweather",
            {("forecast", None): StubResponse(200, "sunny with a high of 18 degrees")},
        ),
    }
