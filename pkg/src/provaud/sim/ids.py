"""Identifier minting for runtime provenance.

Per-turn identifiers are ``trace:<trace_id>/<role>`` so rows logged by
different templates for the same turn join on the same nodes.
"""

from __future__ import annotations

from ..prov.model import QualifiedName


def trace_id_for(n: int) -> str:
    return f"t{n:04d}"


def trace_number(trace_id: str) -> int | None:
    if trace_id.startswith("t") and trace_id[1:].isdigit():
        return int(trace_id[1:])
    return None


def trace_qname(trace_id: str, role: str) -> QualifiedName:
    return QualifiedName("trace", f"{trace_id}/{role}")


def user_qname(user_id: str) -> QualifiedName:
    return QualifiedName("user", user_id)


def datapoint_qname(user_id: str, data_type: str) -> QualifiedName:
    return QualifiedName("user", f"{user_id}/{data_type}")


def skill_qname(skill_id: str) -> QualifiedName:
    return QualifiedName("mycroft", skill_id)


def service_qname(service_id: str) -> QualifiedName:
    return QualifiedName("svc", service_id)
