"""Graph queries over audit trails."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime

from .auditor import TrailFilter
from .prov.model import NodeKind, ProvDocument, QualifiedName, RelationKind, qn
from .timeutil import format_timestamp, normalize_timestamp

USER_DATA = QualifiedName("sais", "UserData")
API_RESPONSE = QualifiedName("sais", "APIResponse")
SKILL_RESPONSE = QualifiedName("sais", "SkillResponse")
DATA_TYPE = QualifiedName("sais", "data_type")
DATA_VALUE = QualifiedName("sais", "data_value")


@dataclass(frozen=True)
class DataFlowRow:
    datapoint_id: QualifiedName
    data_type: str
    service_id: QualifiedName
    skill_id: QualifiedName
    time: datetime | None
    activity_id: QualifiedName | None = None
    data_value: str | None = None

    def sort_key(self):
        return (self.time is not None, self.time or datetime.min, self.service_id, self.datapoint_id, self.activity_id)

    def to_record(self) -> dict:
        return {
            "datapoint": str(self.datapoint_id),
            "data_type": self.data_type,
            "service": str(self.service_id),
            "skill": str(self.skill_id),
            "time": format_timestamp(self.time) if self.time else None,
            "activity": str(self.activity_id) if self.activity_id else None,
        }


def data_type_of(trail: ProvDocument, datapoint: QualifiedName) -> str:
    node = trail.get(datapoint)
    declared = node.value(DATA_TYPE) if node is not None else None
    if declared is not None:
        return str(declared)
    return datapoint.local.rsplit("/", 1)[-1]


def skill_name(skill_id) -> QualifiedName:
    if isinstance(skill_id, QualifiedName):
        return skill_id
    return qn(skill_id) if ":" in skill_id else QualifiedName("mycroft", skill_id)


def _typed(trail: ProvDocument, node_id: QualifiedName, type_name: QualifiedName) -> bool:
    node = trail.get(node_id)
    return node is not None and node.has_type(type_name)


def query_data_recipients(trail: ProvDocument, filter: TrailFilter | None = None) -> list[DataFlowRow]:
    """Find which services received which user datapoints, through which skill.

    One row per (datapoint, activity, service) where the activity used an
    entity typed ``sais:UserData``, generated an entity typed
    ``sais:APIResponse``, is associated with a skill agent, and generated a
    request attributed to the service agent. When an activity is associated
    with several agents the smallest id is reported as the skill.
    """
    used = defaultdict(set)
    generated = defaultdict(set)
    associated = defaultdict(set)
    attributed = defaultdict(set)
    for rel in trail.relations:
        if rel.kind is RelationKind.USED:
            used[rel.source].add(rel.target)
        elif rel.kind is RelationKind.WAS_GENERATED_BY:
            generated[rel.target].add(rel.source)
        elif rel.kind is RelationKind.WAS_ASSOCIATED_WITH:
            associated[rel.source].add(rel.target)
        elif rel.kind is RelationKind.WAS_ATTRIBUTED_TO:
            attributed[rel.source].add(rel.target)

    rows = []
    for act in trail.nodes_of_kind(NodeKind.ACTIVITY):
        datapoints = sorted(e for e in used[act.id] if _typed(trail, e, USER_DATA))
        if not datapoints or not associated[act.id]:
            continue
        if not any(_typed(trail, e, API_RESPONSE) for e in generated[act.id]):
            continue
        skill = min(associated[act.id])
        services = sorted({ag for q in generated[act.id] for ag in attributed[q]})
        for datapoint in datapoints:
            value = trail[datapoint].value(DATA_VALUE)
            for service in services:
                rows.append(
                    DataFlowRow(
                        datapoint,
                        data_type_of(trail, datapoint),
                        service,
                        skill,
                        act.start_time,
                        act.id,
                        str(value) if value is not None else None,
                    )
                )
    if filter is not None:
        rows = [r for r in rows if _row_matches(r, filter)]
    return sorted(rows, key=DataFlowRow.sort_key)


def _row_matches(row: DataFlowRow, filter: TrailFilter) -> bool:
    if (filter.start or filter.end) and not filter.contains_time(row.time):
        return False
    if filter.skill_id is not None and row.skill_id != skill_name(filter.skill_id):
        return False
    if filter.user_id is not None and not row.datapoint_id.local.startswith(filter.user_id + "/"):
        return False
    return True


def query_usage_count(
    trail: ProvDocument,
    skill_id,
    start: datetime | str | None = None,
    end: datetime | str | None = None,
) -> int:
    """Count skill-response activities of ``skill_id`` within [start, end]."""
    skill = skill_name(skill_id)
    start = normalize_timestamp(start) if start is not None else None
    end = normalize_timestamp(end) if end is not None else None
    if start and end and start > end:
        raise ValueError("start is after end")
    handled = {
        rel.source
        for rel in trail.relations
        if rel.kind is RelationKind.WAS_ASSOCIATED_WITH and rel.target == skill
    }
    count = 0
    for act_id in handled:
        act = trail[act_id]
        if not act.has_type(SKILL_RESPONSE):
            continue
        if start is not None or end is not None:
            t = act.start_time
            if t is None or (start is not None and t < start) or (end is not None and t > end):
                continue
        count += 1
    return count


def rows_to_jsonl(rows: list[DataFlowRow]) -> str:
    return "".join(json.dumps(r.to_record()) + "\n" for r in rows)
