"""The audit skill: turns provenance messages into persisted binding rows.

The binding log is a text file with one JSON record per line::

    {"template_id": ..., "trace_id": ..., "timestamp": ..., "seq": ..., "values": {...}}

Records are only ever appended. Messages that cannot be converted are
written to a dead-letter file next to the log instead of being dropped.
"""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .errors import CorruptEntry, SchemaViolation, StorageError, TemplateError
from .prov.model import ProvDocument, QualifiedName, validate_document
from .sim.bus import BusMessage, MessageBus
from .sim.scenario import UserProfile
from .template import BindingRow, TemplateCatalogue, expand_all
from .timeutil import format_timestamp, normalize_timestamp

logger = logging.getLogger(__name__)

LOG_NAME = "bindings.log"
DEAD_LETTER_NAME = "bindings.dead"

TOPIC_TEMPLATES = {
    "prov.intent_matching": "intent_matching",
    "prov.skill_invocation": "skill_invocation",
    "prov.sa_response": "sa_response",
}


def _local(value, prefix: str) -> str | None:
    if value is None:
        return None
    text = str(value)
    return text[len(prefix) + 1:] if text.startswith(prefix + ":") else text


@dataclass(frozen=True)
class TrailFilter:
    """Which rows to rebuild a trail from. Bounds are inclusive."""

    start: datetime | None = None
    end: datetime | None = None
    user_id: str | None = None
    skill_id: str | None = None
    trace_id: str | None = None

    def __post_init__(self):
        for name in ("start", "end"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, normalize_timestamp(getattr(self, name)))
        if self.start and self.end and self.start > self.end:
            raise ValueError("filter start is after its end")
        object.__setattr__(self, "user_id", _local(self.user_id, "user"))
        object.__setattr__(self, "skill_id", _local(self.skill_id, "mycroft"))

    def is_empty(self) -> bool:
        return not any((self.start, self.end, self.user_id, self.skill_id, self.trace_id))

    def contains_time(self, when: datetime | None) -> bool:
        if when is None:
            return self.start is None and self.end is None
        return (self.start is None or when >= self.start) and (self.end is None or when <= self.end)

    def apply(self, rows: list[BindingRow]) -> list[BindingRow]:
        if self.is_empty():
            return list(rows)
        trace_user: dict[str, str] = {}
        trace_skill: dict[str, str] = {}
        for row in rows:
            if row.template_id == "intent_matching" and "user" in row.values:
                trace_user.setdefault(row.trace_id, _local(row.values["user"], "user"))
            if "skill" in row.values:
                trace_skill.setdefault(row.trace_id, _local(row.values["skill"], "mycroft"))
        out = []
        for row in rows:
            if not self.contains_time(row.timestamp):
                continue
            if self.trace_id is not None and row.trace_id != self.trace_id:
                continue
            if self.user_id is not None:
                user = _local(row.values.get("user"), "user") or trace_user.get(row.trace_id)
                if user != self.user_id:
                    continue
            if self.skill_id is not None:
                skill = _local(row.values.get("skill"), "mycroft") or trace_skill.get(row.trace_id)
                if skill != self.skill_id:
                    continue
            out.append(row)
        return out


class BindingLog:
    """Append-only file of binding rows.

    Each append is a single ``write`` of one complete line, so a crash can
    at worst leave a truncated last line, which :meth:`load` reports as a
    corrupt entry and skips.
    """

    def __init__(self, path: str | Path, catalogue: TemplateCatalogue | None = None):
        self.path = Path(path)
        self.catalogue = catalogue
        self.corrupt_entries: list[CorruptEntry] = []
        self._last: tuple[datetime, int] | None = None
        self._next_seq: int | None = None

    def _scan_tail(self) -> None:
        rows = self.load()
        self._next_seq = max((r.seq for r in rows if r.seq is not None), default=-1) + 1
        self._last = (rows[-1].timestamp, rows[-1].seq) if rows else None

    def append(self, row: BindingRow) -> BindingRow:
        """Validate ``row``, give it the next sequence number and persist it."""
        if self.catalogue is not None:
            try:
                self.catalogue.check_row(row)
            except TemplateError as exc:
                raise SchemaViolation(str(exc)) from exc
        if self._next_seq is None:
            self._scan_tail()
        if self._last is not None and row.timestamp < self._last[0]:
            raise ValueError(
                f"row at {format_timestamp(row.timestamp)} precedes last entry at {format_timestamp(self._last[0])}"
            )
        row = row.with_seq(self._next_seq)
        data = (row.to_json() + "\n").encode("utf-8")
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
            try:
                if os.fstat(fd).st_size and not self._ends_with_newline():
                    data = b"\n" + data
                os.write(fd, data)
            finally:
                os.close(fd)
        except OSError as exc:
            raise StorageError(f"cannot append to {self.path}: {exc}") from exc
        self._next_seq += 1
        self._last = (row.timestamp, row.seq)
        return row

    def _ends_with_newline(self) -> bool:
        with open(self.path, "rb") as fh:
            fh.seek(-1, os.SEEK_END)
            return fh.read(1) == b"\n"

    def reset(self) -> None:
        """Start a fresh, empty log file."""
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_bytes(b"")
        except OSError as exc:
            raise StorageError(f"cannot create {self.path}: {exc}") from exc
        self._last = None
        self._next_seq = 0

    def load(self, filter: TrailFilter | None = None) -> list[BindingRow]:
        """Read every complete, valid row (in log order) and apply ``filter``."""
        self.corrupt_entries = []
        if not self.path.exists():
            return []
        try:
            text = self.path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            raise StorageError(f"cannot read {self.path}: {exc}") from exc
        rows = []
        for lineno, line in enumerate(text.split("\n"), start=1):
            if not line.strip():
                continue
            try:
                row = BindingRow.from_record(json.loads(line))
                if self.catalogue is not None:
                    self.catalogue.check_row(row)
            except (ValueError, KeyError, TypeError, AttributeError, TemplateError) as exc:
                entry = CorruptEntry(lineno, str(exc) or type(exc).__name__)
                logger.warning("skipping corrupt entry in %s: %s", self.path, entry)
                self.corrupt_entries.append(entry)
                continue
            rows.append(row)
        return filter.apply(rows) if filter is not None else rows

    def __iter__(self):
        return iter(self.load())


class DeadLetterFile:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.count = 0

    def record(self, msg: BusMessage, reason: str) -> None:
        line = json.dumps({"reason": reason, "message": msg.to_record()}, ensure_ascii=False) + "\n"
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
        except OSError as exc:
            raise StorageError(f"cannot write {self.path}: {exc}") from exc
        self.count += 1

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        return [json.loads(line) for line in self.path.read_text(encoding="utf-8").splitlines() if line.strip()]


def message_to_row(msg: BusMessage, catalogue: TemplateCatalogue) -> BindingRow:
    """Map a ``prov.*`` message field by field onto a binding row."""
    template_id = TOPIC_TEMPLATES.get(msg.topic)
    if template_id is None:
        raise SchemaViolation(f"topic {msg.topic!r} carries no bindings")
    template = catalogue[template_id]
    values = {}
    for name in template.variables:
        if name not in msg.payload:
            raise SchemaViolation(f"{msg.topic} payload is missing {name!r}")
        value = msg.payload[name]
        if name in template.identifier_variables:
            try:
                value = value if isinstance(value, QualifiedName) else QualifiedName.parse(value)
            except (ValueError, AttributeError, TypeError):
                raise SchemaViolation(f"{name!r} is not a qualified name: {value!r}") from None
        values[name] = value
    try:
        row = BindingRow(template_id, msg.trace_id, msg.sim_time, values)
        catalogue.check_row(row)
    except (TemplateError, TypeError) as exc:
        raise SchemaViolation(str(exc)) from exc
    return row


class Auditor:
    """Listens for provenance messages and records them as binding rows.

    A ``user_datapoint`` row is synthesized from the user's profile the first
    time a datapoint is sent anywhere, so the log only describes data that
    was actually used.
    """

    def __init__(
        self,
        log: BindingLog,
        profiles: Mapping[str, UserProfile] | None = None,
        catalogue: TemplateCatalogue | None = None,
        dead_letter: DeadLetterFile | None = None,
    ):
        self.catalogue = catalogue or log.catalogue or TemplateCatalogue.default()
        if log.catalogue is None:
            log.catalogue = self.catalogue
        self.log = log
        self.profiles = dict(profiles or {})
        self.dead_letter = dead_letter or DeadLetterFile(log.path.with_name(DEAD_LETTER_NAME))
        self.seen_datapoints: set[QualifiedName] = set()
        self.trace_users: dict[str, QualifiedName] = {}
        self.rejected = 0
        for row in log.load():
            self._remember(row)

    def _remember(self, row: BindingRow) -> None:
        if row.template_id == "user_datapoint":
            self.seen_datapoints.add(row.values["user_datapoint"])
        elif row.template_id == "intent_matching":
            self.trace_users[row.trace_id] = row.values["user"]

    def attach(self, bus: MessageBus):
        return bus.subscribe("prov.*", self.handle)

    def handle(self, msg: BusMessage) -> None:
        try:
            self.ingest(msg)
        except SchemaViolation:
            pass

    def ingest(self, msg: BusMessage) -> BindingRow:
        """Convert ``msg`` and append it (plus any new datapoint row) to the log."""
        try:
            row = message_to_row(msg, self.catalogue)
        except SchemaViolation as exc:
            self.dead_letter.record(msg, str(exc))
            self.rejected += 1
            raise
        if row.template_id == "skill_invocation":
            datapoint = self._datapoint_row(row)
            if datapoint is not None:
                self._remember(self.log.append(datapoint))
        row = self.log.append(row)
        self._remember(row)
        return row

    def _datapoint_row(self, row: BindingRow) -> BindingRow | None:
        datapoint = row.values["user_datapoint"]
        if datapoint in self.seen_datapoints:
            return None
        user = self.trace_users.get(row.trace_id)
        user_id, _, data_type = datapoint.local.partition("/")
        if user is None:
            user = QualifiedName("user", user_id)
        profile = self.profiles.get(user.local)
        if profile is None or data_type not in profile:
            logger.warning("no profile value for %s; datapoint row not synthesized", datapoint)
            return None
        values = {
            "user_datapoint": datapoint,
            "data_type": data_type,
            "data_value": profile[data_type],
            "user": user,
        }
        return BindingRow("user_datapoint", row.trace_id, row.timestamp, values)


def build_audit_trail(
    source: BindingLog | Iterable[BindingRow],
    catalogue: TemplateCatalogue | None = None,
    filter: TrailFilter | None = None,
) -> ProvDocument:
    """Rebuild the provenance graph from logged bindings."""
    if isinstance(source, BindingLog):
        catalogue = catalogue or source.catalogue
        rows = source.load(filter)
    else:
        rows = list(source)
        if filter is not None:
            rows = filter.apply(rows)
    trail = expand_all(catalogue or TemplateCatalogue.default(), rows)
    validate_document(trail)
    return trail
