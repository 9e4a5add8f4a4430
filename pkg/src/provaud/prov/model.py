"""In-memory provenance graphs: entities, activities, agents and relations.

Documents are immutable values. Use :class:`DocumentBuilder` to assemble one
incrementally, or the functional helpers (:func:`add_node`,
:func:`add_relation`, :func:`merge`) which return new documents.
"""

from __future__ import annotations

import enum
import json
import re
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal
from types import MappingProxyType
from typing import Union

from ..errors import DanglingEndpoint, IdConflict, KindMismatch, NamespaceConflict, UnknownPrefix
from ..timeutil import format_timestamp, normalize_timestamp

PREDEFINED_NAMESPACES = MappingProxyType(
    {
        "prov": "http://www.w3.org/ns/prov#",
        "xsd": "http://www.w3.org/2001/XMLSchema#",
    }
)

PREFIX_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")
LOCAL_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.\-/#~@+]*")


@dataclass(frozen=True, order=True)
class QualifiedName:
    prefix: str
    local: str

    def __post_init__(self):
        if not isinstance(self.prefix, str) or not PREFIX_RE.fullmatch(self.prefix):
            raise ValueError(f"invalid namespace prefix {self.prefix!r}")
        if not isinstance(self.local, str) or not LOCAL_RE.fullmatch(self.local):
            raise ValueError(f"invalid local name {self.local!r}")

    @classmethod
    def parse(cls, text: str) -> QualifiedName:
        prefix, sep, local = text.partition(":")
        if not sep:
            raise ValueError(f"{text!r} is not a qualified name (missing ':')")
        return cls(prefix, local)

    def __str__(self) -> str:
        return f"{self.prefix}:{self.local}"

    def __repr__(self) -> str:
        return f"qn({str(self)!r})"


def qn(value: str | QualifiedName) -> QualifiedName:
    """Coerce ``"prefix:local"`` into a :class:`QualifiedName`."""
    if isinstance(value, QualifiedName):
        return value
    return QualifiedName.parse(value)


PROV_TYPE = QualifiedName("prov", "type")

Literal = Union[str, int, Decimal, datetime, QualifiedName]


def literal_kind(value) -> str:
    """Name of the literal type of ``value``; raises ``TypeError`` otherwise."""
    if isinstance(value, bool):
        raise TypeError("booleans are not supported attribute values")
    if isinstance(value, QualifiedName):
        return "qname"
    if isinstance(value, str):
        return "string"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise TypeError(f"non-finite decimal {value}")
        return "decimal"
    if isinstance(value, datetime):
        return "timestamp"
    raise TypeError(f"unsupported literal type {type(value).__name__}")


def literal_text(value) -> str:
    if isinstance(value, datetime):
        return format_timestamp(value)
    return str(value)


@dataclass(frozen=True, eq=False)
class Attribute:
    key: QualifiedName
    value: Literal

    def __post_init__(self):
        object.__setattr__(self, "key", qn(self.key))
        literal_kind(self.value)
        if isinstance(self.value, datetime):
            object.__setattr__(self, "value", normalize_timestamp(self.value))

    @property
    def kind(self) -> str:
        return literal_kind(self.value)

    def _ident(self):
        return (self.key, self.kind, self.value)

    def sort_key(self):
        return (str(self.key), self.kind, literal_text(self.value))

    def __eq__(self, other):
        if not isinstance(other, Attribute):
            return NotImplemented
        return self._ident() == other._ident()

    def __hash__(self):
        return hash(self._ident())

    def __repr__(self):
        return f"Attribute({str(self.key)!r}, {self.value!r})"


def _coerce_attrs(attrs) -> frozenset[Attribute]:
    if attrs is None:
        return frozenset()
    if isinstance(attrs, Mapping):
        items = []
        for key, value in attrs.items():
            values = value if isinstance(value, (list, tuple, set, frozenset)) else [value]
            items.extend(Attribute(qn(key), v) for v in values)
        attrs = items
    out = []
    for item in attrs:
        if isinstance(item, Attribute):
            out.append(item)
        else:
            key, value = item
            out.append(Attribute(qn(key), value))
    result = frozenset(out)
    _check_single_valued(result)
    return result


def _check_single_valued(attrs: frozenset[Attribute]) -> None:
    seen = {}
    for attr in attrs:
        if attr.key == PROV_TYPE:
            continue
        if attr.key in seen:
            raise ValueError(f"attribute {attr.key} given more than once")
        seen[attr.key] = attr


def _union_attrs(owner, a: frozenset[Attribute], b: frozenset[Attribute]) -> frozenset[Attribute]:
    single = {attr.key: attr for attr in a if attr.key != PROV_TYPE}
    for attr in b:
        other = single.get(attr.key)
        if other is not None and other != attr:
            raise IdConflict(
                f"{owner}: attribute {attr.key} is {other.value!r} and {attr.value!r}",
                node_id=owner,
            )
    return a | b


class NodeKind(enum.Enum):
    ENTITY = "entity"
    ACTIVITY = "activity"
    AGENT = "agent"


class RelationKind(enum.Enum):
    USED = "used"
    WAS_GENERATED_BY = "wasGeneratedBy"
    WAS_ASSOCIATED_WITH = "wasAssociatedWith"
    WAS_ATTRIBUTED_TO = "wasAttributedTo"
    WAS_DERIVED_FROM = "wasDerivedFrom"
    WAS_INFORMED_BY = "wasInformedBy"


#: (source kind, target kind) for each relation kind
RELATION_ENDPOINTS = {
    RelationKind.USED: (NodeKind.ACTIVITY, NodeKind.ENTITY),
    RelationKind.WAS_GENERATED_BY: (NodeKind.ENTITY, NodeKind.ACTIVITY),
    RelationKind.WAS_ASSOCIATED_WITH: (NodeKind.ACTIVITY, NodeKind.AGENT),
    RelationKind.WAS_ATTRIBUTED_TO: (NodeKind.ENTITY, NodeKind.AGENT),
    RelationKind.WAS_DERIVED_FROM: (NodeKind.ENTITY, NodeKind.ENTITY),
    RelationKind.WAS_INFORMED_BY: (NodeKind.ACTIVITY, NodeKind.ACTIVITY),
}

TIMED_RELATIONS = frozenset({RelationKind.USED, RelationKind.WAS_GENERATED_BY})


@dataclass(frozen=True)
class ProvNode:
    id: QualifiedName
    kind: NodeKind
    attrs: frozenset[Attribute] = field(default_factory=frozenset)
    start_time: datetime | None = None
    end_time: datetime | None = None

    def __post_init__(self):
        object.__setattr__(self, "id", qn(self.id))
        object.__setattr__(self, "kind", NodeKind(self.kind))
        object.__setattr__(self, "attrs", _coerce_attrs(self.attrs))
        for name in ("start_time", "end_time"):
            value = getattr(self, name)
            if value is None:
                continue
            if self.kind is not NodeKind.ACTIVITY:
                raise ValueError(f"{self.id}: only activities carry {name}")
            object.__setattr__(self, name, normalize_timestamp(value))
        if self.start_time and self.end_time and self.start_time > self.end_time:
            raise ValueError(f"{self.id}: start_time after end_time")

    def values(self, key) -> list[Literal]:
        key = qn(key)
        return sorted((a.value for a in self.attrs if a.key == key), key=literal_text)

    def value(self, key, default=None):
        found = self.values(key)
        return found[0] if found else default

    @property
    def types(self) -> frozenset:
        return frozenset(a.value for a in self.attrs if a.key == PROV_TYPE)

    def has_type(self, type_name) -> bool:
        return qn(type_name) in self.types

    def qualified_names(self) -> Iterator[QualifiedName]:
        yield self.id
        for attr in self.attrs:
            yield attr.key
            if isinstance(attr.value, QualifiedName):
                yield attr.value


def entity(id, attrs=None) -> ProvNode:
    return ProvNode(qn(id), NodeKind.ENTITY, attrs)


def activity(id, attrs=None, start_time=None, end_time=None) -> ProvNode:
    return ProvNode(qn(id), NodeKind.ACTIVITY, attrs, start_time, end_time)


def agent(id, attrs=None) -> ProvNode:
    return ProvNode(qn(id), NodeKind.AGENT, attrs)


def merge_nodes(a: ProvNode, b: ProvNode) -> ProvNode:
    """Combine two declarations of the same node id."""
    if a.kind is not b.kind:
        raise IdConflict(f"{a.id} declared as {a.kind.value} and {b.kind.value}", node_id=a.id)
    if a == b:
        return a
    attrs = _union_attrs(a.id, a.attrs, b.attrs)
    times = []
    for name in ("start_time", "end_time"):
        x, y = getattr(a, name), getattr(b, name)
        if x is not None and y is not None and x != y:
            raise IdConflict(f"{a.id}: conflicting {name}", node_id=a.id)
        times.append(x if x is not None else y)
    return ProvNode(a.id, a.kind, attrs, *times)


@dataclass(frozen=True)
class ProvRelation:
    kind: RelationKind
    source: QualifiedName
    target: QualifiedName
    time: datetime | None = None
    attrs: frozenset[Attribute] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "kind", RelationKind(self.kind))
        object.__setattr__(self, "source", qn(self.source))
        object.__setattr__(self, "target", qn(self.target))
        object.__setattr__(self, "attrs", _coerce_attrs(self.attrs))
        if self.time is not None:
            if self.kind not in TIMED_RELATIONS:
                raise ValueError(f"{self.kind.value} does not carry a time")
            object.__setattr__(self, "time", normalize_timestamp(self.time))

    def sort_key(self):
        return (
            self.kind.value,
            self.source,
            self.target,
            literal_text(self.time) if self.time else "",
            tuple(a.sort_key() for a in sorted(self.attrs, key=Attribute.sort_key)),
        )

    def qualified_names(self) -> Iterator[QualifiedName]:
        yield self.source
        yield self.target
        for attr in self.attrs:
            yield attr.key
            if isinstance(attr.value, QualifiedName):
                yield attr.value


def relation(kind, source, target, time=None, attrs=None) -> ProvRelation:
    if isinstance(kind, str):
        kind = RelationKind(kind)
    return ProvRelation(kind, qn(source), qn(target), time, attrs)


class DocumentBuilder:
    """Mutable, single-threaded assembler for :class:`ProvDocument`."""

    def __init__(self, namespaces: Mapping[str, str] | None = None):
        self._namespaces: dict[str, str] = {}
        self._nodes: dict[QualifiedName, ProvNode] = {}
        self._relations: list[ProvRelation] = []
        self._counts: Counter = Counter()
        for prefix, uri in (namespaces or {}).items():
            self.add_namespace(prefix, uri)

    def add_namespace(self, prefix: str, uri: str) -> DocumentBuilder:
        if not PREFIX_RE.fullmatch(prefix):
            raise ValueError(f"invalid namespace prefix {prefix!r}")
        known = PREDEFINED_NAMESPACES.get(prefix) or self._namespaces.get(prefix)
        if known is not None and known != uri:
            raise NamespaceConflict(f"prefix {prefix!r} bound to {known} and {uri}")
        if prefix not in PREDEFINED_NAMESPACES:
            self._namespaces[prefix] = uri
        return self

    def _check_prefixes(self, names: Iterable[QualifiedName]) -> None:
        for name in names:
            if name.prefix not in self._namespaces and name.prefix not in PREDEFINED_NAMESPACES:
                raise UnknownPrefix(name.prefix)

    def add_node(self, node: ProvNode) -> DocumentBuilder:
        self._check_prefixes(node.qualified_names())
        existing = self._nodes.get(node.id)
        self._nodes[node.id] = node if existing is None else merge_nodes(existing, node)
        return self

    def add_relation(self, rel: ProvRelation) -> DocumentBuilder:
        self._check_prefixes(rel.qualified_names())
        want_source, want_target = RELATION_ENDPOINTS[rel.kind]
        for name, want in ((rel.source, want_source), (rel.target, want_target)):
            node = self._nodes.get(name)
            if node is None:
                raise DanglingEndpoint(f"{rel.kind.value}: no node {name} in document")
            if node.kind is not want:
                raise KindMismatch(
                    f"{rel.kind.value}({rel.source}, {rel.target}): {name} is an "
                    f"{node.kind.value}, expected {want.value}"
                )
        self._relations.append(rel)
        self._counts[rel] += 1
        return self

    def merge(self, doc: ProvDocument) -> DocumentBuilder:
        """Union ``doc`` into this builder.

        Relations follow multiset-union semantics (maximum multiplicity), which
        keeps merging commutative and idempotent.
        """
        for prefix, uri in doc.namespaces.items():
            self.add_namespace(prefix, uri)
        for node in doc.nodes.values():
            self.add_node(node)
        for rel, count in doc.relation_counts().items():
            for _ in range(count - self._counts[rel]):
                self.add_relation(rel)
        return self

    def __contains__(self, node_id) -> bool:
        return qn(node_id) in self._nodes

    def build(self) -> ProvDocument:
        return ProvDocument._trusted(dict(self._namespaces), dict(self._nodes), tuple(self._relations))


class ProvDocument:
    """Immutable provenance graph.

    ``namespaces`` maps declared prefixes to URIs (``prov`` and ``xsd`` are
    always available and never listed). Relations form a multiset; two
    documents compare equal when namespaces, nodes and relation counts match.
    """

    __slots__ = ("_namespaces", "_nodes", "_relations", "_counts")

    def __init__(self, namespaces=None, nodes: Iterable[ProvNode] = (), relations: Iterable[ProvRelation] = ()):
        builder = DocumentBuilder(namespaces)
        for node in nodes:
            builder.add_node(node)
        for rel in relations:
            builder.add_relation(rel)
        other = builder.build()
        self._namespaces = other._namespaces
        self._nodes = other._nodes
        self._relations = other._relations
        self._counts = None

    @classmethod
    def _trusted(cls, namespaces, nodes, relations) -> ProvDocument:
        doc = cls.__new__(cls)
        doc._namespaces = MappingProxyType(namespaces)
        doc._nodes = MappingProxyType(nodes)
        doc._relations = relations
        doc._counts = None
        return doc

    @property
    def namespaces(self) -> Mapping[str, str]:
        return self._namespaces

    @property
    def nodes(self) -> Mapping[QualifiedName, ProvNode]:
        return self._nodes

    @property
    def relations(self) -> tuple[ProvRelation, ...]:
        return self._relations

    def relation_counts(self) -> Counter:
        if self._counts is None:
            self._counts = Counter(self._relations)
        return self._counts

    def get(self, node_id, default=None) -> ProvNode | None:
        return self._nodes.get(qn(node_id), default)

    def __getitem__(self, node_id) -> ProvNode:
        return self._nodes[qn(node_id)]

    def __contains__(self, node_id) -> bool:
        return qn(node_id) in self._nodes

    @property
    def statement_count(self) -> int:
        return len(self._nodes) + len(self._relations)

    def is_empty(self) -> bool:
        return not self._nodes and not self._relations

    def nodes_of_kind(self, kind: NodeKind) -> list[ProvNode]:
        return [n for n in self.sorted_nodes() if n.kind is kind]

    def relations_of_kind(self, kind: RelationKind) -> list[ProvRelation]:
        return [r for r in self._relations if r.kind is kind]

    def sorted_nodes(self) -> list[ProvNode]:
        return [self._nodes[k] for k in sorted(self._nodes)]

    def sorted_relations(self) -> list[ProvRelation]:
        return sorted(self._relations, key=ProvRelation.sort_key)

    def qualified_names(self) -> Iterator[QualifiedName]:
        for node in self._nodes.values():
            yield from node.qualified_names()
        for rel in self._relations:
            yield from rel.qualified_names()

    def builder(self) -> DocumentBuilder:
        b = DocumentBuilder(self._namespaces)
        b._nodes = dict(self._nodes)
        b._relations = list(self._relations)
        b._counts = Counter(self.relation_counts())
        return b

    def add_node(self, node: ProvNode) -> ProvDocument:
        return self.builder().add_node(node).build()

    def add_relation(self, rel: ProvRelation) -> ProvDocument:
        return self.builder().add_relation(rel).build()

    def merge(self, other: ProvDocument) -> ProvDocument:
        return self.builder().merge(other).build()

    def __eq__(self, other):
        if not isinstance(other, ProvDocument):
            return NotImplemented
        return (
            dict(self._namespaces) == dict(other._namespaces)
            and dict(self._nodes) == dict(other._nodes)
            and self.relation_counts() == other.relation_counts()
        )

    __hash__ = None

    def __repr__(self):
        return f"<ProvDocument {len(self._nodes)} nodes, {len(self._relations)} relations>"


def add_node(doc: ProvDocument, node: ProvNode) -> ProvDocument:
    return doc.add_node(node)


def add_relation(doc: ProvDocument, rel: ProvRelation) -> ProvDocument:
    return doc.add_relation(rel)


def merge(a: ProvDocument, b: ProvDocument) -> ProvDocument:
    return a.merge(b)


def merge_all(docs: Iterable[ProvDocument]) -> ProvDocument:
    builder = DocumentBuilder()
    for doc in docs:
        builder.merge(doc)
    return builder.build()


def validate_document(doc: ProvDocument) -> None:
    """Re-check every document invariant from scratch.

    Independent of the checks done while building, so it can serve as a
    global validator for documents produced anywhere in the package.
    """
    declared = set(doc.namespaces) | set(PREDEFINED_NAMESPACES)
    for name in doc.qualified_names():
        if name.prefix not in declared:
            raise UnknownPrefix(name.prefix)
    for key, node in doc.nodes.items():
        if key != node.id:
            raise IdConflict(f"node stored under {key} has id {node.id}", node_id=key)
    for rel in doc.relations:
        want = RELATION_ENDPOINTS[rel.kind]
        for name, kind in zip((rel.source, rel.target), want):
            node = doc.nodes.get(name)
            if node is None:
                raise DanglingEndpoint(f"{rel.kind.value}: no node {name}")
            if node.kind is not kind:
                raise KindMismatch(f"{rel.kind.value}: {name} is {node.kind.value}, expected {kind.value}")


def _attrs_json(attrs) -> list:
    return [[str(a.key), a.kind, literal_text(a.value)] for a in sorted(attrs, key=Attribute.sort_key)]


def to_json(doc: ProvDocument) -> str:
    """Diagnostic JSON export, one object per statement."""
    statements = []
    for node in doc.sorted_nodes():
        item = {"statement": node.kind.value, "id": str(node.id), "attributes": _attrs_json(node.attrs)}
        if node.start_time or node.end_time:
            item["start_time"] = literal_text(node.start_time) if node.start_time else None
            item["end_time"] = literal_text(node.end_time) if node.end_time else None
        statements.append(item)
    for rel in doc.sorted_relations():
        item = {
            "statement": rel.kind.value,
            "source": str(rel.source),
            "target": str(rel.target),
            "attributes": _attrs_json(rel.attrs),
        }
        if rel.time:
            item["time"] = literal_text(rel.time)
        statements.append(item)
    return json.dumps({"prefixes": dict(sorted(doc.namespaces.items())), "statements": statements}, indent=2)
