"""Random generators shared by the property and acceptance tests.

Two flavours: hypothesis strategies (shrinkable, for unit properties) and
plain ``random.Random`` generators (cheap, for timed acceptance sweeps).
"""

from __future__ import annotations

import random
import string
from datetime import datetime, timedelta, timezone
from decimal import Decimal

from hypothesis import strategies as st

from provaud.namespaces import DEFAULT_NAMESPACES
from provaud.prov.model import (
    PREDEFINED_NAMESPACES,
    PROV_TYPE,
    RELATION_ENDPOINTS,
    TIMED_RELATIONS,
    Attribute,
    DocumentBuilder,
    NodeKind,
    ProvDocument,
    ProvNode,
    ProvRelation,
    QualifiedName,
)
from provaud.template import BindingRow, TemplateCatalogue

NAMESPACES = {"ex": "http://example.org/ex#", "b-2": "urn:b2#", "_z": "http://example.org/z/"}
LOCAL_CHARS = string.ascii_letters + string.digits + "_.-/#~@+"
EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)
TRICKY = ['"', "\\", "\n", "\t", "\r", "'", "%%", "]", ")", ",", "//", "/*", "é", "☃", "var"]


# -- plain random generators ---------------------------------------------------


def rand_local(rng: random.Random) -> str:
    head = rng.choice(string.ascii_letters + string.digits + "_")
    return head + "".join(rng.choice(LOCAL_CHARS) for _ in range(rng.randint(0, 8)))


def rand_qname(rng: random.Random, prefixes=tuple(NAMESPACES)) -> QualifiedName:
    return QualifiedName(rng.choice(prefixes), rand_local(rng))


def rand_time(rng: random.Random) -> datetime:
    return EPOCH + timedelta(seconds=rng.randint(0, 3 * 365 * 86400))


def rand_text(rng: random.Random, colon: bool = True) -> str:
    parts = []
    for _ in range(rng.randint(0, 5)):
        r = rng.random()
        if r < 0.3:
            parts.append(rng.choice(TRICKY))
        elif r < 0.4:
            parts.append(chr(rng.randint(0x20, 0x2FFF)))
        else:
            parts.append("".join(rng.choice(string.ascii_letters + " 0123456789") for _ in range(rng.randint(1, 6))))
    text = "".join(parts)
    return text if colon else text.replace(":", ";")


def rand_literal(rng: random.Random, colon: bool = True):
    kind = rng.randrange(5)
    if kind == 0:
        return rand_text(rng, colon)
    if kind == 1:
        return rng.choice([0, -1, 1, 2**40, -(2**63)]) if rng.random() < 0.3 else rng.randint(-10**6, 10**6)
    if kind == 2:
        return Decimal(rng.randint(-10**8, 10**8)).scaleb(-rng.randint(0, 6))
    if kind == 3:
        return rand_time(rng)
    return rand_qname(rng, tuple(NAMESPACES) + ("prov", "xsd"))


def rand_attrs(rng: random.Random, max_attrs: int = 3) -> list[Attribute]:
    attrs = []
    keys = set()
    for _ in range(rng.randint(0, max_attrs)):
        if rng.random() < 0.3:
            attrs.append(Attribute(PROV_TYPE, rand_qname(rng)))
            continue
        key = rand_qname(rng)
        if key not in keys:
            keys.add(key)
            attrs.append(Attribute(key, rand_literal(rng)))
    return attrs


def rand_document(rng: random.Random, max_nodes: int = 50, prefixes=None) -> ProvDocument:
    """A valid document: unique ids, endpoint kinds respected, relation duplicates allowed."""
    prefixes = prefixes or rng.sample(sorted(NAMESPACES), rng.randint(1, len(NAMESPACES)))
    builder = DocumentBuilder({p: NAMESPACES[p] for p in prefixes})
    # attribute keys and qname values may use any generator prefix, so declare them all
    for p in NAMESPACES:
        builder.add_namespace(p, NAMESPACES[p])
    by_kind = {k: [] for k in NodeKind}
    for _ in range(rng.randint(0, max_nodes)):
        node_id = rand_qname(rng, tuple(prefixes))
        if node_id in builder:
            continue
        kind = rng.choice(list(NodeKind))
        start = end = None
        if kind is NodeKind.ACTIVITY and rng.random() < 0.6:
            start = rand_time(rng) if rng.random() < 0.8 else None
            end = start + timedelta(seconds=rng.randint(0, 7200)) if start and rng.random() < 0.7 else None
        builder.add_node(ProvNode(node_id, kind, rand_attrs(rng), start, end))
        by_kind[kind].append(node_id)
    kinds = [k for k, (s, t) in RELATION_ENDPOINTS.items() if by_kind[s] and by_kind[t]]
    for _ in range(rng.randint(0, 2 * sum(map(len, by_kind.values()))) if kinds else 0):
        kind = rng.choice(kinds)
        src_kind, tgt_kind = RELATION_ENDPOINTS[kind]
        time = rand_time(rng) if kind in TIMED_RELATIONS and rng.random() < 0.3 else None
        attrs = rand_attrs(rng, 2) if rng.random() < 0.2 else ()
        builder.add_relation(ProvRelation(kind, rng.choice(by_kind[src_kind]), rng.choice(by_kind[tgt_kind]), time, attrs))
    return builder.build()


def rand_fragment(rng: random.Random, doc: ProvDocument) -> ProvDocument:
    """Random compatible fragment of ``doc``: node attribute subsets plus relations between kept nodes."""
    builder = DocumentBuilder(doc.namespaces)
    for node in doc.nodes.values():
        if rng.random() < 0.6:
            attrs = [a for a in node.attrs if rng.random() < 0.7]
            builder.add_node(ProvNode(node.id, node.kind, attrs, node.start_time, node.end_time))
    for rel in doc.relations:
        if rel.source in builder and rel.target in builder and rng.random() < 0.7:
            builder.add_relation(rel)
    return builder.build()


def rand_binding_row(rng: random.Random, template, trace_id: str | None = None) -> BindingRow:
    """Bind every variable of ``template``; identifiers are distinct and use registered prefixes."""
    prefixes = tuple(p for p in DEFAULT_NAMESPACES if p not in PREDEFINED_NAMESPACES)
    fixed = {n for n in template.body.nodes if n.prefix != "var"}
    values = {}
    used = set(fixed)
    for name in template.variables:
        if name in template.identifier_variables:
            while True:
                q = QualifiedName(rng.choice(prefixes), rand_local(rng))
                if q not in used:
                    break
            used.add(q)
            values[name] = q
        else:
            values[name] = rand_literal(rng, colon=False) if rng.random() < 0.5 else rand_text(rng, colon=False)
            if isinstance(values[name], QualifiedName):
                values[name] = QualifiedName("ex", values[name].local)
    return BindingRow(template.id, trace_id or f"t{rng.randint(1, 9999):04d}", rand_time(rng), values)


# -- hypothesis strategies ------------------------------------------------------------

qnames = st.builds(
    QualifiedName,
    st.sampled_from(sorted(NAMESPACES)),
    st.from_regex(r"[A-Za-z0-9_][A-Za-z0-9_.\-/#~@+]{0,8}", fullmatch=True),
)
times = st.datetimes(
    min_value=datetime(1970, 1, 1), max_value=datetime(2100, 1, 1), timezones=st.just(timezone.utc)
).map(lambda t: t.replace(microsecond=0))
literals = st.one_of(
    st.text(max_size=20),
    st.integers(min_value=-(2**70), max_value=2**70),
    st.decimals(min_value=-(10**12), max_value=10**12, allow_nan=False, allow_infinity=False, places=6),
    times,
    qnames,
)


@st.composite
def attr_lists(draw, max_size=3):
    pairs = draw(st.lists(st.tuples(qnames, literals), max_size=max_size, unique_by=lambda p: p[0]))
    types = draw(st.lists(qnames, max_size=2))
    return [Attribute(k, v) for k, v in pairs] + [Attribute(PROV_TYPE, t) for t in types]


@st.composite
def documents(draw, max_nodes=12):
    seed = draw(st.integers(0, 2**32))
    rng = random.Random(seed)
    doc = rand_document(rng, max_nodes)
    # mix in hypothesis-drawn attributes on one extra entity so text edge cases get shrunk
    extra = draw(attr_lists())
    node_id = QualifiedName("ex", f"extra{seed}")
    return doc.add_node(ProvNode(node_id, NodeKind.ENTITY, extra))


@st.composite
def binding_rows(draw, template_ids=None):
    catalogue = TemplateCatalogue.default()
    template_id = draw(st.sampled_from(sorted(template_ids or [t.id for t in catalogue])))
    seed = draw(st.integers(0, 2**32))
    return rand_binding_row(random.Random(seed), catalogue[template_id])
