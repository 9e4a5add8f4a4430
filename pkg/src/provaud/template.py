"""Provenance templates, binding rows and template expansion.

A template is a provenance document whose identifiers and attribute values
may be placeholders in the ``var:`` namespace. A :class:`BindingRow` records
the runtime values for one instantiation; :func:`expand` substitutes them to
produce concrete provenance, and :func:`expand_all` merges the expansions of
many rows into one audit trail.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal
from importlib import resources
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    ExpansionError,
    IdConflict,
    MissingVarNamespace,
    TemplateError,
    TypeMismatch,
    UnboundVariable,
    UnknownPrefix,
)
from .namespaces import DEFAULT_NAMESPACES, VAR_PREFIX
from .prov.model import (
    PREDEFINED_NAMESPACES,
    Attribute,
    DocumentBuilder,
    NodeKind,
    ProvDocument,
    ProvNode,
    ProvRelation,
    QualifiedName,
    literal_kind,
    merge_nodes,
)
from .prov.provn import parse_provn
from .timeutil import format_timestamp, normalize_timestamp

CANONICAL_TEMPLATES = ("intent_matching", "skill_invocation", "sa_response", "user_datapoint")


def is_variable(value) -> bool:
    return isinstance(value, QualifiedName) and value.prefix == VAR_PREFIX


@dataclass(frozen=True)
class Template:
    id: str
    body: ProvDocument
    variables: tuple[str, ...]
    identifier_variables: frozenset[str]

    @property
    def value_variables(self) -> frozenset[str]:
        return frozenset(self.variables) - self.identifier_variables

    def __repr__(self):
        return f"<Template {self.id!r} variables={list(self.variables)}>"


def _scan_variables(body: ProvDocument) -> tuple[tuple[str, ...], frozenset[str]]:
    order: dict[str, None] = {}
    identifiers = set()

    def see(name: QualifiedName, identifier: bool):
        if is_variable(name):
            order.setdefault(name.local)
            if identifier:
                identifiers.add(name.local)

    def see_attrs(attrs):
        for attr in sorted(attrs, key=Attribute.sort_key):
            if is_variable(attr.key):
                raise TemplateError(f"attribute key {attr.key} cannot be a variable")
            see(attr.value, False)

    for node in body.sorted_nodes():
        see(node.id, True)
        see_attrs(node.attrs)
    for rel in body.sorted_relations():
        see(rel.source, True)
        see(rel.target, True)
        see_attrs(rel.attrs)
    return tuple(order), frozenset(identifiers)


def load_template(text: str, template_id: str) -> Template:
    """Parse a PROV-N template and record where its variables occur."""
    try:
        body = parse_provn(text)
    except UnknownPrefix as exc:
        if exc.prefix == VAR_PREFIX:
            raise MissingVarNamespace(f"template {template_id!r} uses var: without declaring it") from exc
        raise
    variables, identifiers = _scan_variables(body)
    return Template(template_id, body, variables, identifiers)


def load_template_file(path: str | Path) -> Template:
    path = Path(path)
    return load_template(path.read_text(encoding="utf-8"), path.stem)


def canonical_template(template_id: str) -> Template:
    text = resources.files("provaud").joinpath("templates", f"{template_id}.provn").read_text(encoding="utf-8")
    return load_template(text, template_id)


# -- binding rows -----------------------------------------------------------


def encode_value(value):
    kind = literal_kind(value)
    if kind == "qname":
        return {"qname": str(value)}
    if kind == "decimal":
        return {"decimal": str(value)}
    if kind == "timestamp":
        return {"timestamp": format_timestamp(value)}
    return value


def decode_value(value):
    if isinstance(value, dict):
        (tag, text), = value.items()
        if tag == "qname":
            return QualifiedName.parse(text)
        if tag == "decimal":
            return Decimal(text)
        if tag == "timestamp":
            return normalize_timestamp(text)
        raise ValueError(f"unknown value tag {tag!r}")
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise ValueError(f"unsupported value {value!r}")
    return value


@dataclass(frozen=True)
class BindingRow:
    """Values logged at runtime for one instantiation of a template."""

    template_id: str
    trace_id: str
    timestamp: datetime
    values: Mapping[str, object] = field(default_factory=dict)
    seq: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "timestamp", normalize_timestamp(self.timestamp))
        values = {}
        for name, value in self.values.items():
            literal_kind(value)
            values[name] = normalize_timestamp(value) if isinstance(value, datetime) else value
        object.__setattr__(self, "values", values)

    def with_seq(self, seq: int) -> BindingRow:
        return BindingRow(self.template_id, self.trace_id, self.timestamp, self.values, seq)

    def to_record(self) -> dict:
        return {
            "template_id": self.template_id,
            "trace_id": self.trace_id,
            "timestamp": format_timestamp(self.timestamp),
            "seq": self.seq,
            "values": {k: encode_value(self.values[k]) for k in sorted(self.values)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)

    @classmethod
    def from_record(cls, record: Mapping) -> BindingRow:
        values = record["values"]
        if not isinstance(values, dict):
            raise ValueError("values must be an object")
        seq = record.get("seq")
        if seq is not None and (isinstance(seq, bool) or not isinstance(seq, int)):
            raise ValueError("seq must be an integer")
        return cls(
            str(record["template_id"]),
            str(record["trace_id"]),
            normalize_timestamp(record["timestamp"]),
            {str(k): decode_value(v) for k, v in values.items()},
            seq,
        )


def check_row(template: Template, row: BindingRow) -> None:
    """Raise unless ``row`` binds every variable of ``template`` with the right type."""
    if row.template_id != template.id:
        raise TemplateError(f"row is for {row.template_id!r}, not {template.id!r}")
    for name in template.variables:
        if name not in row.values:
            raise UnboundVariable(name)
        if is_variable(row.values[name]):
            raise TypeMismatch(f"variable {name!r} is bound to another variable")
        if name in template.identifier_variables and not isinstance(row.values[name], QualifiedName):
            raise TypeMismatch(f"variable {name!r} is an identifier; got {row.values[name]!r}")


# -- expansion --------------------------------------------------------------


def expand(template: Template, row: BindingRow, namespaces: Mapping[str, str] | None = None) -> ProvDocument:
    """Instantiate ``template`` with the values in ``row``.

    Activities whose identifier is a variable and which carry no times take
    the row timestamp as start and end time. Distinct identifiers must stay
    distinct after substitution, so the output has exactly as many
    statements as the template body.
    """
    check_row(template, row)
    registry = DEFAULT_NAMESPACES if namespaces is None else namespaces
    values = row.values

    def sub(name):
        return values[name.local] if is_variable(name) else name

    body = template.body
    fixed = [n for n in body.nodes if not is_variable(n)]
    taken: dict[QualifiedName, str] = {n: str(n) for n in fixed}
    for name in template.identifier_variables:
        bound = values[name]
        if bound in taken:
            raise IdConflict(f"{name!r} and {taken[bound]!r} both bind to {bound}", node_id=bound)
        taken[bound] = name

    builder = DocumentBuilder({p: u for p, u in body.namespaces.items() if p != VAR_PREFIX})
    for name in template.variables:
        bound = values[name]
        if isinstance(bound, QualifiedName) and bound.prefix not in PREDEFINED_NAMESPACES:
            if bound.prefix in body.namespaces and bound.prefix != VAR_PREFIX:
                continue
            if bound.prefix not in registry:
                raise UnknownPrefix(bound.prefix)
            builder.add_namespace(bound.prefix, registry[bound.prefix])

    def sub_attrs(attrs):
        return [Attribute(a.key, sub(a.value)) for a in attrs]

    for node in body.nodes.values():
        start, end = node.start_time, node.end_time
        if node.kind is NodeKind.ACTIVITY and is_variable(node.id) and start is None and end is None:
            start = end = row.timestamp
        builder.add_node(ProvNode(sub(node.id), node.kind, sub_attrs(node.attrs), start, end))
    for rel in body.relations:
        builder.add_relation(ProvRelation(rel.kind, sub(rel.source), sub(rel.target), rel.time, sub_attrs(rel.attrs)))
    return builder.build()


class TemplateCatalogue:
    """The templates a trail can be rebuilt from, keyed by id."""

    def __init__(self, templates: Iterable[Template] = (), namespaces: Mapping[str, str] | None = None):
        self.templates: dict[str, Template] = {}
        self.namespaces = dict(DEFAULT_NAMESPACES if namespaces is None else namespaces)
        for template in templates:
            self.register(template)

    @classmethod
    def default(cls) -> TemplateCatalogue:
        return cls(canonical_template(t) for t in CANONICAL_TEMPLATES)

    def register(self, template: Template) -> None:
        if template.id in self.templates:
            raise TemplateError(f"template {template.id!r} already registered")
        self.templates[template.id] = template

    def __getitem__(self, template_id: str) -> Template:
        try:
            return self.templates[template_id]
        except KeyError:
            raise TemplateError(f"unknown template {template_id!r}") from None

    def __contains__(self, template_id) -> bool:
        return template_id in self.templates

    def __iter__(self):
        return iter(self.templates.values())

    def __len__(self):
        return len(self.templates)

    def check_row(self, row: BindingRow) -> None:
        check_row(self[row.template_id], row)

    def expand(self, row: BindingRow) -> ProvDocument:
        return expand(self[row.template_id], row, self.namespaces)


def expand_all(catalogue: TemplateCatalogue, rows: Iterable[BindingRow]) -> ProvDocument:
    """Expand every row and merge the results into one document.

    Rows are processed in (timestamp, trace_id) order. Errors are wrapped in
    :class:`ExpansionError` carrying the row's index in ``rows``; identifier
    clashes between rows raise :class:`IdConflict` naming both row indices.
    """
    rows = list(rows)
    order = sorted(range(len(rows)), key=lambda i: (rows[i].timestamp, rows[i].trace_id))
    builder = DocumentBuilder()
    origin: dict[QualifiedName, int] = {}
    for index in order:
        try:
            doc = catalogue.expand(rows[index])
        except (TemplateError, IdConflict, UnknownPrefix) as exc:
            raise ExpansionError(index, exc) from exc
        for node_id, node in doc.nodes.items():
            existing = builder._nodes.get(node_id)
            if existing is not None:
                try:
                    merge_nodes(existing, node)
                except IdConflict as exc:
                    raise IdConflict(
                        f"rows {origin[node_id]} and {index}: {exc}", node_id=node_id, rows=(origin[node_id], index)
                    ) from exc
            else:
                origin[node_id] = index
        try:
            builder.merge(doc)
        except Exception as exc:
            raise ExpansionError(index, exc) from exc
    return builder.build()


class TemplateExpander(TransformerMixin, BaseEstimator):
    """Turn binding rows into an audit trail, estimator style.

    ``fit`` only validates the rows against the catalogue; ``transform``
    returns the merged :class:`ProvDocument`.

    Parameters
    ----------
    catalogue : TemplateCatalogue, default=None
        Templates to expand with. ``None`` means the four canonical ones.
    """

    def __init__(self, catalogue: TemplateCatalogue | None = None):
        self.catalogue = catalogue

    def fit(self, X=None, y=None):
        from .validation import check_binding_rows

        self.catalogue_ = self.catalogue if self.catalogue is not None else TemplateCatalogue.default()
        if X is not None:
            for row in check_binding_rows(X):
                self.catalogue_.check_row(row)
        return self

    def transform(self, X) -> ProvDocument:
        from .validation import check_binding_rows

        check_is_fitted(self, "catalogue_")
        return expand_all(self.catalogue_, check_binding_rows(X))
