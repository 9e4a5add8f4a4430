"""PROV-N reader and writer for the subset of PROV used by audit trails.

Supported statements: ``prefix``, ``entity``, ``activity``, ``agent``,
``used``, ``wasGeneratedBy``, ``wasAssociatedWith``, ``wasAttributedTo``,
``wasDerivedFrom`` and ``wasInformedBy``, each with an optional attribute
list in square brackets. Statement identifiers, plans, bundles and the
optional activity/generation/usage slots of ``wasDerivedFrom`` are not
supported.
"""

from __future__ import annotations

import re
from typing import NamedTuple
from datetime import datetime
from decimal import Decimal, InvalidOperation

from ..errors import ProvSyntaxError, UnknownPrefix
from ..timeutil import format_timestamp, parse_timestamp
from .model import (
    LOCAL_RE,
    PREDEFINED_NAMESPACES,
    PREFIX_RE,
    Attribute,
    DocumentBuilder,
    NodeKind,
    ProvDocument,
    ProvNode,
    ProvRelation,
    QualifiedName,
    RelationKind,
)

INDENT = "  "

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t", "'": "'"}


def _quote(text: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in text) + '"'


def format_literal(value) -> str:
    if isinstance(value, QualifiedName):
        return f"'{value}'"
    if isinstance(value, bool):
        raise TypeError("booleans are not supported")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Decimal):
        return f'"{value}" %% xsd:decimal'
    if isinstance(value, datetime):
        return f'"{format_timestamp(value)}" %% xsd:dateTime'
    if isinstance(value, str):
        return _quote(value)
    raise TypeError(f"unsupported literal {value!r}")


def _format_attrs(attrs) -> str:
    parts = [f"{a.key}={format_literal(a.value)}" for a in sorted(attrs, key=Attribute.sort_key)]
    return "[" + ", ".join(parts) + "]"


def _format_time(value) -> str:
    return format_timestamp(value) if value is not None else "-"


def format_node(node: ProvNode) -> str:
    args = [str(node.id)]
    if node.kind is NodeKind.ACTIVITY and (node.start_time or node.end_time):
        args += [_format_time(node.start_time), _format_time(node.end_time)]
    elif node.kind is NodeKind.ACTIVITY and node.attrs:
        args += ["-", "-"]
    if node.attrs:
        args.append(_format_attrs(node.attrs))
    return f"{node.kind.value}({', '.join(args)})"


def format_relation(rel: ProvRelation) -> str:
    args = [str(rel.source), str(rel.target)]
    if rel.kind in (RelationKind.USED, RelationKind.WAS_GENERATED_BY):
        if rel.time is not None or rel.attrs:
            args.append(_format_time(rel.time))
    elif rel.kind is RelationKind.WAS_ASSOCIATED_WITH and rel.attrs:
        args.append("-")
    if rel.attrs:
        args.append(_format_attrs(rel.attrs))
    return f"{rel.kind.value}({', '.join(args)})"


def serialize_provn(doc: ProvDocument) -> str:
    """Render ``doc`` as PROV-N text.

    Output is deterministic: prefixes sorted by name, nodes by id, relations
    by kind then endpoints.
    """
    lines = ["document"]
    for prefix in sorted(doc.namespaces):
        lines.append(f"{INDENT}prefix {prefix} <{doc.namespaces[prefix]}>")
    statements = [format_node(n) for n in doc.sorted_nodes()]
    statements += [format_relation(r) for r in doc.sorted_relations()]
    if doc.namespaces and statements:
        lines.append("")
    lines.extend(INDENT + s for s in statements)
    lines.append("endDocument")
    return "\n".join(lines) + "\n"


# -- parsing ----------------------------------------------------------------


class Token(NamedTuple):
    kind: str  # word, string, qname_literal, iri, punct, typeop, eof
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<qname_literal>'[^'\n]*')
  | (?P<iri><[^>\s]*>)
  | (?P<typeop>%%)
  | (?P<punct>[()\[\],=])
  | (?P<word>[^\s()\[\],=;'"<>%]+)
    """,
    re.VERBOSE | re.DOTALL,
)

_TIMESTAMP_RE = re.compile(r"\d{4}-\d{2}-\d{2}T[0-9:.]+(Z|[+-]\d{2}:?\d{2})?")
_INT_RE = re.compile(r"[+-]?\d+")

_INT_TYPES = {"xsd:int", "xsd:integer", "xsd:long", "xsd:short", "xsd:nonNegativeInteger"}
_DECIMAL_TYPES = {"xsd:decimal", "xsd:double", "xsd:float"}


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ProvSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "line_comment", "block_comment"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_NODE_STATEMENTS = {k.value: k for k in NodeKind}
_RELATION_STATEMENTS = {k.value: k for k in RelationKind}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.namespaces: dict[str, str] = {}
        self.nodes: list[tuple[ProvNode, Token]] = []
        self.relations: list[tuple[ProvRelation, Token]] = []

    # token helpers
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        return ProvSyntaxError(message, tok.line, tok.column)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = repr(text) if text else kind
            got = repr(tok.text) if tok.text else "end of input"
            raise self.error(f"expected {want}, found {got}", tok)
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    # grammar
    def parse(self) -> ProvDocument:
        self.expect("word", "document")
        while not self.at("word", "endDocument"):
            if self.at("eof"):
                raise self.error("missing endDocument")
            self.statement()
        self.expect("word", "endDocument")
        self.expect("eof")
        return self.build()

    def build(self) -> ProvDocument:
        builder = DocumentBuilder(self.namespaces)
        for node, _ in self.nodes:
            builder.add_node(node)
        for rel, _ in self.relations:
            builder.add_relation(rel)
        return builder.build()

    def statement(self):
        tok = self.expect("word")
        if tok.text == "prefix":
            self.prefix_decl(tok)
        elif tok.text in _NODE_STATEMENTS:
            self.node_statement(_NODE_STATEMENTS[tok.text], tok)
        elif tok.text in _RELATION_STATEMENTS:
            self.relation_statement(_RELATION_STATEMENTS[tok.text], tok)
        else:
            raise self.error(f"unsupported statement {tok.text!r}", tok)

    def prefix_decl(self, tok: Token):
        name = self.expect("word")
        if not PREFIX_RE.fullmatch(name.text):
            raise self.error(f"invalid prefix {name.text!r}", name)
        iri = self.expect("iri")
        uri = iri.text[1:-1]
        known = PREDEFINED_NAMESPACES.get(name.text) or self.namespaces.get(name.text)
        if known is not None and known != uri:
            raise self.error(f"prefix {name.text!r} redeclared", name)
        if name.text not in PREDEFINED_NAMESPACES:
            self.namespaces[name.text] = uri

    def qualified_name(self, tok: Token | None = None) -> QualifiedName:
        tok = tok or self.expect("word")
        return self._qname_from(tok.text, tok)

    def _qname_from(self, text: str, tok: Token) -> QualifiedName:
        prefix, sep, local = text.partition(":")
        if not sep or not PREFIX_RE.fullmatch(prefix) or not LOCAL_RE.fullmatch(local):
            raise self.error(f"expected a qualified name, found {text!r}", tok)
        if prefix not in self.namespaces and prefix not in PREDEFINED_NAMESPACES:
            raise UnknownPrefix(prefix, tok.line, tok.column)
        return QualifiedName(prefix, local)

    def time_or_marker(self) -> datetime | None:
        tok = self.expect("word")
        if tok.text == "-":
            return None
        if not _TIMESTAMP_RE.fullmatch(tok.text):
            raise self.error(f"expected a timestamp or '-', found {tok.text!r}", tok)
        try:
            return parse_timestamp(tok.text)
        except ValueError as exc:
            raise self.error(str(exc), tok) from None

    def optional_attrs(self) -> list[Attribute]:
        if not self.at("punct", "["):
            return []
        self.next()
        attrs = []
        if self.at("punct", "]"):
            self.next()
            return attrs
        while True:
            key = self.qualified_name()
            self.expect("punct", "=")
            attrs.append(Attribute(key, self.literal()))
            sep = self.next()
            if sep.kind == "punct" and sep.text == "]":
                return attrs
            if not (sep.kind == "punct" and sep.text == ","):
                raise self.error(f"expected ',' or ']', found {sep.text!r}", sep)

    def literal(self):
        tok = self.next()
        if tok.kind == "qname_literal":
            return self._qname_from(tok.text[1:-1], tok)
        if tok.kind == "word" and _INT_RE.fullmatch(tok.text):
            return int(tok.text)
        if tok.kind != "string":
            raise self.error(f"expected a literal, found {tok.text!r}", tok)
        text = self._unquote(tok)
        if not self.at("typeop"):
            return text
        self.next()
        dtype_tok = self.expect("word")
        dtype = str(self.qualified_name(dtype_tok))
        try:
            if dtype in _INT_TYPES:
                return int(text)
            if dtype in _DECIMAL_TYPES:
                value = Decimal(text)
                if not value.is_finite():
                    raise ValueError(text)
                return value
            if dtype == "xsd:dateTime":
                return parse_timestamp(text)
            if dtype == "xsd:string":
                return text
            if dtype == "prov:QUALIFIED_NAME":
                return self._qname_from(text, tok)
        except (ValueError, InvalidOperation):
            raise self.error(f"invalid {dtype} value {text!r}", tok) from None
        raise self.error(f"unsupported datatype {dtype}", dtype_tok)

    def _unquote(self, tok: Token) -> str:
        body = tok.text[1:-1]
        out = []
        i = 0
        while i < len(body):
            ch = body[i]
            if ch == "\\":
                nxt = body[i + 1]
                if nxt not in _UNESCAPES:
                    raise self.error(f"unknown escape \\{nxt}", tok)
                out.append(_UNESCAPES[nxt])
                i += 2
            else:
                out.append(ch)
                i += 1
        return "".join(out)

    def close(self):
        self.expect("punct", ")")

    def comma_then(self) -> bool:
        """Consume a ',' if present; report whether one was found."""
        if self.at("punct", ","):
            self.next()
            return True
        return False

    def node_statement(self, kind: NodeKind, tok: Token):
        self.expect("punct", "(")
        node_id = self.qualified_name()
        start = end = None
        attrs = []
        if self.comma_then():
            if kind is NodeKind.ACTIVITY and not self.at("punct", "["):
                start = self.time_or_marker()
                self.expect("punct", ",")
                end = self.time_or_marker()
                if self.comma_then():
                    attrs = self.optional_attrs()
            else:
                attrs = self.optional_attrs()
        self.close()
        try:
            node = ProvNode(node_id, kind, attrs, start, end)
        except ValueError as exc:
            raise self.error(str(exc), tok) from None
        self.nodes.append((node, tok))

    def relation_statement(self, kind: RelationKind, tok: Token):
        self.expect("punct", "(")
        source = self.qualified_name()
        self.expect("punct", ",")
        target = self.qualified_name()
        time = None
        attrs = []
        if self.comma_then():
            if kind in (RelationKind.USED, RelationKind.WAS_GENERATED_BY) and not self.at("punct", "["):
                time = self.time_or_marker()
                if self.comma_then():
                    attrs = self.optional_attrs()
            elif kind is RelationKind.WAS_ASSOCIATED_WITH and not self.at("punct", "["):
                plan = self.expect("word")
                if plan.text != "-":
                    raise self.error("plans are not supported", plan)
                if self.comma_then():
                    attrs = self.optional_attrs()
            elif self.at("punct", "["):
                attrs = self.optional_attrs()
            else:
                raise self.error(f"unexpected argument to {kind.value}")
        self.close()
        try:
            rel = ProvRelation(kind, source, target, time, attrs)
        except ValueError as exc:
            raise self.error(str(exc), tok) from None
        self.relations.append((rel, tok))


def parse_provn(text: str) -> ProvDocument:
    """Parse PROV-N text into a :class:`ProvDocument`.

    Relations must refer to nodes declared somewhere in the document; nodes
    are never created implicitly.
    """
    return _Parser(text).parse()
