from .model import (
    PREDEFINED_NAMESPACES,
    PROV_TYPE,
    Attribute,
    DocumentBuilder,
    NodeKind,
    ProvDocument,
    ProvNode,
    ProvRelation,
    QualifiedName,
    RelationKind,
    activity,
    add_node,
    add_relation,
    agent,
    entity,
    merge,
    merge_all,
    qn,
    relation,
    to_json,
    validate_document,
)
from .provn import parse_provn, serialize_provn

__all__ = [
    "PREDEFINED_NAMESPACES",
    "PROV_TYPE",
    "Attribute",
    "DocumentBuilder",
    "NodeKind",
    "ProvDocument",
    "ProvNode",
    "ProvRelation",
    "QualifiedName",
    "RelationKind",
    "activity",
    "add_node",
    "add_relation",
    "agent",
    "entity",
    "merge",
    "merge_all",
    "parse_provn",
    "qn",
    "relation",
    "serialize_provn",
    "to_json",
    "validate_document",
]
