"""Provenance audit trails for a simulated voice assistant."""

from .auditor import Auditor, BindingLog, TrailFilter, build_audit_trail
from .narrate import NO_DATA_SENTENCE, generalize_location, generalize_time, narrate_recipients, narrate_usage
from .norms import ActionEvent, Norm, NormConfig, NormMiner, Violation, check_violation, extract_events, mine_norms
from .pipeline import record_scenario
from .prov import ProvDocument, QualifiedName, merge, parse_provn, serialize_provn
from .query import DataFlowRow, query_data_recipients, query_usage_count
from .template import BindingRow, Template, TemplateCatalogue, TemplateExpander, expand, expand_all

__version__ = "0.1.0"

__all__ = [
    "Auditor",
    "BindingLog",
    "TrailFilter",
    "build_audit_trail",
    "NO_DATA_SENTENCE",
    "generalize_location",
    "generalize_time",
    "narrate_recipients",
    "narrate_usage",
    "ActionEvent",
    "Norm",
    "NormConfig",
    "NormMiner",
    "Violation",
    "check_violation",
    "extract_events",
    "mine_norms",
    "record_scenario",
    "ProvDocument",
    "QualifiedName",
    "merge",
    "parse_provn",
    "serialize_provn",
    "DataFlowRow",
    "query_data_recipients",
    "query_usage_count",
    "BindingRow",
    "Template",
    "TemplateCatalogue",
    "TemplateExpander",
    "expand",
    "expand_all",
]
