"""Namespace prefixes used by the assistant and its audit trails."""

from types import MappingProxyType

VAR_PREFIX = "var"
VAR_NAMESPACE = "http://openprovenance.org/var#"

DEFAULT_NAMESPACES = MappingProxyType(
    {
        "sais": "http://example.org/sais#",
        "core": "http://example.org/assistant/core#",
        "mycroft": "http://example.org/assistant/skills#",
        "svc": "http://example.org/services#",
        "user": "http://example.org/users#",
        "trace": "http://example.org/traces#",
        "ex": "http://example.org/",
    }
)
