"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ProvAuditError(Exception):
    """Base class for every error raised by provaud."""


# -- provenance model -------------------------------------------------------


class ProvError(ProvAuditError):
    pass


class IdConflict(ProvError):
    """A node id is reused with a different kind or clashing attributes.

    ``rows`` is filled in when the clash was found while merging expansions
    of binding rows, and holds the indices of both rows involved.
    """

    def __init__(self, message: str, node_id=None, rows: tuple[int, ...] = ()):
        super().__init__(message)
        self.node_id = node_id
        self.rows = rows


class NamespaceConflict(ProvError):
    pass


class DanglingEndpoint(ProvError):
    pass


class KindMismatch(ProvError):
    pass


class UnknownPrefix(ProvError):
    def __init__(self, prefix: str, line: int | None = None, column: int | None = None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"undeclared namespace prefix {prefix!r}{where}")
        self.prefix = prefix
        self.line = line
        self.column = column


class ProvSyntaxError(ProvError, ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


# -- templates --------------------------------------------------------------


class TemplateError(ProvAuditError):
    pass


class MissingVarNamespace(TemplateError):
    pass


class UnboundVariable(TemplateError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} has no binding")
        self.name = name


class TypeMismatch(TemplateError):
    pass


class ExpansionError(TemplateError):
    """Wraps an error raised while expanding row ``row_index``."""

    def __init__(self, row_index: int, cause: Exception):
        super().__init__(f"row {row_index}: {cause}")
        self.row_index = row_index
        self.cause = cause


# -- simulation -------------------------------------------------------------


class UnknownTopic(ProvAuditError):
    pass


class NoIntentMatched(ProvAuditError):
    pass


class ServiceUnavailable(ProvAuditError):
    def __init__(self, service_id: str, status: int):
        super().__init__(f"service {service_id} answered with status {status}")
        self.service_id = service_id
        self.status = status


class ScenarioParseError(ProvAuditError, ValueError):
    def __init__(self, message: str, line: int, path: str | None = None):
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


# -- auditor ----------------------------------------------------------------


class SchemaViolation(ProvAuditError):
    pass


class StorageError(ProvAuditError):
    pass


class CorruptEntry(ProvAuditError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class OutOfRange(ProvAuditError, ValueError):
    pass
