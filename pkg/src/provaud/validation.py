"""Input checks shared by the estimator-style classes."""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .template import BindingRow


def check_binding_rows(rows) -> list[BindingRow]:
    """Accept BindingRow objects or their dict records; return a list of rows."""
    if isinstance(rows, (str, bytes, Mapping)) or not isinstance(rows, Iterable):
        raise TypeError(f"expected an iterable of binding rows, got {type(rows).__name__}")
    out = []
    for i, row in enumerate(rows):
        if isinstance(row, BindingRow):
            out.append(row)
        elif isinstance(row, Mapping):
            try:
                out.append(BindingRow.from_record(row))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"row {i}: {exc}") from exc
        else:
            raise TypeError(f"row {i}: expected BindingRow or mapping, got {type(row).__name__}")
    return out


def check_events(events, allow_open_ended: bool = True) -> list:
    """Validate a sequence of ActionEvent objects (or (type, start, duration) tuples)."""
    from .norms import ActionEvent

    if isinstance(events, (str, bytes)) or not isinstance(events, Iterable):
        raise TypeError(f"expected an iterable of events, got {type(events).__name__}")
    out = []
    for i, event in enumerate(events):
        if not isinstance(event, ActionEvent):
            try:
                event = ActionEvent(*event)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"event {i}: {exc}") from exc
        if event.duration is None and not allow_open_ended:
            raise ValueError(f"event {i} is open-ended")
        out.append(event)
    return out
