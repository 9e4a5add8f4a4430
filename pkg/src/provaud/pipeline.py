"""End-to-end wiring: simulated assistant -> auditor -> binding log."""

from __future__ import annotations

from pathlib import Path

from .auditor import DEAD_LETTER_NAME, LOG_NAME, Auditor, BindingLog, DeadLetterFile
from .errors import StorageError
from .sim.runtime import Assistant, SimulationLog, run_scenario
from .sim.scenario import Scenario
from .template import TemplateCatalogue


def record_scenario(
    scenario: Scenario,
    out_dir: str | Path,
    assistant: Assistant | None = None,
    catalogue: TemplateCatalogue | None = None,
) -> tuple[SimulationLog, Auditor]:
    """Replay ``scenario`` into a fresh ``bindings.log`` under ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        dead = out_dir / DEAD_LETTER_NAME
        if dead.exists():
            dead.unlink()
    except OSError as exc:
        raise StorageError(f"cannot use output directory {out_dir}: {exc}") from exc
    log = BindingLog(out_dir / LOG_NAME, catalogue or TemplateCatalogue.default())
    log.reset()
    assistant = assistant or Assistant(profiles=scenario.profiles)
    auditor = Auditor(log, assistant.profiles | scenario.profiles, dead_letter=DeadLetterFile(out_dir / DEAD_LETTER_NAME))
    subscription = auditor.attach(assistant.bus)
    try:
        sim_log = run_scenario(scenario, assistant)
    finally:
        subscription.cancel()
    return sim_log, auditor
