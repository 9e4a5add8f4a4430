"""Command-line interface: ``provaud <command> [options]``.

Exit codes: 0 success, 2 usage or input error, 3 storage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import timedelta
from pathlib import Path

from .auditor import LOG_NAME, Auditor, BindingLog, TrailFilter, build_audit_trail
from .errors import ProvAuditError, ScenarioParseError, StorageError
from .messages import msg
from .narrate import DisplayNames, generalize_time, generalize_value, narrate_recipients, narrate_usage
from .norms import NormConfig, check_violation, extract_events, mine_norms, norms_from_jsonl, norms_to_jsonl
from .pipeline import record_scenario
from .prov.model import NodeKind
from .prov.provn import serialize_provn
from .query import query_data_recipients, query_usage_count
from .sim.ids import trace_number
from .sim.intents import IntentRule, match_intent
from .sim.runtime import Assistant
from .sim.scenario import UserProfile, load_scenario
from .errors import NoIntentMatched
from .template import TemplateCatalogue
from .timeutil import format_timestamp, parse_timestamp

EXIT_OK, EXIT_USAGE, EXIT_STORAGE = 0, 2, 3

QUESTIONS = ("data-recipients", "usage-count")
NORMS_NAME = "norms.jsonl"
TRAIL_NAME = "trail.provn"

AUDITOR_SKILL = "prov-auditor-skill"
AUDITOR_RULES = [
    IntentRule(AUDITOR_SKILL, "data_recipients", {"services", "data"}, {"which", "got", "my", "personal", "received"}),
    IntentRule(AUDITOR_SKILL, "usage_count", {"how", "often", "use"}, {"did", "i", "skill"}, (("skill", "use"),)),
]

DEMO_PROFILES = {"alice": UserProfile("alice", {"geo-location": "51.5128,-0.1168", "name": "Alice"})}
REPL_START = "2024-03-12T08:00:00Z"
REPL_STEP = timedelta(minutes=1)


class UsageError(Exception):
    pass


def _timestamp(text: str):
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--out",
        default=os.environ.get("PROVAUD_OUT", "."),
        help="output directory holding bindings.log (default: $PROVAUD_OUT or .)",
    )
    filters = argparse.ArgumentParser(add_help=False)
    filters.add_argument("--from", dest="start", type=_timestamp, help="earliest time (ISO-8601, inclusive)")
    filters.add_argument("--to", dest="end", type=_timestamp, help="latest time (ISO-8601, inclusive)")
    filters.add_argument("--skill", help="skill id, e.g. weather-skill")
    filters.add_argument("--trace", help="trace id, e.g. t0001")
    filters.add_argument("--user", help="user id")
    generalize = argparse.ArgumentParser(add_help=False)
    generalize.add_argument("--generalize", choices=("on", "off"), default="on", help="coarsen times and locations (default on)")
    generalize.add_argument("--names", help="JSON file of display names")

    parser = argparse.ArgumentParser(prog="provaud", description="Provenance audit trails for a simulated voice assistant.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="replay a scenario and record bindings")
    p.add_argument("--scenario", required=True, help="scenario (.scn) file to replay")

    p = sub.add_parser("query", parents=[common, filters, generalize], help="answer an audit question")
    p.add_argument("--question", required=True, help="data-recipients or usage-count")
    p.add_argument("--rows", action="store_true", help="also print the structured result rows")

    p = sub.add_parser("repl", parents=[common, generalize], help="talk to the assistant and its auditor")
    p.add_argument("--scenario", help="take user profiles from this scenario file")
    p.add_argument("--user", help="who is speaking (default: first profile)")
    p.add_argument("--start", type=_timestamp, help=f"simulated time of the first line (default {REPL_START})")

    p = sub.add_parser("export", parents=[common, filters], help="write the audit trail as PROV-N")
    p.add_argument("--provn", help=f"output file (default <out>/{TRAIL_NAME})")

    p = sub.add_parser("norms-mine", parents=[common, filters], help="mine usage norms")
    p.add_argument("--config", help="JSON file with NormConfig fields")
    p.add_argument("--norms", help=f"norms file to write (default <out>/{NORMS_NAME})")

    p = sub.add_parser("norms-check", parents=[common, filters], help="flag events that break mined norms")
    p.add_argument("--config", help="JSON file with NormConfig fields")
    p.add_argument("--norms", help=f"norms file to read (default <out>/{NORMS_NAME})")

    sub.add_parser("report", parents=[common, filters, generalize], help="print a privacy report")
    return parser


def _filter(args) -> TrailFilter:
    try:
        return TrailFilter(
            getattr(args, "start", None),
            getattr(args, "end", None),
            getattr(args, "user", None),
            getattr(args, "skill", None),
            getattr(args, "trace", None),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _names(args) -> DisplayNames:
    if getattr(args, "names", None):
        try:
            return DisplayNames.from_file(args.names)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read display names: {exc}") from None
    return DisplayNames.default()


def _existing_log(args) -> BindingLog:
    path = Path(args.out) / LOG_NAME
    if not path.is_file():
        raise UsageError(msg("missing_log", path=path))
    return BindingLog(path, TemplateCatalogue.default())


def _trail(log: BindingLog, trail_filter: TrailFilter | None = None):
    trail = build_audit_trail(log, filter=trail_filter)
    if log.corrupt_entries:
        print(msg("corrupt", count=len(log.corrupt_entries), path=log.path), file=sys.stderr)
    return trail


def cmd_run(args) -> int:
    path = Path(args.scenario)
    if not path.is_file():
        raise UsageError(msg("missing_scenario", path=path))
    scenario = load_scenario(path)
    sim_log, auditor = record_scenario(scenario, args.out)
    for turn in sim_log.turns:
        time = next(m.sim_time for m in sim_log.messages if m.trace_id == turn.trace_id)
        print(msg("turn", time=format_timestamp(time), user=turn.user_id, text=turn.text))
        if turn.response is None:
            print(msg("no_intent"))
        else:
            print(msg("reply", skill=turn.intent.skill_id, text=turn.response.text))
    print(msg("run_summary", rows=len(auditor.log.load()), path=auditor.log.path))
    if auditor.rejected:
        print(msg("run_dead", count=auditor.rejected, path=auditor.dead_letter.path))
    return EXIT_OK


def _row_records(rows, generalize: bool) -> str:
    lines = []
    for row in rows:
        record = row.to_record()
        if generalize and row.time is not None:
            record["time"] = format_timestamp(generalize_time(row.time))
        if row.data_value is not None:
            record["data_value"] = generalize_value(row.data_type, row.data_value) if generalize else row.data_value
        lines.append(json.dumps(record))
    return "\n".join(lines)


def cmd_query(args) -> int:
    if args.question not in QUESTIONS:
        raise UsageError(msg("unknown_question", question=args.question, supported=", ".join(QUESTIONS)))
    if args.question == "usage-count" and not args.skill:
        raise UsageError(msg("needs_skill"))
    log = _existing_log(args)
    generalize = args.generalize == "on"
    if args.question == "data-recipients":
        trail_filter = _filter(args)
        rows = query_data_recipients(_trail(log, trail_filter), trail_filter)
        print(narrate_recipients(rows, _names(args), generalize))
        if args.rows and rows:
            print(_row_records(rows, generalize))
    else:
        trail = _trail(log, TrailFilter(user_id=args.user, trace_id=args.trace))
        print(query_usage_count(trail, args.skill, args.start, args.end))
    return EXIT_OK


def cmd_export(args) -> int:
    log = _existing_log(args)
    trail = _trail(log, _filter(args))
    target = Path(args.provn) if args.provn else Path(args.out) / TRAIL_NAME
    try:
        target.write_text(serialize_provn(trail), encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write {target}: {exc}") from exc
    print(msg("exported", count=trail.statement_count, path=target))
    return EXIT_OK


def _config(args) -> NormConfig:
    if not args.config:
        return NormConfig()
    try:
        return NormConfig.from_file(args.config)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad norm config {args.config}: {exc}") from None


def cmd_norms_mine(args) -> int:
    config = _config(args)
    log = _existing_log(args)
    norms = mine_norms(extract_events(_trail(log, _filter(args))), config)
    target = Path(args.norms) if args.norms else Path(args.out) / NORMS_NAME
    try:
        target.write_text(norms_to_jsonl(norms), encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write {target}: {exc}") from exc
    if not norms:
        print(msg("no_norms"))
    for norm in norms:
        print(norm.summary())
    print(msg("norms_written", count=len(norms), path=target))
    return EXIT_OK


def cmd_norms_check(args) -> int:
    config = _config(args)
    source = Path(args.norms) if args.norms else Path(args.out) / NORMS_NAME
    if not source.is_file():
        raise UsageError(msg("missing_norms", path=source))
    try:
        norms = norms_from_jsonl(source.read_text(encoding="utf-8"))
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad norms file {source}: {exc}") from None
    log = _existing_log(args)
    trail = _trail(log, _filter(args))
    times = [a.start_time for a in trail.nodes_of_kind(NodeKind.ACTIVITY) if a.start_time]
    now = max(times) if times else None
    for event in extract_events(trail):
        violation = check_violation(event, norms, config, now)
        if violation is not None:
            print(violation.describe())
    return EXIT_OK


def cmd_report(args) -> int:
    log = _existing_log(args)
    trail_filter = _filter(args)
    trail = _trail(log, trail_filter)
    names = _names(args)
    print(msg("report_header"))
    print(msg("report_data"))
    print("  " + narrate_recipients(query_data_recipients(trail, trail_filter), names, args.generalize == "on"))
    print(msg("report_usage"))
    skills = sorted({r.target for r in trail.relations if r.target.prefix == "mycroft"})
    for skill in skills:
        count = query_usage_count(trail, skill, trail_filter.start, trail_filter.end)
        print(msg("report_usage_line", skill=names(skill), count=count))
    return EXIT_OK


class Repl:
    """Line-driven session mixing assistant turns and audit questions."""

    def __init__(self, out_dir, profiles, user_id=None, start=None, generalize=True, names=None, output=None):
        self.out = output or sys.stdout
        self.log = BindingLog(Path(out_dir) / LOG_NAME, TemplateCatalogue.default())
        rows = self.log.load()
        numbers = [trace_number(r.trace_id) or 0 for r in rows]
        self.assistant = Assistant(profiles=profiles, first_trace=max(numbers, default=0) + 1)
        self.auditor = Auditor(self.log, profiles)
        self.auditor.attach(self.assistant.bus)
        self.user_id = user_id or next(iter(profiles), "user")
        if start is not None:
            self.now = start
        elif rows:
            self.now = max(r.timestamp for r in rows) + REPL_STEP
        else:
            self.now = parse_timestamp(REPL_START)
        self.generalize = generalize
        self.names = names or DisplayNames.default()
        self.rules = self.assistant.rules + AUDITOR_RULES

    def say(self, text: str) -> None:
        print(text, file=self.out)

    def answer(self, intent) -> str:
        trail = build_audit_trail(self.log, filter=TrailFilter(user_id=self.user_id))
        if intent.name == "data_recipients":
            return narrate_recipients(query_data_recipients(trail), self.names, self.generalize)
        spoken = intent.slots.get("skill", "")
        words = set(spoken.split())
        for skill in self.assistant.skills.values():
            if words & set(skill.skill_id.split("-")[:-1] or [skill.skill_id]):
                return narrate_usage(query_usage_count(trail, skill.skill_id), f"mycroft:{skill.skill_id}", self.names)
        return msg("unknown_skill")

    def handle(self, line: str) -> bool:
        """Process one input line; return False when the session should end."""
        line = line.strip()
        if not line:
            return True
        if line == ":quit":
            return False
        if line == ":help":
            self.say(msg("repl_help"))
            return True
        try:
            intent = match_intent(self.rules, line)
        except NoIntentMatched:
            intent = None
        if intent is not None and intent.skill_id == AUDITOR_SKILL:
            self.say(self.answer(intent))
            return True
        result = self.assistant.handle_utterance(self.user_id, line, self.now)
        self.now += REPL_STEP
        self.say(result.response.text if result.response else msg("not_understood"))
        return True

    def run(self, stream) -> None:
        interactive = stream.isatty()
        while True:
            if interactive:
                print("> ", end="", file=self.out, flush=True)
            line = stream.readline()
            if not line or not self.handle(line):
                break


def cmd_repl(args) -> int:
    profiles = dict(DEMO_PROFILES)
    if args.scenario:
        path = Path(args.scenario)
        if not path.is_file():
            raise UsageError(msg("missing_scenario", path=path))
        profiles = load_scenario(path).profiles or profiles
    repl = Repl(args.out, profiles, args.user, args.start, args.generalize == "on", _names(args))
    repl.run(sys.stdin)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "query": cmd_query,
    "repl": cmd_repl,
    "export": cmd_export,
    "norms-mine": cmd_norms_mine,
    "norms-check": cmd_norms_check,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ScenarioParseError) as exc:
        print(msg("input", error=exc), file=sys.stderr)
        return EXIT_USAGE
    except StorageError as exc:
        print(msg("storage", error=exc), file=sys.stderr)
        return EXIT_STORAGE
    except ProvAuditError as exc:
        print(msg("input", error=exc), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
