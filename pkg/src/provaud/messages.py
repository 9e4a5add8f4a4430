"""Every human-visible string printed by the command-line tools."""

MESSAGES = {
    "turn": "[{time}] {user}: {text}",
    "reply": "  {skill}: {text}",
    "no_intent": "  (no skill matched)",
    "run_summary": "Recorded {rows} binding rows in {path}",
    "run_dead": "Rejected {count} messages; see {path}",
    "missing_scenario": "scenario file not found: {path}",
    "missing_log": "no binding log at {path}; run 'provaud run' first",
    "missing_norms": "no norms file at {path}; run 'provaud norms-mine' first",
    "corrupt": "warning: skipped {count} corrupt entries in {path}",
    "unknown_question": "unknown question {question!r}; supported: {supported}",
    "needs_skill": "usage-count needs --skill",
    "storage": "storage error: {error}",
    "input": "error: {error}",
    "exported": "Wrote {count} statements to {path}",
    "no_norms": "No norms mined.",
    "norms_written": "Wrote {count} norms to {path}",
    "not_understood": "Sorry, I didn't understand.",
    "unknown_skill": "Sorry, I don't know that skill.",
    "repl_help": "Ask 'which services got my personal data', 'how often did I use <skill>', talk to the assistant, or type :quit.",
    "report_header": "Privacy report",
    "report_data": "Data sent to external services:",
    "report_usage": "Skill usage:",
    "report_usage_line": "  {skill}: {count}",
}


def msg(key: str, **kwargs) -> str:
    return MESSAGES[key].format(**kwargs)
