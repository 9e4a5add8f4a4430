from __future__ import annotations

import io
import subprocess
import sys
from importlib import resources

import pytest

from provaud.auditor import BindingLog, TrailFilter, build_audit_trail
from provaud.cli import main
from provaud.narrate import NO_DATA_SENTENCE
from provaud.prov import parse_provn
from provaud.template import TemplateCatalogue


def scenario(name: str) -> str:
    return str(resources.files("provaud").joinpath("scenarios", name))


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def weather_dir(tmp_path, capsys):
    out = tmp_path / "weather"
    assert run_cli(capsys, "run", "--scenario", scenario("weather.scn"), "--out", out)[0] == 0
    return out


def feed(monkeypatch, text):
    monkeypatch.setattr(sys, "stdin", io.StringIO(text))


class TestRun:
    def test_weather(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "run", "--scenario", scenario("weather.scn"), "--out", tmp_path)
        assert code == 0
        assert len(BindingLog(tmp_path / "bindings.log").load()) == 4
        assert "alice: What is the weather today?" in out
        assert "Today's forecast is" in out

    def test_missing_scenario(self, tmp_path, capsys):
        missing = tmp_path / "nope.scn"
        code, _, err = run_cli(capsys, "run", "--scenario", missing, "--out", tmp_path)
        assert code == 2 and str(missing) in err

    def test_bad_scenario(self, tmp_path, capsys):
        bad = tmp_path / "bad.scn"
        bad.write_text("this is not a turn\n")
        code, _, err = run_cli(capsys, "run", "--scenario", bad, "--out", tmp_path)
        assert code == 2 and f"{bad}:1:" in err

    def test_unwritable_out_dir(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code, _, err = run_cli(capsys, "run", "--scenario", scenario("weather.scn"), "--out", blocker / "sub")
        assert code == 3 and "storage" in err

    def test_out_from_environment(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("PROVAUD_OUT", str(tmp_path / "env"))
        assert main(["run", "--scenario", scenario("weather.scn")]) == 0
        assert (tmp_path / "env" / "bindings.log").exists()

    def test_usage_error_from_argparse(self, capsys):
        assert main(["run"]) == 2


class TestQuery:
    def test_data_recipients(self, weather_dir, capsys):
        code, out, _ = run_cli(capsys, "query", "--question", "data-recipients", "--out", weather_dir)
        assert code == 0
        assert out.startswith("Your geo-location was sent to OpenWeather")

    def test_rows_are_generalized(self, weather_dir, capsys):
        _, out, _ = run_cli(capsys, "query", "--question", "data-recipients", "--rows", "--out", weather_dir)
        assert '"data_value": "51.5,-0.1"' in out and '"time": "2024-03-12T08:00:00Z"' in out
        _, out, _ = run_cli(capsys, "query", "--question", "data-recipients", "--rows", "--generalize", "off", "--out", weather_dir)
        assert '"data_value": "51.5128,-0.1168"' in out and "08:13" in out

    def test_usage_count_empty_log(self, tmp_path, capsys):
        (tmp_path / "bindings.log").write_text("")
        code, out, _ = run_cli(capsys, "query", "--question", "usage-count", "--skill", "joke-skill", "--out", tmp_path)
        assert code == 0 and out == "0\n"

    def test_usage_count(self, weather_dir, capsys):
        _, out, _ = run_cli(capsys, "query", "--question", "usage-count", "--skill", "weather-skill", "--out", weather_dir)
        assert out == "1\n"

    def test_unknown_question(self, weather_dir, capsys):
        code, _, err = run_cli(capsys, "query", "--question", "favourite-colour", "--out", weather_dir)
        assert code == 2 and "data-recipients" in err and "usage-count" in err

    def test_missing_log(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "query", "--question", "data-recipients", "--out", tmp_path)
        assert code == 2 and "bindings.log" in err

    def test_bad_time(self, weather_dir, capsys):
        assert main(["query", "--question", "data-recipients", "--from", "yesterday", "--out", str(weather_dir)]) == 2


class TestRepl:
    def test_weather_then_question(self, tmp_path, capsys, monkeypatch):
        feed(monkeypatch, "what is the weather today\nwhich services got my personal data\n:quit\n")
        code, out, _ = run_cli(capsys, "repl", "--out", tmp_path)
        lines = out.splitlines()
        assert code == 0 and len(lines) == 2
        assert "OpenWeather" in lines[1] and "geo-location" in lines[1]

    def test_quit_immediately(self, tmp_path, capsys, monkeypatch):
        feed(monkeypatch, ":quit\n")
        assert run_cli(capsys, "repl", "--out", tmp_path) == (0, "", "")

    def test_question_on_empty_log(self, tmp_path, capsys, monkeypatch):
        feed(monkeypatch, "which services got my personal data\n")
        _, out, _ = run_cli(capsys, "repl", "--out", tmp_path)
        assert out == NO_DATA_SENTENCE + "\n"

    def test_unrecognized_line(self, tmp_path, capsys, monkeypatch):
        feed(monkeypatch, "tell me a story\n")
        _, out, _ = run_cli(capsys, "repl", "--out", tmp_path)
        assert out == "Sorry, I didn't understand.\n"

    def test_usage_question(self, tmp_path, capsys, monkeypatch):
        feed(monkeypatch, "what is the weather\nweather again please\nhow often did I use the weather skill\n")
        _, out, _ = run_cli(capsys, "repl", "--out", tmp_path)
        assert out.splitlines()[-1] == "You used the Weather skill 2 times."

    def test_session_continues_existing_log(self, weather_dir, capsys, monkeypatch):
        feed(monkeypatch, "tell me a joke\n")
        run_cli(capsys, "repl", "--out", weather_dir)
        rows = BindingLog(weather_dir / "bindings.log").load()
        assert [r.trace_id for r in rows][-1] == "t0002"
        assert rows[-1].timestamp > rows[0].timestamp

    def test_piped_process(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "provaud.cli", "repl", "--out", str(tmp_path)],
            input="what is the weather today\nwhich services got my personal data\n:quit\n",
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[1].startswith("Your geo-location was sent to OpenWeather")


class TestExport:
    def test_weather(self, weather_dir, capsys):
        target = weather_dir / "trail.provn"
        code, out, _ = run_cli(capsys, "export", "--out", weather_dir, "--provn", target)
        text = target.read_text()
        assert code == 0 and "sais:UserData" in text
        assert parse_provn(text) == build_audit_trail(BindingLog(weather_dir / "bindings.log"))

    def test_trace_filter(self, tmp_path, capsys):
        run_cli(capsys, "run", "--scenario", scenario("mixed.scn"), "--out", tmp_path)
        target = tmp_path / "t1.provn"
        run_cli(capsys, "export", "--out", tmp_path, "--trace", "t0001", "--provn", target)
        log = BindingLog(tmp_path / "bindings.log", TemplateCatalogue.default())
        expected = build_audit_trail([r for r in log.load() if r.trace_id == "t0001"])
        assert parse_provn(target.read_text()) == expected
        assert build_audit_trail(log, filter=TrailFilter(trace_id="t0001")) == expected

    def test_empty_log(self, tmp_path, capsys):
        (tmp_path / "bindings.log").write_text("")
        run_cli(capsys, "export", "--out", tmp_path)
        text = (tmp_path / "trail.provn").read_text()
        assert text == "document\nendDocument\n" and parse_provn(text).is_empty()

    def test_corrupt_entries_are_reported(self, weather_dir, capsys):
        with open(weather_dir / "bindings.log", "a") as fh:
            fh.write('{"template_id": "skill_inv')
        code, _, err = run_cli(capsys, "export", "--out", weather_dir)
        assert code == 0 and "skipped 1 corrupt" in err


@pytest.fixture(scope="module")
def garage(tmp_path_factory):
    out = tmp_path_factory.mktemp("garage")
    assert main(["run", "--scenario", scenario("garage.scn"), "--out", str(out)]) == 0
    assert main(["norms-mine", "--out", str(out)]) == 0
    return out


class TestNorms:
    def test_mine(self, garage, capsys):
        code, out, _ = run_cli(capsys, "norms-mine", "--out", garage, "--norms", garage / "again.jsonl")
        summaries = [line for line in out.splitlines() if "support" in line]
        assert code == 0 and len(summaries) >= 3
        assert any(s.startswith("weekends") for s in summaries)
        assert (garage / "again.jsonl").read_text() == (garage / "norms.jsonl").read_text()

    def test_check_night_open(self, garage, tmp_path, capsys):
        (tmp_path / "night.scn").write_text(
            "2024-04-02T02:30:00Z | alice | open the garage door\n2024-04-02T02:33:00Z | alice | close the garage door\n"
        )
        run_cli(capsys, "run", "--scenario", tmp_path / "night.scn", "--out", tmp_path)
        code, out, _ = run_cli(capsys, "norms-check", "--out", tmp_path, "--norms", garage / "norms.jsonl")
        assert code == 0
        assert out.splitlines() == ["OutsideWindow: door_open_interval at 2024-04-02T02:30:00Z (3 min)"]

    def test_check_bundled_checks(self, garage, tmp_path, capsys):
        run_cli(capsys, "run", "--scenario", scenario("garage_checks.scn"), "--out", tmp_path)
        _, out, _ = run_cli(capsys, "norms-check", "--out", tmp_path, "--norms", garage / "norms.jsonl")
        assert [line.split(":")[0] for line in out.splitlines()] == ["OutsideWindow", "ExcessiveDuration"]

    def test_check_zero_events(self, garage, weather_dir, capsys):
        code, out, _ = run_cli(capsys, "norms-check", "--out", weather_dir, "--norms", garage / "norms.jsonl")
        assert (code, out) == (0, "")

    def test_missing_norms(self, weather_dir, capsys):
        code, _, err = run_cli(capsys, "norms-check", "--out", weather_dir)
        assert code == 2 and "norms.jsonl" in err

    def test_config_file(self, garage, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text('{"min_support": 6}')
        run_cli(capsys, "norms-mine", "--out", garage, "--config", config, "--norms", tmp_path / "n.jsonl")
        strict = (tmp_path / "n.jsonl").read_text().splitlines()
        assert 0 < len(strict) < len((garage / "norms.jsonl").read_text().splitlines())
        config.write_text('{"bin_width": 7}')
        assert main(["norms-mine", "--out", str(garage), "--config", str(config), "--norms", str(tmp_path / "n.jsonl")]) == 2


def test_report(tmp_path, capsys):
    run_cli(capsys, "run", "--scenario", scenario("mixed.scn"), "--out", tmp_path)
    code, out, _ = run_cli(capsys, "report", "--out", tmp_path)
    assert code == 0
    assert out.splitlines()[0] == "Privacy report"
    assert "2 times, most recently on 2024-03-13 at 08:00" in out
    assert "  Weather: 3" in out and "  Joke: 2" in out


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "provaud.cli", "--help"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    for command in ("run", "query", "repl", "export", "norms-mine", "norms-check", "report"):
        assert command in proc.stdout
