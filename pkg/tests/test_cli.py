import json

import pytest

from wbfuzz.cli import EXIT_ERROR, EXIT_OK, EXIT_USAGE, main
from wbfuzz.fixtures import REGISTRY


def test_list_suts(capsys):
    assert main(["list-suts"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6 and {l.split()[0] for l in lines} == set(REGISTRY)


@pytest.mark.parametrize("argv", [
    [],
    ["run", "--sut", "stringops", "--arm", "nope", "--budget", "10"],
    ["run", "--sut", "stringops", "--arm", "tt"],
    ["run", "--sut", "stringops", "--arm", "tt", "--budget", "10", "--seed", "x"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == EXIT_USAGE


@pytest.mark.parametrize("extra", [["--budget", "abc"], ["--budget", "10", "--taos-probability", "2"]])
def test_bad_values_exit_2(extra, tmp_path):
    assert main(["run", "--sut", "stringops", "--arm", "tt", "--out", str(tmp_path)] + extra) == EXIT_USAGE


def test_unknown_sut_exit_2(tmp_path):
    assert main(["run", "--sut", "nope", "--arm", "tt", "--budget", "5", "--out", str(tmp_path)]) == EXIT_USAGE


def test_missing_out_dir(monkeypatch):
    monkeypatch.delenv("WBFUZZ_OUT", raising=False)
    assert main(["run", "--sut", "stringops", "--arm", "tt", "--budget", "5"]) == EXIT_USAGE


def test_run_replay_report(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("WBFUZZ_OUT", str(tmp_path))
    assert main(["run", "--sut", "stringops", "--arm", "tt", "--budget", "200", "--seed", "3",
                 "--no-timestamps"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "evaluations      200" in out
    suite = json.loads((tmp_path / "suite.json").read_text())
    assert suite["sut"] == "stringops" and suite["tests"]
    assert main(["replay", "--suite", str(tmp_path / "suite.json"), "--sut", "stringops"]) == EXIT_OK
    n = len(suite["tests"])
    assert f"{n}/{n} tests passed" in capsys.readouterr().out
    assert main(["report", "--in", str(tmp_path)]) == EXIT_OK
    assert "sut=stringops arm=tt" in capsys.readouterr().out


def test_replay_wrong_sut_and_missing_file(tmp_path):
    assert main(["run", "--sut", "collections", "--arm", "base", "--budget", "20", "--out", str(tmp_path)]) == 0
    assert main(["replay", "--suite", str(tmp_path / "suite.json"), "--sut", "stringops"]) == EXIT_ERROR
    assert main(["replay", "--suite", str(tmp_path / "none.json"), "--sut", "collections"]) == EXIT_ERROR
    assert main(["report", "--in", str(tmp_path / "nowhere")]) == EXIT_ERROR


def test_override_flags_accepted(tmp_path):
    argv = ["run", "--sut", "clockwork", "--arm", "all", "--budget", "30", "--out", str(tmp_path),
            "--sleep-cap", "0.5", "--discovery-window", "0.2", "--violate-probability", "0"]
    assert main(argv) == EXIT_OK
    assert json.loads((tmp_path / "report.json").read_text())["stats"]["evaluations"] == 30
