import json

import pytest

from wbfuzz.config import arm_features
from wbfuzz.engine import run
from wbfuzz.fixtures import get_sut, hiddenparams
from wbfuzz.harness import Harness
from wbfuzz.oracle import (SUITE_VERSION, SuiteError, build_suite, classify, discriminator, export, replay)
from wbfuzz.schema import ActionTemplate
from wbfuzz.trace import Response

T = ActionTemplate("GET", "/x", responses={"200": {"required": ["id"], "fields": {"id": "integer"}},
                                           "404": None})


class TestClassify:
    def test_500(self):
        (f,) = classify(Response(500, {}, "ValueError: bad 'abc' 12"), T)
        assert f.kind == "ServerError500"
        assert f.dedup_key == "GET /x|ServerError500|ValueError: bad '?' N"

    def test_entity_crash_also_500(self):
        kinds = [f.kind for f in classify(Response(500, {}, "EntityParseCrash: x", entity_crash=True), T)]
        assert kinds == ["ServerError500", "EntityParseCrash"]

    def test_declared_ok(self):
        assert classify(Response(200, {"id": 3}), T) == []
        assert classify(Response(404, {"error": "x"}), T) == []

    def test_undeclared_status(self):
        (f,) = classify(Response(418, {}), T)
        assert f.kind == "SchemaMismatch" and "418" in f.discriminator

    def test_shape_mismatch(self):
        assert classify(Response(200, {"id": "x"}), T)[0].kind == "SchemaMismatch"
        assert classify(Response(200, {}), T)[0].kind == "SchemaMismatch"

    def test_no_template_no_fault(self):
        assert classify(Response(500, {}), None) == []


def test_discriminator_masks_values_and_keeps_first_line():
    assert discriminator("KeyError: 'abc'\ntraceback") == "KeyError: '?'"
    assert discriminator('x "q" -3.5 7') == "x '?' N N"
    assert discriminator("") == ""


@pytest.fixture(scope="module")
def hp_run():
    return run(get_sut("hiddenparams"), "all", 300, seed=1)


def test_export_replay_round_trip(hp_run, tmp_path):
    sut = get_sut("hiddenparams")
    suite = export(hp_run, lambda: Harness(sut, arm_features("all")), str(tmp_path))
    assert {p.name for p in tmp_path.iterdir()} == {"suite.json", "suite.http.txt", "report.json"}
    assert json.loads((tmp_path / "suite.json").read_text()) == suite
    assert suite["version"] == SUITE_VERSION and "generatedAt" not in suite
    verdicts = replay(suite, sut, arm_features("all"))
    assert verdicts and all(v["passed"] for v in verdicts)
    assert any(t["faults"] for t in suite["tests"])


def test_suite_is_deterministic(hp_run):
    sut = get_sut("hiddenparams")
    a = build_suite(hp_run, lambda: Harness(sut, arm_features("all")))
    b = build_suite(hp_run, lambda: Harness(sut, arm_features("all")))
    assert json.dumps(a) == json.dumps(b)


def test_replay_refuses_other_fixture(hp_run):
    sut = get_sut("hiddenparams")
    suite = build_suite(hp_run, lambda: Harness(sut, arm_features("all")))
    with pytest.raises(SuiteError):
        replay(suite, get_sut("stringops"))
    with pytest.raises(SuiteError):
        replay({**suite, "version": "other/9"}, sut)


def test_fixed_service_fails_the_fault_test(hp_run):
    sut = get_sut("hiddenparams")
    suite = build_suite(hp_run, lambda: Harness(sut, arm_features("all")))
    fixed = hiddenparams.descriptor(fixed=True)
    verdicts = {v["name"]: v for v in replay(suite, fixed, arm_features("all"))}
    fault_tests = [t["name"] for t in suite["tests"]
                   if any("ServerError500" in k for k in t["faults"])]
    assert fault_tests
    for name in fault_tests:
        assert not verdicts[name]["passed"]


def test_empty_archive_gives_empty_suite():
    r = run(get_sut("collections"), "base", 1, seed=0)
    r.archive.covered.clear()
    r.faults.clear()
    suite = build_suite(r, lambda: Harness(get_sut("collections"), arm_features("base")))
    assert suite["tests"] == []
    assert replay(suite, get_sut("collections")) == []


def test_violating_rows_exported_only_with_faults():
    sut = get_sut("appsession")
    feats = arm_features("jpa", violate_probability=1.0)
    r = run(sut, "jpa", 300, seed=4, features=feats)
    suite = build_suite(r, lambda: Harness(sut, feats))
    clean = [t for t in suite["tests"] if not t["faults"]]
    assert clean and any(t["faults"] for t in suite["tests"])
    for t in clean:
        for s in t["sql"]:
            row = s["row"]
            assert row.get("tan_counter") is not None
            assert row.get("sot") in (None, "HASHED_GUID", "TELETAN", "CONNECTION")
            assert row.get("teletan_type") in (None, "TEST", "EVENT")
    assert all(v["passed"] for v in replay(suite, sut, feats))
