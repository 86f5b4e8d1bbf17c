import random

import pytest

from wbfuzz.config import MioConfig, arm_features
from wbfuzz.engine import Archive, Budget, BudgetError, Individual, Search, run
from wbfuzz.fixtures import get_sut
from wbfuzz.taint import FAKE_HEADER, FAKE_PARAM


def search(sut="hiddenparams", arm="all", budget=200, seed=1):
    return Search(get_sut(sut), arm_features(arm), Budget.parse(budget), seed, arm=arm)


class TestBudget:
    @pytest.mark.parametrize("text,mode,total", [("500", "evaluations", 500), (7, "evaluations", 7),
                                                 ("30s", "seconds", 30), ("2m", "seconds", 120),
                                                 ("1h", "seconds", 3600)])
    def test_parse(self, text, mode, total):
        b = Budget.parse(text)
        assert (b.mode, b.total) == (mode, total)

    @pytest.mark.parametrize("text", ["", "abc", "0", "-5", "1.5", "10x", "0s"])
    def test_rejects(self, text):
        with pytest.raises(BudgetError):
            Budget.parse(text)


def test_exact_evaluation_budget():
    r = run(get_sut("collections"), "all", 137, seed=3)
    assert r.stats["evaluations"] == 137


def test_same_seed_same_result():
    a = run(get_sut("collections"), "all", 300, seed=5)
    b = run(get_sut("collections"), "all", 300, seed=5)
    assert a.first_covered == b.first_covered
    assert sorted(a.archive.covered) == sorted(b.archive.covered)
    assert a.archive.best == b.archive.best


def test_empty_archive_samples():
    s = search()
    assert not s.archive.populations
    ind = s.sample_or_mutate()
    assert isinstance(ind, Individual) and 1 <= len(ind.actions) <= s.mio.max_actions
    s.harness.close()


def test_population_shrinks_to_one_at_focus():
    s = search(budget=100)
    sizes = []
    for e in range(0, 101, 10):
        s.evaluations = e
        sizes.append(s.population_size())
    s.harness.close()
    assert sizes[0] == 10 and sizes[5:] == [1] * 6
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


class TestArchive:
    def ind(self, n):
        return Individual([None] * n)

    def test_best_never_decreases(self):
        rng = random.Random(0)
        a = Archive()
        history = {}
        for order in range(300):
            fit = {f"t{rng.randrange(5)}": rng.random() for _ in range(3)}
            a.update(self.ind(rng.randint(1, 3)), fit, order, 10)
            for t, h in a.best.items():
                assert h >= history.get(t, 0.0)
            history = dict(a.best)

    def test_covered_keeps_shortest_and_earliest(self):
        a = Archive()
        long, short, short2 = self.ind(3), self.ind(1), self.ind(1)
        a.update(long, {"t": 1.0}, 0, 10)
        a.update(short, {"t": 1.0}, 1, 10)
        a.update(short2, {"t": 1.0}, 2, 10)
        assert a.covered["t"].individual is short
        assert "t" not in a.populations

    def test_pick_prefers_least_picked(self):
        a = Archive()
        a.update(self.ind(1), {"x": 0.5, "y": 0.5}, 0, 10)
        rng = random.Random(1)
        a.pick(rng)
        a.pick(rng)
        assert a.counters == {"x": 1, "y": 1}

    def test_improvement_resets_counter(self):
        a = Archive()
        a.update(self.ind(1), {"x": 0.5}, 0, 10)
        a.counters["x"] = 7
        a.update(self.ind(1), {"x": 0.6}, 1, 10)
        assert a.counters["x"] == 0


def test_no_fake_names_after_discovery_window():
    s = search(budget=300)
    seen = []
    orig = s.harness.execute

    def spy(req, *a, **kw):
        seen.append((s.evaluations, FAKE_PARAM in req.query or FAKE_HEADER in req.headers))
        return orig(req, *a, **kw)

    s.harness.execute = spy
    s.run()
    assert any(flag for e, flag in seen if e < 30)
    assert not any(flag for e, flag in seen if e >= 30)
    assert s.stats["injected_evaluations"] == 30


def test_base_arm_never_injects():
    r = run(get_sut("hiddenparams"), "base", 100, seed=1)
    assert r.stats["injected_evaluations"] == 0 and r.stats["discoveries"] == []


def test_discovered_parameter_upgraded_and_used():
    r = run(get_sut("hiddenparams"), "all", 300, seed=2)
    names = {d["name"] for d in r.stats["discoveries"]}
    assert {"payer_email", "mc_gross"} <= names
    assert {u["name"]: u["type"] for u in r.stats["type_upgrades"]}.get("mc_gross") == "Number"
    t = r.templates["POST /paypal/ipn/consumer/{consumerID}"]
    assert "mc_gross" in t.known_names("query")


def test_specialization_applied_in_next_generation():
    s = search(sut="stringops", arm="tt", budget=400, seed=0)
    s.run()
    assert s.stats["specializations"] > 0
    assert any(t.endswith(":activated") for t in s.archive.covered)


def test_exported_individuals_have_no_fake_names():
    r = run(get_sut("hiddenparams"), "all", 100, seed=1)
    for entry in r.archive.covered.values():
        for a in entry.individual.stripped().actions:
            assert FAKE_PARAM not in a.inputs["query"] and FAKE_HEADER not in a.inputs["header"]


def test_wall_clock_budget_terminates():
    r = run(get_sut("collections"), "base", "1s", seed=0)
    assert r.stats["evaluations"] > 0


def test_custom_mio_config():
    r = run(get_sut("collections"), "base", 50, seed=0, mio=MioConfig(population=3, max_actions=1))
    for entry in r.archive.covered.values():
        assert len(entry.individual.actions) == 1
