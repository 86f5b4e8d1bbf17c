"""Many-target evolutionary search over HTTP call sequences.

The loop follows the MIO scheme: one small population per testing target,
random sampling that fades out until the focused phase, and mutation of
archived individuals chosen from the least-recently-improved target.
Runtime observations (taint sightings, discovered inputs, DTO shapes and
empty SELECTs) are turned into refined copies that are evaluated next.
"""

from __future__ import annotations

import logging
import random
import re
import sqlite3
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional
from urllib.parse import quote

from . import genes as G
from .config import MioConfig, arm_features, Features
from .harness import Harness, Request, SutDescriptor
from .oracle import classify
from .schema import ActionTemplate, discover_body_dto, expand
from .sqlgen import PkCounter, SqlInsertAction, react_to_empty_selects, reconcile, table_only
from .taint import (FAKE_HEADER, FAKE_PARAM, TaintMinter, apply_to_gene, in_discovery_window, is_taint)

log = logging.getLogger(__name__)

LOCATIONS = ("path", "query", "header")
_PATH_RE = re.compile(r"a(\d+)/(path|query|header)/([^/]+)(?:/(.*))?$")
_BODY_RE = re.compile(r"a(\d+)/body(?:/(.*))?$")
_QUEUE_CAP = 32
_NUMERIC_KINDS = {"FloatFormat": "Number", "IntegerFormat": "Number"}


class BudgetError(ValueError):
    pass


# --- individuals -----------------------------------------------------------------


@dataclass
class HttpAction:
    verb: str
    path: str
    inputs: dict  # location -> {name: Gene}
    body: Optional[G.Gene] = None

    @property
    def key(self) -> str:
        return f"{self.verb} {self.path}"

    def copy(self) -> "HttpAction":
        return HttpAction(self.verb, self.path,
                          {loc: {n: g.copy() for n, g in d.items()} for loc, d in self.inputs.items()},
                          self.body.copy() if self.body is not None else None)


@dataclass
class Individual:
    actions: list
    sql: list = field(default_factory=list)

    def copy(self) -> "Individual":
        return Individual([a.copy() for a in self.actions], [s.copy() for s in self.sql])

    def stripped(self) -> "Individual":
        """Copy without any fake discovery names (they never live in genes, but be safe)."""
        out = self.copy()
        for a in out.actions:
            a.inputs["query"].pop(FAKE_PARAM, None)
            a.inputs["header"].pop(FAKE_HEADER, None)
        return out

    @property
    def size(self) -> int:
        return len(self.actions) + len(self.sql)

    def replace_gene(self, path: str, fn) -> None:
        """Replace the gene tree holding ``path`` with ``fn(root, subpath)``."""
        m = _PATH_RE.match(path)
        if m:
            idx, loc, name, sub = int(m.group(1)), m.group(2), m.group(3), m.group(4) or ""
            if idx < len(self.actions) and name in self.actions[idx].inputs[loc]:
                d = self.actions[idx].inputs[loc]
                d[name] = fn(d[name], sub)
            return
        m = _BODY_RE.match(path)
        if m:
            idx, sub = int(m.group(1)), m.group(2) or ""
            if idx < len(self.actions) and self.actions[idx].body is not None:
                self.actions[idx].body = fn(self.actions[idx].body, sub)

    def slots(self) -> list:
        """Mutable gene roots as ``(container, key)`` pairs."""
        out = []
        for a in self.actions:
            for loc in LOCATIONS:
                for n, g in a.inputs[loc].items():
                    if not g.is_singleton():
                        out.append((a.inputs[loc], n))
            if a.body is not None and not a.body.is_singleton():
                out.append((a, "body"))
        for s in self.sql:
            for n, g in s.genes.items():
                if not g.is_singleton():
                    out.append((s.genes, n))
        return out


def sample_action(template: ActionTemplate, rng, ctx: G.MutationContext) -> HttpAction:
    inputs = {loc: {spec.name: G.sample(spec.gene, rng, ctx) for spec in template.inputs(loc)}
              for loc in LOCATIONS}
    body = G.sample(template.body, rng, ctx) if template.body is not None else None
    return HttpAction(template.verb, template.path, inputs, body)


# --- execution -------------------------------------------------------------------


@dataclass
class Execution:
    requests: list  # (Request, ActionTemplate)
    responses: list
    trace: object
    taint_paths: dict  # taint id -> gene path
    sql_failures: int = 0


def _render_input(g: G.Gene) -> Optional[str]:
    if isinstance(g, G.OptionalGene) and not g.present:
        return None
    return g.render()


def _renumber_taints(ind: Individual) -> dict:
    paths, n = {}, 0
    for i, a in enumerate(ind.actions):
        roots = [(f"a{i}/{loc}/{name}", g) for loc in LOCATIONS for name, g in a.inputs[loc].items()]
        if a.body is not None:
            roots.append((f"a{i}/body", a.body))
        for root_path, g in roots:
            for p, leaf in G.string_leaves(g, root_path):
                if is_taint(leaf.v):
                    leaf.v = f"_EM_{n}_XYZ_"
                    paths[n] = p
                    n += 1
    return paths


def build_request(action: HttpAction, inject: Optional[dict]) -> Request:
    path = action.path
    for name, g in action.inputs["path"].items():
        path = path.replace("{" + name + "}", quote(_render_input(g) or "", safe=""))
    query = {n: v for n, g in action.inputs["query"].items() if (v := _render_input(g)) is not None}
    headers = {n: v for n, g in action.inputs["header"].items() if (v := _render_input(g)) is not None}
    if inject:
        query.update(inject["query"])
        headers.update(inject["headers"])
    body = action.body.value() if action.body is not None else None
    return Request(action.verb, path, query, headers, body)


def execute_individual(harness: Harness, ind: Individual, templates: dict, inject: Optional[dict]) -> Execution:
    """Reset the SUT, run the SQL setup, then every HTTP call in order."""
    trace = harness.reset_sut()
    taint_paths = _renumber_taints(ind)
    failures = 0
    for s in ind.sql:
        try:
            harness.db.insert(s.table, s.row())
        except sqlite3.IntegrityError:
            failures += 1
    requests, responses = [], []
    for i, a in enumerate(ind.actions):
        tmpl = templates.get(a.key)
        req = build_request(a, inject)
        resp = harness.execute(req, i, tmpl)
        requests.append((req, tmpl))
        responses.append(resp)
    return Execution(requests, responses, harness.trace, taint_paths, failures)


def fitness_of(run: Execution, sut_id: str) -> tuple[dict, list]:
    fit = dict(run.trace.heuristics)
    faults = []
    for (req, tmpl), resp in zip(run.requests, run.responses):
        key = tmpl.key if tmpl else f"{req.verb} {req.path}"
        s = resp.status
        h = 1.0 if 200 <= s < 300 else 0.3 if s >= 500 else 0.5
        t = f"ENDPOINT:{key}"
        fit[t] = max(fit.get(t, 0.0), h)
        fit[f"STATUS:{key}:{s}"] = 1.0
        for rec in classify(resp, tmpl):
            fit[f"FAULT:{rec.dedup_key}"] = 1.0
            faults.append(rec)
    return fit, faults


# --- archive ---------------------------------------------------------------------


@dataclass
class Entry:
    h: float
    individual: Individual
    size: int
    order: int


class Archive:
    def __init__(self):
        self.populations: dict[str, list] = {}
        self.covered: dict[str, Entry] = {}
        self.counters: dict[str, int] = {}
        self.best: dict[str, float] = {}

    def update(self, ind: Individual, fitness: dict, order: int, pop_size: int) -> bool:
        improved = False
        size = ind.size
        for t, h in fitness.items():
            if h > self.best.get(t, 0.0):
                self.best[t] = h
            if h <= 0.0:
                continue
            cov = self.covered.get(t)
            if cov is not None:
                if h >= 1.0 and size < cov.size:
                    self.covered[t] = Entry(1.0, ind, size, order)
                continue
            if h >= 1.0:
                self.covered[t] = Entry(1.0, ind, size, order)
                self.populations.pop(t, None)
                self.counters.pop(t, None)
                improved = True
                continue
            pop = self.populations.setdefault(t, [])
            if not pop or h > pop[0].h:
                self.counters[t] = 0
                improved = True
            entry = Entry(h, ind, size, order)
            if len(pop) < pop_size:
                pop.append(entry)
            else:
                worst = pop[-1]
                if h > worst.h or (h == worst.h and size < worst.size):
                    pop[-1] = entry
                else:
                    continue
            pop.sort(key=lambda e: (-e.h, e.size, e.order))
        return improved

    def shrink(self, pop_size: int) -> None:
        for pop in self.populations.values():
            del pop[pop_size:]

    def pick(self, rng) -> Optional[Individual]:
        if not self.populations:
            return None
        low = min(self.counters.get(t, 0) for t in self.populations)
        ties = [t for t in self.populations if self.counters.get(t, 0) == low]
        t = ties[rng.randrange(len(ties))]
        self.counters[t] = low + 1
        pop = self.populations[t]
        return pop[rng.randrange(len(pop))].individual


# --- search ----------------------------------------------------------------------


@dataclass
class Budget:
    mode: str  # "evaluations" | "seconds"
    total: float

    @classmethod
    def parse(cls, text) -> "Budget":
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            b = cls("evaluations", int(text))
        else:
            m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([smh]?)\s*", str(text))
            if not m:
                raise BudgetError(f"bad budget {text!r}; use N (evaluations) or Ns/Nm/Nh")
            n, unit = float(m.group(1)), m.group(2)
            if unit:
                b = cls("seconds", n * {"s": 1, "m": 60, "h": 3600}[unit])
            elif n != int(n):
                raise BudgetError("evaluation budget must be an integer")
            else:
                b = cls("evaluations", int(n))
        if b.total <= 0:
            raise BudgetError("budget must be > 0")
        return b

    def __str__(self):
        return str(int(self.total)) if self.mode == "evaluations" else f"{self.total:g}s"


@dataclass
class SearchResult:
    sut: str
    arm: str
    seed: int
    budget: str
    archive: Archive
    faults: dict
    stats: dict
    templates: dict
    first_covered: dict


class Search:
    def __init__(self, sut: SutDescriptor, features: Features, budget: Budget, seed: int,
                 mio: MioConfig = MioConfig(), arm: str = "custom"):
        self.sut = sut
        self.features = features.validate()
        self.budget = budget
        self.seed = seed
        self.arm = arm
        self.mio = mio
        self.rng = random.Random(seed)
        self.harness = Harness(sut, features)
        self.templates = {t.key: t for t in self.harness.templates}
        self.archive = Archive()
        self.queue: deque = deque()
        self.minter = TaintMinter()
        self.pk = PkCounter()
        self.tables = {t.name: t for t in sut.tables}
        self.effective = {name: reconcile(t, sut.entity_for(name)) if features.jpa else table_only(t)
                          for name, t in self.tables.items()}
        self.evaluations = 0
        self.started = 0.0
        self.faults: dict = {}
        self.first_covered: dict = {}
        self.stats = {
            "discoveries": [], "type_upgrades": [], "dto_discoveries": [], "specializations": 0,
            "sql_inserts": 0, "sql_violations": 0, "sql_failures": 0, "entity_crashes": 0,
            "entity_crashes_with_violation": 0, "injected_evaluations": 0, "sleep_calls": 0,
            "max_slept": 0.0, "sleep_cap_exceeded": 0,
        }

    # --- budget ------------------------------------------------------------

    def consumed(self) -> float:
        if self.budget.mode == "evaluations":
            return float(self.evaluations)
        return time.monotonic() - self.started

    def progress(self) -> float:
        return min(1.0, self.consumed() / self.budget.total)

    def done(self) -> bool:
        return self.consumed() >= self.budget.total

    # --- variation ---------------------------------------------------------

    def _ctx(self, p: float) -> G.MutationContext:
        return G.MutationContext(p, self.minter.text, is_taint)

    def sample(self) -> Individual:
        ctx = self._ctx(self.features.taint_on_sampling)
        keys = list(self.templates)
        n = self.rng.randint(1, self.mio.max_actions)
        return Individual([sample_action(self.templates[keys[self.rng.randrange(len(keys))]], self.rng, ctx)
                           for _ in range(n)])

    def mutate(self, parent: Individual) -> Individual:
        ind = parent.copy()
        ctx = self._ctx(self.features.taint_on_mutation)
        if self.rng.random() < self.mio.add_action_probability:
            if len(ind.actions) < self.mio.max_actions and (len(ind.actions) == 1 or self.rng.random() < 0.5):
                keys = list(self.templates)
                t = self.templates[keys[self.rng.randrange(len(keys))]]
                ind.actions.insert(self.rng.randint(0, len(ind.actions)), sample_action(t, self.rng, ctx))
                return ind
            if len(ind.actions) > 1:
                del ind.actions[self.rng.randrange(len(ind.actions))]
                return ind
        slots = ind.slots()
        if not slots:
            return ind
        for _ in range(self.rng.randint(1, self.mio.max_mutations)):
            holder, key = slots[self.rng.randrange(len(slots))]
            if isinstance(holder, dict):
                holder[key].mutate_in_place(self.rng, ctx)
            else:
                holder.body.mutate_in_place(self.rng, ctx)
        return ind

    def sample_or_mutate(self) -> Individual:
        if self.queue:
            return self.queue.popleft()
        p = self.progress()
        f = self.mio.focus_at
        p_random = 0.0 if p >= f else self.mio.start_random * (1.0 - p / f)
        if self.rng.random() < p_random or not self.archive.populations:
            return self.sample()
        return self.mutate(self.archive.pick(self.rng))

    def population_size(self) -> int:
        p, f = self.progress(), self.mio.focus_at
        if p >= f:
            return 1
        return max(1, round(self.mio.population - (self.mio.population - 1) * p / f))

    # --- learning ----------------------------------------------------------

    def _enqueue(self, ind: Individual) -> None:
        if len(self.queue) < _QUEUE_CAP:
            self.queue.append(ind)

    def _learn_taint(self, ind: Individual, run: Execution) -> None:
        found, seen = [], set()
        for s in run.trace.taint_sightings:
            path = run.taint_paths.get(s.taint_id)
            if path is None or (path, s.spec.key) in seen:
                continue
            seen.add((path, s.spec.key))
            found.append((path, s.spec))
        if not found:
            return
        child = ind.copy()
        for path, spec in found:
            child.replace_gene(path, lambda g, p, s=spec: apply_to_gene(g, p, s, self.rng))
            self._specialize_template(ind, path, spec)
        self.stats["specializations"] += len(found)
        self._enqueue(child)

    def _specialize_template(self, ind: Individual, path: str, spec) -> None:
        m = _PATH_RE.match(path)
        if m:
            idx, loc, name, sub = int(m.group(1)), m.group(2), m.group(3), m.group(4) or ""
            key = ind.actions[idx].key
            t = self.templates.get(key)
            spec_in = next((i for i in t.inputs(loc) if i.name == name), None) if t else None
            if spec_in is None:
                return
            gene = apply_to_gene(spec_in.gene.copy(), sub, spec, self.rng)
            self.templates[key] = t.with_input_gene(loc, name, gene)
            if spec_in.discovered and spec.kind in _NUMERIC_KINDS:
                done = {(u["name"], u["endpoint"]) for u in self.stats["type_upgrades"]}
                if (name, key) not in done:
                    self.stats["type_upgrades"].append({"name": name, "endpoint": key, "location": loc,
                                                        "type": _NUMERIC_KINDS[spec.kind],
                                                        "evaluation": self.evaluations})
            return
        m = _BODY_RE.match(path)
        if m:
            key = ind.actions[int(m.group(1))].key
            t = self.templates.get(key)
            if t is not None and t.body is not None:
                self.templates[key] = replace(t, body=apply_to_gene(t.body.copy(), m.group(2) or "", spec, self.rng))

    def _learn_discoveries(self, ind: Individual, run: Execution) -> None:
        for d in run.trace.discoveries:
            if not (0 <= d.action < len(ind.actions)):
                continue
            key = ind.actions[d.action].key
            t = self.templates[key]
            new = expand(t, d)
            if new is t:
                continue
            self.templates[key] = new
            self.stats["discoveries"].append({"name": d.name, "location": d.location, "endpoint": key,
                                              "evaluation": self.evaluations})
            if d.location == "BodyField":
                continue
            loc = "query" if d.location == "QueryParam" else "header"
            spec = next(i for i in new.inputs(loc) if i.name == d.name)
            child = ind.copy()
            gene = G.sample(spec.gene, self.rng, self._ctx(self.features.taint_on_mutation))
            gene.present = True
            child.actions[d.action].inputs[loc][d.name] = gene
            self._enqueue(child)

    def _learn_dtos(self, ind: Individual, run: Execution) -> None:
        for s in run.trace.dto_sightings:
            if not (0 <= s.action < len(ind.actions)):
                continue
            key = ind.actions[s.action].key
            t = self.templates[key]
            new = discover_body_dto(t, s.shape)
            if new is t:
                continue
            self.templates[key] = new
            self.stats["dto_discoveries"].append({"dto": s.dto_name, "endpoint": key,
                                                  "evaluation": self.evaluations})
            child = ind.copy()
            child.actions[s.action].body = G.sample(new.body, self.rng, self._ctx(self.features.taint_on_sampling))
            self._enqueue(child)

    def _learn_sql(self, ind: Individual, run: Execution) -> None:
        if not run.trace.empty_selects:
            return
        p = self.features.violate_probability if self.features.jpa else 0.0
        new = react_to_empty_selects(run.trace.empty_selects, ind.sql, self.tables, self.effective,
                                     self.rng, p, self.pk)
        if not new:
            return
        child = ind.copy()
        child.sql.extend(new)
        self.stats["sql_inserts"] += len(new)
        self.stats["sql_violations"] += sum(1 for a in new if a.violation)
        self._enqueue(child)

    # --- main loop ---------------------------------------------------------

    def evaluate(self, ind: Individual) -> dict:
        inject = None
        if self.features.openapi and in_discovery_window(self.consumed(), self.budget.total,
                                                         self.features.discovery_window):
            inject = {"headers": {FAKE_HEADER: "42"}, "query": {FAKE_PARAM: "42"}}
            self.stats["injected_evaluations"] += 1
        run = execute_individual(self.harness, ind, self.templates, inject)
        self.evaluations += 1
        fit, faults = fitness_of(run, self.sut.id)
        for rec in faults:
            if rec.dedup_key not in self.faults:
                self.faults[rec.dedup_key] = {"record": rec, "evaluation": self.evaluations}
        tr = run.trace
        self.stats["sql_failures"] += run.sql_failures
        self.stats["sleep_calls"] += tr.sleep_calls
        self.stats["max_slept"] = max(self.stats["max_slept"], tr.slept)
        if self.features.tt and tr.slept > self.features.sleep_cap * tr.sleep_calls + 1e-9:
            self.stats["sleep_cap_exceeded"] += 1
        crashes = [r for r in run.responses if r.entity_crash]
        if crashes:
            self.stats["entity_crashes"] += len(crashes)
            if any(s.violation for s in ind.sql):
                self.stats["entity_crashes_with_violation"] += len(crashes)
        for t, h in fit.items():
            if h >= 1.0 and t not in self.first_covered:
                self.first_covered[t] = self.evaluations
        self.archive.update(ind, fit, self.evaluations, self.population_size())
        self._learn_taint(ind, run)
        self._learn_discoveries(ind, run)
        self._learn_dtos(ind, run)
        self._learn_sql(ind, run)
        return fit

    def run(self) -> SearchResult:
        self.started = time.monotonic()
        last_pop = self.mio.population
        try:
            while not self.done():
                ind = self.sample_or_mutate()
                self.evaluate(ind)
                n = self.population_size()
                if n < last_pop:
                    self.archive.shrink(n)
                    last_pop = n
        finally:
            self.harness.close()
        faults = {k: {"record": v["record"], "evaluation": v["evaluation"],
                      "individual": self.archive.covered[f"FAULT:{k}"].individual}
                  for k, v in self.faults.items()}
        lines = [t for t in self.archive.best if t.startswith("LINE:")]
        self.stats.update({
            "evaluations": self.evaluations,
            "targets_total": len(self.archive.best),
            "targets_covered": len(self.archive.covered),
            "lines_covered": sum(1 for t in lines if t in self.archive.covered),
            "distinct_faults": len(faults),
            "scheduled_executions": self.harness.scheduler.executions,
        })
        return SearchResult(self.sut.id, self.arm, self.seed, str(self.budget), self.archive, faults,
                            self.stats, dict(self.templates), self.first_covered)


def run(sut: SutDescriptor, arm: str, budget, seed: int, features: Optional[Features] = None,
        mio: MioConfig = MioConfig()) -> SearchResult:
    """Fuzz ``sut`` with configuration ``arm`` for ``budget`` (evaluations or ``Ns``)."""
    feats = features or arm_features(arm)
    return Search(sut, feats, Budget.parse(budget), seed, mio, arm).run()
