"""Fault classification, suite export and replay."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Optional

from .schema import ActionTemplate
from .trace import Response

SUITE_VERSION = "wbfuzz-suite/1"
REPORT_VERSION = "wbfuzz-report/1"

_QUOTED = re.compile(r"'[^']*'|\"[^\"]*\"")
_NUMBER = re.compile(r"-?\d+(\.\d+)?")
_JSON_TYPES = {
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "string": lambda v: isinstance(v, str),
    "boolean": lambda v: isinstance(v, bool),
    "array": lambda v: isinstance(v, list),
    "object": lambda v: isinstance(v, dict),
}


class SuiteError(ValueError):
    pass


@dataclass(frozen=True)
class FaultRecord:
    kind: str  # ServerError500 | SchemaMismatch | EntityParseCrash
    endpoint: str
    verb: str
    discriminator: str

    @property
    def dedup_key(self) -> str:
        return f"{self.verb} {self.endpoint}|{self.kind}|{self.discriminator}"


def discriminator(message: str) -> str:
    """First line of an error message with literal values masked."""
    first = (message or "").strip().splitlines()[0] if message and message.strip() else ""
    return _NUMBER.sub("N", _QUOTED.sub("'?'", first))


def _shape_problems(shape: dict, body) -> list[str]:
    if not isinstance(body, dict):
        return ["body is not an object"]
    out = []
    for name in shape["required"]:
        if name not in body:
            out.append(f"missing field {name}")
    for name, t in shape["fields"].items():
        check = _JSON_TYPES.get(t)
        if name in body and body[name] is not None and check is not None and not check(body[name]):
            out.append(f"field {name} is not {t}")
    return out


def classify(response: Response, template: Optional[ActionTemplate]) -> list[FaultRecord]:
    if template is None:
        return []
    verb, path = template.verb, template.path
    if response.status == 500:
        out = [FaultRecord("ServerError500", path, verb, discriminator(response.error or ""))]
        if response.entity_crash:
            out.append(FaultRecord("EntityParseCrash", path, verb, discriminator(response.error or "")))
        return out
    declared = template.responses
    if not declared:
        return []
    key = str(response.status)
    if key not in declared and "default" not in declared:
        return [FaultRecord("SchemaMismatch", path, verb, f"undeclared status {response.status}")]
    shape = declared.get(key)
    if shape is not None:
        problems = _shape_problems(shape, response.body)
        if problems:
            return [FaultRecord("SchemaMismatch", path, verb, f"{response.status}: {problems[0]}")]
    return []


# --- export --------------------------------------------------------------------


def _asserted_fields(template: Optional[ActionTemplate], status: int, body) -> dict:
    if template is None or not isinstance(body, dict):
        return {}
    shape = template.responses.get(str(status))
    if not shape:
        return {}
    return {k: body[k] for k in shape["fields"] if k in body}


def _request_json(req) -> dict:
    return {"verb": req.verb, "path": req.path, "query": dict(req.query),
            "headers": dict(req.headers), "body": req.body}


def build_suite(result, harness_factory, timestamps: bool = False) -> dict:
    """Canonical suite: one test per distinct covering individual, then one per fault.

    Each test is re-executed on a fresh harness to record the assertions.
    """
    from .engine import execute_individual

    chosen, seen = [], {}
    for target in sorted(result.archive.covered):
        entry = result.archive.covered[target]
        ident = id(entry.individual)
        if ident in seen:
            seen[ident]["targets"].append(target)
            continue
        item = {"individual": entry.individual, "targets": [target], "faults": []}
        seen[ident] = item
        chosen.append(item)
    for key in sorted(result.faults):
        f = result.faults[key]
        ident = id(f["individual"])
        if ident in seen:
            seen[ident]["faults"].append(key)
            continue
        item = {"individual": f["individual"], "targets": [], "faults": [key]}
        seen[ident] = item
        chosen.append(item)

    tests = []
    harness = harness_factory()
    for n, item in enumerate(chosen):
        ind = item["individual"].stripped()
        if not item["faults"]:
            # deliberately broken rows only earn a place in the suite by exposing a fault
            ind.sql = [a for a in ind.sql if a.violation is None]
        run = execute_individual(harness, ind, result.templates, inject=None)
        calls = []
        for (req, tmpl), resp in zip(run.requests, run.responses):
            calls.append({
                "request": _request_json(req),
                "expect": {"status": resp.status, "fields": _asserted_fields(tmpl, resp.status, resp.body)},
            })
        tests.append({
            "name": f"test_{n:04d}",
            "covers": item["targets"],
            "faults": item["faults"],
            "sql": [{"table": a.table, "row": a.row()} for a in ind.sql],
            "calls": calls,
        })
    harness.close()
    suite = {"version": SUITE_VERSION, "sut": result.sut, "arm": result.arm, "seed": result.seed,
             "budget": result.budget, "tests": tests}
    if timestamps:
        from datetime import datetime, timezone

        suite["generatedAt"] = datetime.now(timezone.utc).isoformat()
    return suite


def render_script(suite: dict) -> str:
    lines = [f"# {suite['version']} sut={suite['sut']} arm={suite['arm']} seed={suite['seed']}", ""]
    for t in suite["tests"]:
        lines.append(f"### {t['name']}")
        for s in t["sql"]:
            cols = ", ".join(f"{k}={json.dumps(v)}" for k, v in s["row"].items())
            lines.append(f"SQL INSERT {s['table']} {cols}")
        for c in t["calls"]:
            r = c["request"]
            url = r["path"]
            if r["query"]:
                from urllib.parse import urlencode

                url += "?" + urlencode(r["query"])
            lines.append(f"{r['verb']} {url}")
            for h, v in r["headers"].items():
                lines.append(f"{h}: {v}")
            if r["body"] is not None:
                lines.append(json.dumps(r["body"], sort_keys=True))
            lines.append(f"> expect {c['expect']['status']}"
                         + (f" {json.dumps(c['expect']['fields'], sort_keys=True)}" if c["expect"]["fields"] else ""))
        lines.append("")
    return "\n".join(lines)


def build_report(result, timestamps: bool = False) -> dict:
    report = {"version": REPORT_VERSION, "sut": result.sut, "arm": result.arm, "seed": result.seed,
              "budget": result.budget, "stats": result.stats,
              "faults": [{"key": k, "kind": f["record"].kind, "verb": f["record"].verb,
                          "endpoint": f["record"].endpoint, "discriminator": f["record"].discriminator}
                         for k, f in sorted(result.faults.items())],
              "covered": sorted(result.archive.covered)}
    if timestamps:
        from datetime import datetime, timezone

        report["generatedAt"] = datetime.now(timezone.utc).isoformat()
    return report


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def export(result, harness_factory, out_dir: str, timestamps: bool = False) -> dict:
    """Write suite.json, suite.http.txt and report.json into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    suite = build_suite(result, harness_factory, timestamps)
    report = build_report(result, timestamps)
    paths = {
        "suite.json": dump_json(suite),
        "suite.http.txt": render_script(suite),
        "report.json": dump_json(report),
    }
    for name, text in paths.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    return suite


# --- replay ----------------------------------------------------------------------


def replay(suite: dict, sut, features=None) -> list[dict]:
    """Re-run every test of ``suite`` against ``sut``; one verdict per test."""
    from .config import arm_features
    from .harness import Harness, Request

    if suite.get("version") != SUITE_VERSION:
        raise SuiteError(f"unsupported suite version {suite.get('version')!r}")
    if suite.get("sut") != sut.id:
        raise SuiteError(f"suite targets {suite.get('sut')!r}, refusing to replay against {sut.id!r}")
    harness = Harness(sut, features or arm_features("base"))
    verdicts = []
    try:
        for t in suite["tests"]:
            harness.reset_sut()
            failures = []
            for s in t["sql"]:
                try:
                    harness.db.insert(s["table"], s["row"])
                except Exception as e:
                    failures.append(f"sql insert into {s['table']} failed: {e}")
            for i, c in enumerate(t["calls"]):
                r = c["request"]
                resp = harness.execute(Request(r["verb"], r["path"], dict(r["query"]), dict(r["headers"]),
                                               r["body"]), i)
                exp = c["expect"]
                if resp.status != exp["status"]:
                    failures.append(f"call {i}: status {resp.status} != {exp['status']}")
                    continue
                for k, v in exp["fields"].items():
                    got = resp.body.get(k) if isinstance(resp.body, dict) else None
                    if got != v:
                        failures.append(f"call {i}: field {k} = {got!r} != {v!r}")
            verdicts.append({"name": t["name"], "passed": not failures, "failures": failures})
    finally:
        harness.close()
    return verdicts
