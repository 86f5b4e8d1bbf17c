"""Command-line front door: run, list-suts, replay, report."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from .config import ARMS, ConfigError, arm_features
from .engine import Budget, BudgetError, Search
from .fixtures import REGISTRY, UnknownSutError, get_sut
from .harness import Harness
from .oracle import SuiteError, export, replay

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2

_OVERRIDES = {
    # flag -> (Features field, type)
    "--base": ("base", float),
    "--taos-probability": ("taos_probability", float),
    "--taint-mutation-probability": ("taint_mutation_probability", float),
    "--sleep-cap": ("sleep_cap", float),
    "--discovery-window": ("discovery_window", float),
    "--discovery-cap": ("discovery_cap", int),
    "--violate-probability": ("violate_probability", float),
    "--heuristic-size-cap": ("heuristic_size_cap", int),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wbfuzz", description="Coverage-guided search-based REST API fuzzer")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="fuzz one embedded service")
    r.add_argument("--sut", required=True)
    r.add_argument("--arm", required=True, choices=ARMS)
    r.add_argument("--budget", required=True, help="N evaluations, or Ns/Nm/Nh wall clock")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default=None, help="output directory (default: $WBFUZZ_OUT)")
    r.add_argument("--no-timestamps", action="store_true", help="omit generation time from outputs")
    for flag, (_, typ) in _OVERRIDES.items():
        r.add_argument(flag, type=typ, default=None)

    sub.add_parser("list-suts", help="list embedded services")

    rp = sub.add_parser("replay", help="replay an exported suite")
    rp.add_argument("--suite", required=True)
    rp.add_argument("--sut", required=True)

    rep = sub.add_parser("report", help="summarize a run directory")
    rep.add_argument("--in", dest="indir", required=True)
    return p


def _summary(result, elapsed: float) -> str:
    s = result.stats
    lines = [
        f"sut={result.sut} arm={result.arm} seed={result.seed} budget={result.budget}",
        f"evaluations      {s['evaluations']}",
        f"targets covered  {s['targets_covered']}/{s['targets_total']}",
        f"lines covered    {s['lines_covered']}",
        f"distinct faults  {s['distinct_faults']}",
        f"wall time        {elapsed:.1f}s",
    ]
    for d in s["discoveries"]:
        lines.append(f"discovered {d['location']} {d['name']} on {d['endpoint']} at evaluation {d['evaluation']}")
    for u in s["type_upgrades"]:
        lines.append(f"inferred {u['name']} as {u['type']} at evaluation {u['evaluation']}")
    validate = sorted(t for t in result.archive.covered if t.startswith("VALIDATE_"))
    for t in validate:
        lines.append(f"covered {t}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    out = args.out or os.environ.get("WBFUZZ_OUT")
    if not out:
        print("wbfuzz: --out not given and WBFUZZ_OUT unset", file=sys.stderr)
        return EXIT_USAGE
    overrides = {field: getattr(args, flag[2:].replace("-", "_"))
                 for flag, (field, _) in _OVERRIDES.items()
                 if getattr(args, flag[2:].replace("-", "_")) is not None}
    try:
        sut = get_sut(args.sut)
        features = arm_features(args.arm, **overrides)
        budget = Budget.parse(args.budget)
    except (UnknownSutError, ConfigError, BudgetError) as e:
        print(f"wbfuzz: {e}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.monotonic()
    result = Search(sut, features, budget, args.seed, arm=args.arm).run()
    try:
        export(result, lambda: Harness(get_sut(args.sut), features), out, timestamps=not args.no_timestamps)
    except OSError as e:
        print(f"wbfuzz: cannot write outputs: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(_summary(result, time.monotonic() - t0))
    print(f"outputs in {out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        sut = get_sut(args.sut)
    except UnknownSutError as e:
        print(f"wbfuzz: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.suite, encoding="utf-8") as fh:
            suite = json.load(fh)
        verdicts = replay(suite, sut, arm_features(suite.get("arm", "base")))
    except (OSError, json.JSONDecodeError, SuiteError, ConfigError) as e:
        print(f"wbfuzz: {e}", file=sys.stderr)
        return EXIT_ERROR
    failed = [v for v in verdicts if not v["passed"]]
    for v in failed:
        for f in v["failures"]:
            print(f"FAIL {v['name']}: {f}")
    print(f"{len(verdicts) - len(failed)}/{len(verdicts)} tests passed")
    return EXIT_OK if not failed else EXIT_ERROR


def cmd_report(args) -> int:
    path = os.path.join(args.indir, "report.json")
    try:
        with open(path, encoding="utf-8") as fh:
            rep = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"wbfuzz: {e}", file=sys.stderr)
        return EXIT_ERROR
    s = rep["stats"]
    print(f"sut={rep['sut']} arm={rep['arm']} seed={rep['seed']} budget={rep['budget']}")
    print(f"evaluations {s['evaluations']}, targets covered {s['targets_covered']}/{s['targets_total']}, "
          f"lines {s['lines_covered']}, faults {s['distinct_faults']}")
    for f in rep["faults"]:
        print(f"  {f['kind']:<16} {f['verb']} {f['endpoint']}  {f['discriminator']}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-suts":
        for name, factory in REGISTRY.items():
            print(f"{name:<14} {factory().description}")
        return EXIT_OK
    return {"run": cmd_run, "replay": cmd_replay, "report": cmd_report}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
