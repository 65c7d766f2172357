"""Command-line entry point: ``fuzz``, ``distance`` and ``oracle`` subcommands."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from nosqlfuzz import __version__
from nosqlfuzz.distance import DistanceConfig, format_distance, hd_filter
from nosqlfuzz.filters import parse_filter
from nosqlfuzz.oracle import run_oracle
from nosqlfuzz.report import RunReport, build_report, dumps_report
from nosqlfuzz.schema import SynthesisConfig
from nosqlfuzz.search.mio import SearchConfig, fuzz
from nosqlfuzz.store import DatabaseState
from nosqlfuzz.sut.executor import execute
from nosqlfuzz.sut.scenario import Scenario, resolve_scenario
from nosqlfuzz.sut.testcase import TestCase
from nosqlfuzz.values import loads_document

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _non_negative_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError("must be a positive finite number")
    return v


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nosqlfuzz", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fz = sub.add_parser("fuzz", help="search for tests covering a scenario's targets")
    fz.add_argument("--scenario", required=True, help="bundled scenario name or path to a scenario JSON file")
    fz.add_argument("--budget", type=_positive_int, default=10_000, help="maximum number of evaluations")
    fz.add_argument("--seed", type=int, default=0)
    fz.add_argument("--out", type=Path, help="report file (default: stdout)")
    fz.add_argument("--k", type=_positive_float, default=1.0, help="distance constant K")
    fz.add_argument("--p-insertion", type=_probability, default=0.5)
    fz.add_argument("--conform-probability", type=_probability, default=0.9)
    fz.add_argument("--no-nosql-heuristic", action="store_true",
                    help="do not score empty finds against the stored documents")
    fz.add_argument("--no-insertion", action="store_true", help="never insert documents directly")
    fz.add_argument("--dump-db", type=Path, metavar="FILE",
                    help="write the store contents after each suite test to FILE")
    fz.add_argument("--repeat", type=_positive_int, default=1,
                    help="run seeds seed..seed+N-1 one after another")
    fz.add_argument("--report-dir", type=Path, metavar="DIR",
                    help="also write coverage.csv and coverage.png to DIR")
    fz.set_defaults(func=cmd_fuzz)

    ds = sub.add_parser("distance", help="distance of a document to a filter")
    ds.add_argument("--filter", required=True, type=Path)
    ds.add_argument("--doc", required=True, type=Path)
    ds.add_argument("--k", type=_positive_float, default=1.0)
    ds.set_defaults(func=cmd_distance)

    orc = sub.add_parser("oracle", help="cross-check distances against the matcher")
    orc.add_argument("--trials", type=_non_negative_int, default=100_000)
    orc.add_argument("--seed", type=int, default=1)
    orc.add_argument("--max-report", type=_positive_int, default=20,
                     help="stop after this many counterexamples")
    orc.set_defaults(func=cmd_oracle)
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _search_config(args: argparse.Namespace, seed: int) -> SearchConfig:
    return SearchConfig(
        budget=args.budget,
        seed=seed,
        p_insertion=args.p_insertion,
        nosql_heuristic=not args.no_nosql_heuristic,
        insertion=not args.no_insertion,
        distance=DistanceConfig(K=args.k),
        synthesis=SynthesisConfig(conform_probability=args.conform_probability),
    )


def run_once(scenario: Scenario, cfg: SearchConfig) -> RunReport:
    history: List[tuple] = []
    last = [0]

    def hook(evaluations: int, covered: int) -> None:
        if covered != last[0]:
            last[0] = covered
            history.append((evaluations, covered))

    start = time.perf_counter()
    result = fuzz(scenario, cfg, on_evaluation=hook)
    return build_report(scenario.name, cfg, result, time.perf_counter() - start, history)


def _dump_suite(scenario: Scenario, report: RunReport, cfg: SearchConfig) -> list:
    out = []
    state = DatabaseState(cfg.seed)
    for i, raw in enumerate(report.suite):
        execute(scenario, TestCase.from_json(raw), state, cfg.distance,
                nosql_heuristic=cfg.nosql_heuristic)
        out.append({"test": i, "collections": state.dump()})
    return out


def cmd_fuzz(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    reports, dumps = [], []
    for r in range(args.repeat):
        cfg = _search_config(args, args.seed + r)
        report = run_once(scenario, cfg)
        reports.append(report)
        if args.dump_db is not None:
            dumps.append({"seed": cfg.seed, "tests": _dump_suite(scenario, report, cfg)})

    payload = reports[0].to_json() if len(reports) == 1 else [r.to_json() for r in reports]
    text = dumps_report(payload)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    if args.dump_db is not None:
        args.dump_db.write_text(dumps_report(dumps[0] if len(dumps) == 1 else dumps))
    if args.report_dir is not None:
        from nosqlfuzz.plotting import write_report_dir

        write_report_dir(reports, args.report_dir)
    return EXIT_OK


def cmd_distance(args: argparse.Namespace) -> int:
    f = parse_filter(_read(args.filter))
    d = loads_document(_read(args.doc))
    print(format_distance(hd_filter(d, f, DistanceConfig(K=args.k))))
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    found = run_oracle(args.trials, args.seed, limit=args.max_report)
    for c in found:
        print(json.dumps(c.to_json(), separators=(",", ":")))
    print(f"oracle: {args.trials} trials, seed {args.seed}, {len(found)} violation(s)", file=sys.stderr)
    return EXIT_VIOLATION if found else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:  # scenario, filter and value errors are ValueErrors
        print(f"nosqlfuzz {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
