"""Command line: generate markets, run and sweep experiments, certify stability, ingest trips.

Exit codes: 0 success, 2 input error, 3 engine error, 4 property violation.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from . import harness, stability
from .harness import METHODS, ScenarioError, ScenarioSpec
from .model import InvalidMarket, validate_market

EXIT_OK, EXIT_INPUT, EXIT_ENGINE, EXIT_PROPERTY = 0, 2, 3, 4

SUMMARY_COLUMNS = (
    ("service_quality", "service_quality"),
    ("RoSQ", "rosq"),
    ("FoDSQ", "fodsq"),
    ("worker_utility", "worker_utility"),
    ("NI", "ni"),
    ("DIP", "dip"),
    ("ECIP", "ecip"),
    ("runtime_ms", None),
)


class InputError(Exception):
    pass


def _spec(args) -> ScenarioSpec:
    spec = harness.load_scenario(args.spec) if args.spec else ScenarioSpec(n_tasks=30, n_workers=100)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if getattr(args, "methods", None):
        changes["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    spec = replace(spec, **changes)
    problems = spec.problems()
    if problems:
        raise InputError("; ".join(problems))
    return spec


def summary_table(result: harness.ExperimentResult) -> str:
    head = ["method"] + [c for c, _ in SUMMARY_COLUMNS]
    rows = []
    for m, recs in result.records.items():
        row = [m]
        for _, key in SUMMARY_COLUMNS:
            if key is None:
                times = result.timing.get(m, [])
                row.append(f"{sum(times) / len(times):.3f}" if times else "-")
            else:
                row.append(f"{result.mean(m, key):.4f}")
        rows.append(row)
    widths = [max(len(str(r[k])) for r in [head] + rows) for k in range(len(head))]
    fmt = lambda r: "  ".join(str(c).ljust(w) if k == 0 else str(c).rjust(w)  # noqa: E731
                              for k, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([fmt(head)] + [fmt(r) for r in rows])


def _report_violations(violations: list[str]) -> int:
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    return EXIT_PROPERTY if violations else EXIT_OK


def cmd_gen(args) -> int:
    spec = _spec(args)
    market = harness.generate_market(spec, args.seed if args.seed is not None else spec.master_seed)
    paths = harness.write_market_bundle(market, args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_run(args) -> int:
    spec = _spec(args)
    result = harness.run_experiment(spec, jobs=args.jobs)
    harness.write_results(result, args.out, fmt=args.format)
    print(summary_table(result))
    return _report_violations(result.violations)


def cmd_sweep(args) -> int:
    spec = _spec(args)
    try:
        grid = [float(x) for x in args.grid.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"grid '{args.grid}' is not a comma-separated list of numbers") from None
    if not grid:
        raise InputError("sweep grid is empty")
    out = Path(args.out)
    violations = []
    for value, result in harness.sweep(spec, args.parameter, grid, jobs=args.jobs):
        label = f"{args.parameter}={value:g}"
        harness.write_results(result, out / label, fmt=args.format, extra={"sweep": {args.parameter: value}})
        print(f"# {label}")
        print(summary_table(result))
        violations += [f"{label}: {v}" for v in result.violations]
    return _report_violations(violations)


def cmd_stability(args) -> int:
    spec = _spec(args) if args.spec else None
    if args.instances < 0:
        raise InputError("--instances must be nonnegative")
    if not 1 <= args.max_tasks <= 8 or not 1 <= args.max_workers <= 10:
        raise InputError("search bounds are at most 8 tasks and 10 workers")
    res = stability.run_certification(args.instances, args.max_tasks, args.max_workers,
                                      seed=args.seed if args.seed is not None else 0, spec=spec)
    print(f"instances: {res.instances}  transactions: {res.transactions}  findings: {len(res.findings)}")
    for f in res.findings:
        print(f)
    return EXIT_OK if res.ok else EXIT_PROPERTY


def cmd_ingest(args) -> int:
    spec = _spec(args) if args.spec else ScenarioSpec(n_tasks=args.tasks, n_workers=0)
    if args.tasks is not None:
        spec = replace(spec, n_tasks=args.tasks)
    records = harness.read_trips_csv(args.trips)
    market = harness.ingest_trips(records, spec)
    validate_market(market, spec.config())
    for p in harness.write_market_bundle(market, args.out):
        print(p)
    return EXIT_OK


def cmd_version(args) -> int:
    try:
        print(version("artifact"))
    except PackageNotFoundError:
        print("unknown")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridmarket", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--spec", help="scenario file (key = value lines)")
        if seed:
            sp.add_argument("--seed", type=int, help="master seed, overrides the scenario")

    g = sub.add_parser("gen", help="write a market snapshot as CSV files")
    common(g)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    for name, fn in (("run", cmd_run), ("sweep", cmd_sweep)):
        r = sub.add_parser(name, help="run paired Monte Carlo trials" if name == "run" else
                           "run one experiment per grid value")
        common(r)
        r.add_argument("--out", required=True)
        r.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
        r.add_argument("--trials", type=int)
        r.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
        r.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "sweep":
            r.add_argument("--parameter", required=True, choices=sorted(harness.SWEEP_PARAMETERS))
            r.add_argument("--grid", required=True, help="comma-separated values")
        r.set_defaults(fn=fn)

    s = sub.add_parser("stability", help="certify the mechanisms on random small markets")
    common(s)
    s.add_argument("--instances", type=int, default=50)
    s.add_argument("--max-tasks", type=int, default=6)
    s.add_argument("--max-workers", type=int, default=10)
    s.set_defaults(fn=cmd_stability)

    i = sub.add_parser("ingest", help="build a market from a trip CSV")
    common(i, seed=False)
    i.add_argument("--trips", required=True)
    i.add_argument("--tasks", type=int, help="number of tasks (overrides the scenario)")
    i.add_argument("--out", required=True)
    i.set_defaults(fn=cmd_ingest)

    v = sub.add_parser("version", help="print the package version")
    v.set_defaults(fn=cmd_version)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "ingest" and not args.spec and args.tasks is None:
        print("error: ingest needs --tasks or a scenario with n_tasks", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.fn(args)
    except (InputError, ScenarioError, InvalidMarket, harness.EmptyInput, harness.NonFiniteDistance,
            FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except stability.BoundsExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # engine failure: report and use the documented code
        print(f"engine error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
