"""Command line front end.

Verbs:
  gen     write random instances or a counterexample fixture family (JSONL)
  run     execute schemes against an instance file, write result rows (JSONL)
  verify  replay every stored transcript and re-check the welfare bounds
  report  aggregate result rows into a CSV ratio table

Exit status is 0 on success, 1 on a verification failure or bad input.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from ..pricing_schemes import SchemeParams
from .experiment import (
    ExperimentConfig,
    format_report,
    read_results,
    report_rows,
    run_experiment,
    verify_results,
    write_results,
)
from .instances import (
    CURVE_FAMILIES,
    FIXTURE_NAMES,
    VALUATION_FAMILIES,
    gen_fixture,
    gen_random,
    max_buyer_valuation,
    read_instances,
    write_instances,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="costmarket",
        description="Posted-price market simulator with production-cost curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate instances")
    gen.add_argument("--out", required=True, help="output instance file (JSONL)")
    gen.add_argument("--fixture", choices=FIXTURE_NAMES, help="build a fixture family instead of random instances")
    gen.add_argument("--sizes", default="1", help="comma-separated fixture sizes (with --fixture)")
    gen.add_argument("--n", type=int, default=2, help="items per random instance")
    gen.add_argument("--m", type=int, default=3, help="buyers per random instance")
    gen.add_argument("--curve", default="linear", choices=CURVE_FAMILIES)
    gen.add_argument("--valuation", default="additive", choices=VALUATION_FAMILIES)
    gen.add_argument("--vmax", type=int, default=64, help="value range cap for random buyers")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--trials", type=int, default=1, help="number of random instances")

    run = sub.add_parser("run", help="run schemes over an instance file")
    run.add_argument("--instances", required=True)
    run.add_argument("--out", required=True, help="output result file (JSONL)")
    run.add_argument(
        "--scheme",
        action="append",
        required=True,
        help="scheme kind (repeatable): at_cost, twice_index, chunked, smoothing, "
        "next_index, double_cost, profit_wrap:<inner>",
    )
    run.add_argument("--chunk-size", type=int, default=None)
    run.add_argument("--vmax", default=None, help="valuation upper bound (exact fraction; 'auto' derives it per instance)")
    run.add_argument("--rho", default="1", help="welfare-branch weight of the profit wrapper")
    run.add_argument("--mu", default="1", help="surcharge-branch weight of the profit wrapper")
    run.add_argument("--seed", type=int, default=0, help="master seed")
    run.add_argument("--trials", type=int, default=1, help="runs per (instance, scheme)")
    run.add_argument("--opt-budget", type=int, default=24, help="refuse exhaustive OPT above 2**bits assignments")
    run.add_argument("--no-opt", action="store_true", help="skip optimal-welfare computation")

    verify = sub.add_parser("verify", help="replay transcripts in a result file")
    verify.add_argument("--results", required=True)

    report = sub.add_parser("report", help="aggregate results into a CSV table")
    report.add_argument("--results", required=True)
    report.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return parser


def _cmd_gen(args) -> int:
    if args.fixture:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        instances = [gen_fixture(args.fixture, size) for size in sizes]
    else:
        instances = [
            gen_random(args.n, args.m, args.curve, args.valuation, seed=args.seed + t, vmax=args.vmax)
            for t in range(args.trials)
        ]
    write_instances(args.out, instances)
    print(f"wrote {len(instances)} instance(s) to {args.out}")
    return 0


def _scheme_params_for(args, kind: str, instance) -> SchemeParams:
    """Resolve per-run scheme params: flags win, then instance metadata."""
    meta = instance.meta
    chunk = args.chunk_size if args.chunk_size is not None else meta.get("chunk_size")
    if args.vmax == "auto":
        vmax = max(Fraction(1), max_buyer_valuation(instance.buyers))
    elif args.vmax is not None:
        vmax = Fraction(args.vmax)
    elif "vmax" in meta:
        vmax = Fraction(meta["vmax"])
    else:
        vmax = None
    return SchemeParams(
        kind=kind,
        chunk_size=chunk,
        vmax_bound=vmax,
        rho=Fraction(args.rho),
        mu=Fraction(args.mu),
    )


def _cmd_run(args) -> int:
    instances = read_instances(args.instances)
    if not instances:
        print(f"no instances in {args.instances}", file=sys.stderr)
        return 1
    results = []
    for instance in instances:
        schemes = tuple(_scheme_params_for(args, kind, instance) for kind in args.scheme)
        config = ExperimentConfig(
            instances=(instance,),
            schemes=schemes,
            trials=args.trials,
            master_seed=args.seed,
            opt_budget_bits=args.opt_budget,
            compute_opt=not args.no_opt,
        )
        results.extend(run_experiment(config))
    for cell, r in enumerate(results):
        object.__setattr__(r, "cell", cell)  # renumber across instances
    write_results(args.out, results)
    print(f"wrote {len(results)} result row(s) to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    results = read_results(args.results)
    problems = verify_results(results)
    for p in problems:
        print(p, file=sys.stderr)
    print(f"verified {len(results)} row(s): {len(results) - len(problems)} ok, {len(problems)} bad")
    return 1 if problems else 0


def _cmd_report(args) -> int:
    rows = report_rows(read_results(args.results))
    text = format_report(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} row(s) to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "report":
            return _cmd_report(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
