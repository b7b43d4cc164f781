"""Command-line entry point.

Exit status: 0 when every internal check passed, 1 on a verification
failure, 2 on a usage or parameter error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, privacy
from .combinatorics import binom, fmt_rational, parse_rational
from .errors import EnumerationBoundError, IllegalQueryError, ParameterError, PlanInvariantError, VerificationError
from .placement import build_placement, make_params, verify_storage
from .planner import build_query_plan, identity_permutations, stage_counts
from .runtime import random_messages, read_message_file, run_retrieval, zero_messages

SEED_ENV = "SCPIR_SEED"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _message_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))


def _messages(args, params):
    if args.messages == "random":
        return random_messages(params, _message_rng(args.seed))
    if args.messages == "zero":
        return zero_messages(params)
    if not args.message_file:
        raise ParameterError("--messages file requires --message-file PATH")
    return read_message_file(args.message_file, params)


def cmd_simulate(args) -> int:
    if args.sweep:
        if args.messages == "file":
            raise ParameterError("--sweep cannot be combined with --messages file (L depends on t)")
        runs = [(t, theta) for t in range(1, args.N + 1) for theta in range(1, args.K + 1)]
    else:
        runs = [(args.t, args.theta)]
    reports = []
    for t, theta in runs:
        params = make_params(args.N, args.K, t)
        report = run_retrieval(params, _messages(args, params), theta, args.seed)
        doc = report.to_json(include_bits=args.include_bits)
        doc["expected_cost"] = fmt_rational(analysis.theoretical_cost(t, args.K))
        reports.append(doc)
    _emit(reports if args.sweep else reports[0])
    return EXIT_OK


def cmd_tradeoff(args) -> int:
    if args.format == "csv":
        sys.stdout.write(analysis.curve_csv(args.N, args.K))
    else:
        _emit(analysis.curve_json(args.N, args.K))
    return EXIT_OK


def cmd_audit(args) -> int:
    params = make_params(args.N, args.K, args.t)
    if args.mode == "structural":
        report = privacy.structural_audit(params)
    elif args.mode == "exhaustive":
        try:
            report = privacy.exhaustive_audit(params, args.bound)
        except EnumerationBoundError as exc:
            print(f"refused: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        report = privacy.monte_carlo_audit(params, args.trials, args.seed, args.threshold)
    _emit(report.to_json())
    return EXIT_OK if report.passed else EXIT_FAIL


def counts_table(params) -> dict:
    """Closed-form per-stage counts next to the counts of actually built plans (every theta)."""
    placement = build_placement(params)
    stages = []
    for i in range(1, params.K + 1):
        total, desired = stage_counts(params, i)
        stages.append({"stage": i, "total_per_db": total, "desired_per_db": desired})
    N, K, t = params.N, params.K, params.t
    closed_total = binom(N - 1, t - 1) * sum(t**j for j in range(K))
    closed_desired = binom(N - 1, t - 1) * t ** (K - 1)
    mismatches = []
    for theta in range(1, K + 1):
        plan = build_query_plan(params, placement, theta, identity_permutations(params))
        for n in range(1, N + 1):
            census = plan.stage_census(n)
            for row in stages:
                built = census[row["stage"]]
                if built != (row["total_per_db"], row["desired_per_db"]):
                    mismatches.append({"theta": theta, "db": n, "stage": row["stage"], "built": list(built)})
    return {
        "params": params.as_dict(),
        "stages": stages,
        "total_per_db": sum(r["total_per_db"] for r in stages),
        "desired_per_db": sum(r["desired_per_db"] for r in stages),
        "closed_form_total_per_db": closed_total,
        "closed_form_desired_per_db": closed_desired,
        "built_plan_mismatches": mismatches,
    }


def _counts_ok(doc: dict) -> bool:
    return (
        not doc["built_plan_mismatches"]
        and doc["total_per_db"] == doc["closed_form_total_per_db"]
        and doc["desired_per_db"] == doc["closed_form_desired_per_db"]
    )


def _print_counts(doc: dict) -> None:
    p = doc["params"]
    print(f"N={p['N']} K={p['K']} t={p['t']}")
    print(f"{'stage':>5}  {'total/db':>10}  {'desired/db':>10}")
    for row in doc["stages"]:
        print(f"{row['stage']:>5}  {row['total_per_db']:>10}  {row['desired_per_db']:>10}")
    print(f"{'sum':>5}  {doc['total_per_db']:>10}  {doc['desired_per_db']:>10}")
    print(
        f"closed forms: total {doc['closed_form_total_per_db']}, desired {doc['closed_form_desired_per_db']}; "
        f"built plans {'agree' if not doc['built_plan_mismatches'] else 'DISAGREE'}"
    )


def cmd_counts(args) -> int:
    ts = range(1, args.N + 1) if args.sweep else [args.t]
    docs = [counts_table(make_params(args.N, args.K, t)) for t in ts]
    if args.format == "json":
        _emit(docs if args.sweep else docs[0])
    else:
        for doc in docs:
            _print_counts(doc)
    return EXIT_OK if all(_counts_ok(d) for d in docs) else EXIT_FAIL


def cmd_memshare(args) -> int:
    mu = parse_rational(args.mu)
    spec = analysis.memory_share(args.N, args.K, mu)
    rng = _message_rng(args.seed)
    messages = [rng.integers(0, 2, spec.L, dtype=np.uint8) for _ in range(args.K)]
    report = analysis.composite_retrieval(args.N, args.K, mu, messages, args.theta, args.seed)
    _emit({"memshare": spec.to_json(), "retrieval": report.to_json()})
    return EXIT_OK


def cmd_placement(args) -> int:
    params = make_params(args.N, args.K, args.t)
    placement = build_placement(params)
    _emit({"placement": placement.to_json(), "storage": verify_storage(placement).to_json()})
    return EXIT_OK


def _add_nk(p: argparse.ArgumentParser, with_t: bool = True) -> None:
    p.add_argument("-N", type=int, required=True, help="number of databases")
    p.add_argument("-K", type=int, required=True, help="number of messages")
    if with_t:
        p.add_argument("-t", type=int, required=True, help="storage level, mu = t/N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scpir", description="Storage-constrained PIR simulator and auditor")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one retrieval end to end")
    _add_nk(p, with_t=False)
    p.add_argument("-t", type=int, help="storage level (required unless --sweep)")
    p.add_argument("--theta", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--messages", choices=["random", "zero", "file"], default="random")
    p.add_argument("--message-file")
    p.add_argument("--sweep", action="store_true", help="all t and theta")
    p.add_argument("--include-bits", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tradeoff", help="storage/download tradeoff curve")
    _add_nk(p, with_t=False)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("audit", help="privacy audit")
    _add_nk(p)
    p.add_argument("--mode", choices=["structural", "exhaustive", "montecarlo"], default="structural")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--threshold", type=float, default=privacy.DEFAULT_TV_THRESHOLD)
    p.add_argument("--bound", type=int, default=privacy.DEFAULT_EXHAUSTIVE_BOUND)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("counts", help="per-stage download counts per database")
    _add_nk(p, with_t=False)
    p.add_argument("-t", type=int, help="storage level (required unless --sweep)")
    p.add_argument("--sweep", action="store_true", help="all t")
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("memshare", help="retrieval at a fractional storage point")
    _add_nk(p, with_t=False)
    p.add_argument("--mu", required=True, help="normalized storage as p/q")
    p.add_argument("--theta", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_memshare)

    p = sub.add_parser("placement", help="storage layout and accounting")
    _add_nk(p)
    p.set_defaults(func=cmd_placement)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        if getattr(args, "t", 0) is None and not getattr(args, "sweep", False):
            parser.error(f"{args.command}: -t is required unless --sweep is given")
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VerificationError, PlanInvariantError, IllegalQueryError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
