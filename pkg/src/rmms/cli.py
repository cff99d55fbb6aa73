"""Command-line entry point: gen, shares, allocate, check, verify, bench.

Exit codes: 0 success, 2 validation failure, 3 solver cap exceeded,
4 property check failed (check/verify in assert mode).

Instance generation uses numpy's Philox counter-based generator keyed on
(seed, instance index), so outputs are byte-identical across platforms and
reruns. Benchmark CSVs are deterministic; wall-clock timings are therefore
opt-in (--timings) because they can never reproduce byte-for-byte.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import (
    Bundle,
    CapExceededError,
    Instance,
    PartialAllocation,
    PreconditionError,
    QueryLedger,
    Additive,
    CappedAdditive,
    Table,
    allocation_from_json,
    allocation_to_json,
    dump_json,
    instance_from_json,
    instance_to_json,
    load_json,
    validate_instance,
)
from . import algorithms, fairness, oracle, shares

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAP = 3
EXIT_PROPERTY = 4


class PropertyCheckFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# instance generation

def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, index]))


def generate_valuation(rng: np.random.Generator, kind: str, m: int,
                       max_value: int, cap):
    values = tuple(int(x) for x in rng.integers(0, max_value + 1, size=m))
    if kind == "additive":
        return Additive(values)
    if kind == "capped_additive":
        if cap is None:
            total = max(1, sum(values))
            cap = int(rng.integers(1, total + 1))
        return CappedAdditive(values, cap)
    if kind == "table":
        # Additive base plus a random monotone bump, built in submask order.
        base = [0] * (1 << m)
        bump = [0] * (1 << m)
        for mask in range(1, 1 << m):
            low = mask & -mask
            base[mask] = base[mask ^ low] + values[low.bit_length() - 1]
            floor = 0
            sub = mask
            while sub:
                b = sub & -sub
                floor = max(floor, bump[mask ^ b])
                sub ^= b
            bump[mask] = floor + int(rng.integers(0, max_value + 1))
        return Table(tuple(b + p for b, p in zip(base, bump)))
    raise ValueError(f"unknown valuation kind {kind!r}")


def generate_instance(seed: int, index: int, n: int, m: int, kind: str,
                      max_value: int, cap=None) -> Instance:
    rng = _rng(seed, index)
    vals = tuple(
        generate_valuation(rng, kind, m, max_value, cap) for _ in range(n)
    )
    inst = Instance(m=m, n=n, valuations=vals)
    report = validate_instance(inst)
    assert report.ok, f"generator produced an invalid instance: {report.violations}"
    return inst


def cmd_gen(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for idx in range(args.count):
        inst = generate_instance(
            args.seed, idx, args.agents, args.items, args.kind,
            args.max_value, args.cap,
        )
        dump_json(instance_to_json(inst), out / f"instance_{args.seed}_{idx}.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# shares / check / allocate / verify

def _load_instance(path: str) -> Instance:
    inst = instance_from_json(load_json(path), validate=False)
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError(
            f"invalid instance {path}: {report.violations[0]['problem']}"
        )
    return inst


def cmd_shares(args) -> int:
    inst = _load_instance(args.instance)
    kinds = ("mms", "mxs", "rmms") if args.share == "all" else (args.share,)
    results = []
    for i in range(inst.n):
        for kind in kinds:
            if kind == "mxs":
                report = shares.mxs(inst, i)
            else:
                fn = shares.mms if kind == "mms" else shares.rmms
                report = fn(inst.valuations[i], inst.all_items, inst.n, agent=i)
            results.append(
                {
                    "agent": i,
                    "share": kind,
                    "value": report.value,
                    "witness": [b.items() for b in report.witness]
                    if report.witness is not None
                    else None,
                }
            )
    _emit(results, args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    inst = _load_instance(args.instance)
    alloc = allocation_from_json(load_json(args.allocation), inst.m)
    cert = fairness.certificate(inst, alloc)
    _emit(cert, args.output)
    if args.require and not cert[args.require]:
        raise PropertyCheckFailed(f"allocation is not {args.require.upper()}")
    return EXIT_OK


def cmd_allocate(args) -> int:
    inst = _load_instance(args.instance)
    ledger = QueryLedger()
    if args.start:
        start = allocation_from_json(load_json(args.start), inst.m)
    else:
        start = PartialAllocation.empty(inst.m, inst.n)
    if args.algorithm == "envy-cycle":
        alloc, trace = algorithms.envy_cycle_run(inst, start, ledger)
    elif args.algorithm == "rmms-efx":
        alloc, trace = algorithms.rmms_efx_partial(inst, ledger)
    else:
        alloc, trace = algorithms.rmms_efl_full(inst, ledger)
    _emit(allocation_to_json(alloc), args.output)
    if args.trace:
        dump_json(_trace_json(trace), args.trace)
    return EXIT_OK


def _trace_json(trace: algorithms.RunTrace) -> dict:
    out = {
        "rounds": trace.rounds,
        "matching": trace.matching,
        "last_added": trace.last_added,
        "value_queries": trace.ledger.value_queries if trace.ledger else None,
        "comparison_queries": trace.ledger.comparison_queries
        if trace.ledger
        else None,
    }
    if trace.rmms_values is not None:
        out["rmms_values"] = trace.rmms_values
    if trace.completion_ledger is not None:
        out["completion_value_queries"] = trace.completion_ledger.value_queries
        out["completion_comparison_queries"] = (
            trace.completion_ledger.comparison_queries
        )
    return out


def cmd_verify(args) -> int:
    corpus = [_load_instance(path) for path in args.instances]
    checks = args.checks.split(",") if args.checks else None
    report = oracle.verify_corpus(corpus, checks)
    _emit(report, args.output)
    if args.assert_mode:
        failed = sum(c["failed"] for c in report["checks"])
        if failed:
            raise PropertyCheckFailed(f"{failed} corpus check(s) failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench

BENCH_COLUMNS = [
    "seed", "index", "n", "m", "kind", "algorithm", "status",
    "mms", "mxs", "rmms", "ratio_num", "ratio_den", "ratio_decimal",
    "efx", "efl", "ef1", "value_queries", "comparison_queries",
]


def _bench_one(task) -> dict:
    seed, index, n, m, kind, max_value, cap, algorithm, timings = task
    row = {
        "seed": seed, "index": index, "n": n, "m": m, "kind": kind,
        "algorithm": algorithm,
    }
    inst = generate_instance(seed, index, n, m, kind, max_value, cap)
    ledger = QueryLedger()
    started = time.perf_counter()
    try:
        mms_vals = [
            shares.mms(v, inst.all_items, n).value for v in inst.valuations
        ]
        rmms_vals = [
            shares.rmms(v, inst.all_items, n).value for v in inst.valuations
        ]
        mxs_vals = [shares.mxs(inst, i).value for i in range(n)]
        if algorithm == "rmms-efx":
            alloc, _ = algorithms.rmms_efx_partial(inst, ledger)
        elif algorithm == "rmms-efl":
            alloc, trace = algorithms.rmms_efl_full(inst, ledger)
            ledger.value_queries += trace.completion_ledger.value_queries
            ledger.comparison_queries += trace.completion_ledger.comparison_queries
        else:
            alloc, _ = algorithms.envy_cycle_run(
                inst, PartialAllocation.empty(m, n), ledger
            )
    except CapExceededError:
        row["status"] = "skipped"
        for col in BENCH_COLUMNS:
            row.setdefault(col, "")
        return row
    elapsed_us = int((time.perf_counter() - started) * 1e6)
    ratios = [
        Fraction(r, mm) for r, mm in zip(rmms_vals, mms_vals) if mm > 0
    ]
    ratio = min(ratios) if ratios else None
    row.update(
        {
            "status": "ok",
            "mms": "|".join(map(str, mms_vals)),
            "mxs": "|".join(map(str, mxs_vals)),
            "rmms": "|".join(map(str, rmms_vals)),
            "ratio_num": ratio.numerator if ratio is not None else "",
            "ratio_den": ratio.denominator if ratio is not None else "",
            "ratio_decimal": f"{float(ratio):.6f}" if ratio is not None else "",
            "efx": int(fairness.is_efx(inst, alloc)[0]),
            "efl": int(fairness.is_efl(inst, alloc)[0]),
            "ef1": int(fairness.is_ef1(inst, alloc)[0]),
            "value_queries": ledger.value_queries,
            "comparison_queries": ledger.comparison_queries,
        }
    )
    if timings:
        row["wall_time_us"] = elapsed_us
    return row


def cmd_bench(args) -> int:
    columns = list(BENCH_COLUMNS)
    if args.timings:
        columns.append("wall_time_us")
    tasks = [
        (args.seed, idx, args.agents, args.items, args.kind,
         args.max_value, args.cap, args.algorithm, args.timings)
        for idx in range(args.trials)
    ]
    if args.jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(task) for task in tasks]

    with open(args.output, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:  # already in (seed, index) order
            writer.writerow(row)

    if args.summary:
        ok_rows = [r for r in rows if r.get("status") == "ok"]
        ratios = [
            Fraction(int(r["ratio_num"]), int(r["ratio_den"]))
            for r in ok_rows
            if r.get("ratio_num") != ""
        ]
        observed = min(ratios) if ratios else None
        if args.kind == "additive":
            bound = shares.ratio_bound(args.agents, "additive")
        elif args.kind == "capped_additive":
            bound = shares.ratio_bound(args.agents, "subadditive")
        else:
            bound = None
        summary = {
            "trials": args.trials,
            "completed": len(ok_rows),
            "skipped": len(rows) - len(ok_rows),
            "min_rmms_over_mms": {
                "num": observed.numerator,
                "den": observed.denominator,
                "decimal": f"{float(observed):.6f}",
            }
            if observed is not None
            else None,
            "guaranteed_bound": {
                "num": bound.numerator,
                "den": bound.denominator,
                "decimal": f"{float(bound):.6f}",
            }
            if bound is not None
            else None,
        }
        dump_json(summary, args.summary)
    return EXIT_OK


# ---------------------------------------------------------------------------

def _emit(obj, output) -> None:
    if output:
        dump_json(obj, output)
    else:
        json.dump(obj, sys.stdout, indent=2)
        sys.stdout.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmms",
        description="Exact fair-division toolkit for indivisible goods, "
        "centered on the residual maximin share.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate instance files")
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--kind", choices=["additive", "capped_additive", "table"],
                   default="additive")
    p.add_argument("--max-value", type=int, default=10)
    p.add_argument("--cap", type=int, default=None,
                   help="cap for capped_additive (random if omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("shares", help="compute per-agent share values")
    p.add_argument("instance")
    p.add_argument("--share", choices=["mms", "mxs", "rmms", "all"],
                   default="all")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_shares)

    p = sub.add_parser("allocate", help="run an allocation algorithm")
    p.add_argument("instance")
    p.add_argument("--algorithm",
                   choices=["envy-cycle", "rmms-efx", "rmms-efl"],
                   default="rmms-efl")
    p.add_argument("--start", default=None,
                   help="starting partial allocation (envy-cycle only)")
    p.add_argument("--trace", default=None, help="write trace JSON here")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("check", help="emit a fairness certificate")
    p.add_argument("instance")
    p.add_argument("allocation")
    p.add_argument("--require", choices=["ef1", "efl", "efx", "ef"],
                   default=None, help="exit 4 unless the property holds")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="run oracle checks over instances")
    p.add_argument("instances", nargs="+")
    p.add_argument("--checks", default=None,
                   help=f"comma list from {','.join(oracle.CHECK_NAMES)}")
    p.add_argument("--assert", dest="assert_mode", action="store_true",
                   help="exit 4 on any failed check")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="batch experiment harness")
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--kind", choices=["additive", "capped_additive", "table"],
                   default="additive")
    p.add_argument("--max-value", type=int, default=10)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm",
                   choices=["envy-cycle", "rmms-efx", "rmms-efl"],
                   default="rmms-efl")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timings", action="store_true",
                   help="add wall-clock column (breaks byte-identical reruns)")
    p.add_argument("-o", "--output", required=True, help="CSV path")
    p.add_argument("--summary", default=None, help="summary JSON path")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except PropertyCheckFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except (ValueError, PreconditionError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
