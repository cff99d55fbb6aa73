"""End-to-end acceptance gate.

Each test covers one numbered acceptance criterion and prints a single
PASS/FAIL line so the gate can be read off the pytest log directly. The
exhaustive corpus is every additive valuation with values in {0..3} over
m in {3, 4, 5} items, paired with every agent count in {2, 3}.
"""
import functools
import itertools
import random
import time

import pytest

from rmms.core import (
    Additive,
    Bundle,
    CappedAdditive,
    Instance,
    PartialAllocation,
    QueryLedger,
)
from rmms import algorithms, cli, fairness, oracle, shares

CORPUS_MS = (3, 4, 5)
CORPUS_NS = (2, 3)
CORPUS_MAX_VALUE = 3


def full(m):
    return Bundle((1 << m) - 1)


@functools.lru_cache(maxsize=1)
def corpus_pairs():
    pairs = []
    for m in CORPUS_MS:
        for vec in itertools.product(range(CORPUS_MAX_VALUE + 1), repeat=m):
            v = Additive(vec)
            for n in CORPUS_NS:
                pairs.append((v, n))
    return pairs


def identical_instance(v, n):
    return Instance(v.m, n, tuple(v for _ in range(n)))


def random_instance(rng, n_max=3, m_max=8, max_value=4, zero_heavy=False):
    n = rng.randint(1, n_max)
    m = rng.randint(1, m_max)
    hi = max_value if not zero_heavy else 1
    vals = tuple(
        Additive(tuple(rng.randint(0, hi) for _ in range(m)))
        for _ in range(n)
    )
    return Instance(m, n, vals)


def report(capsys, num, name, ok):
    with capsys.disabled():
        print(f"criterion {num:2d} [{name}]: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({name}) failed"


def test_criterion_01_oracle_equivalence(capsys):
    mismatches = 0
    for v, n in corpus_pairs():
        S = full(v.m)
        if shares.mms(v, S, n).value != oracle.brute_mms(v, S, n):
            mismatches += 1
        if shares.rmms(v, S, n).value != oracle.brute_rmms(v, S, n):
            mismatches += 1
        inst = identical_instance(v, n)
        if shares.mxs(inst, 0).value != oracle.brute_mxs(inst, 0):
            mismatches += 1
    report(capsys, 1, "exact solvers match brute oracles", mismatches == 0)


def test_criterion_02_share_chain(capsys):
    ok = True
    for v, n in corpus_pairs():
        S = full(v.m)
        r = shares.rmms(v, S, n).value
        ok &= shares.mxs(identical_instance(v, n), 0).value <= r
        ok &= r <= shares.mms(v, S, n).value
    rng = random.Random(201)
    for _ in range(500):
        inst = random_instance(rng)
        S = full(inst.m)
        for i, v in enumerate(inst.valuations):
            r = shares.rmms(v, S, inst.n).value
            ok &= shares.mxs(inst, i).value <= r
            ok &= r <= shares.mms(v, S, inst.n).value
    report(capsys, 2, "mxs <= rmms <= mms", ok)


def test_criterion_03_additive_ratio(capsys):
    ok = True
    for v, n in corpus_pairs():
        S = full(v.m)
        bound = shares.ratio_bound(n, "additive")
        r = shares.rmms(v, S, n).value
        mm = shares.mms(v, S, n).value
        ok &= r * bound.denominator >= bound.numerator * mm
    report(capsys, 3, "additive rmms/mms ratio bound", ok)


def test_criterion_04_subadditive_ratio(capsys):
    rng = random.Random(204)
    ok = True
    for _ in range(300):
        n = rng.randint(2, 4)
        m = rng.randint(2, 8)
        values = tuple(rng.randint(0, 6) for _ in range(m))
        cap = rng.randint(1, max(1, sum(values)))
        v = CappedAdditive(values, cap)
        S = full(m)
        mm = shares.mms(v, S, n).value
        ok &= shares.rmms(v, S, n).value * n >= mm
        inst = Instance(m, n, tuple(v for _ in range(n)))
        alloc, _ = algorithms.rmms_efx_partial(inst, QueryLedger())
        for b in alloc.bundles:
            ok &= v.value_of(b.mask) * n >= mm
    report(capsys, 4, "subadditive 1/n guarantees", ok)


def _efx_share_holds(inst):
    alloc, trace = algorithms.rmms_efx_partial(inst, QueryLedger())
    if not fairness.is_efx(inst, alloc)[0]:
        return False
    return all(
        inst.valuations[i].value_of(alloc.bundles[i].mask)
        >= trace.rmms_values[i]
        for i in range(inst.n)
    )


def test_criterion_05_efx_partial(capsys):
    ok = True
    for v, n in corpus_pairs():
        started = time.perf_counter()
        ok &= _efx_share_holds(identical_instance(v, n))
        ok &= time.perf_counter() - started < 5.0
    rng = random.Random(205)
    for trial in range(500):
        inst = random_instance(rng, m_max=6, zero_heavy=trial % 4 == 0)
        started = time.perf_counter()
        ok &= _efx_share_holds(inst)
        ok &= time.perf_counter() - started < 5.0
    report(capsys, 5, "efx partial meets each agent's rmms", ok)


def test_criterion_06_efl_full(capsys):
    rng = random.Random(206)
    ok = True
    for _ in range(500):
        inst = random_instance(rng, m_max=6)
        alloc, trace = algorithms.rmms_efl_full(inst, QueryLedger())
        ok &= alloc.is_full
        ok &= fairness.is_efl(inst, alloc)[0]
        for i in range(inst.n):
            v = inst.valuations[i]
            ok &= v.value_of(alloc.bundles[i].mask) >= trace.rmms_values[i]
            ok &= v.value_of(alloc.bundles[i].mask) >= v.value_of(
                trace.partial.bundles[i].mask
            )
    report(capsys, 6, "efl completion is full and dominates", ok)


def test_criterion_07_cycle_run_guarantees(capsys):
    rng = random.Random(207)
    ok = True
    for _ in range(500):
        inst = random_instance(rng, n_max=4, m_max=7)
        pool = 0
        bundles = [0] * inst.n
        for e in range(inst.m):
            slot = rng.randint(0, inst.n)
            if slot == 0:
                pool |= 1 << e
            else:
                bundles[slot - 1] |= 1 << e
        start = PartialAllocation(
            inst.m, Bundle(pool), tuple(Bundle(b) for b in bundles)
        )
        alloc, trace = algorithms.envy_cycle_run(inst, start, QueryLedger())
        ok &= not algorithms.verify_cycle_run_properties(
            inst, start, alloc, trace
        )
    report(capsys, 7, "cycle-run matching/dominance/last-item", ok)


def test_criterion_08_comparison_only_completion(capsys):
    rng = random.Random(208)
    ok = True
    done = 0
    while done < 200:
        inst = random_instance(rng, m_max=6)
        pool = 0
        bundles = [0] * inst.n
        for e in range(inst.m):
            slot = rng.randint(0, inst.n)
            if slot == 0:
                pool |= 1 << e
            else:
                bundles[slot - 1] |= 1 << e
        start = PartialAllocation(
            inst.m, Bundle(pool), tuple(Bundle(b) for b in bundles)
        )
        ledger = QueryLedger()
        algorithms.envy_cycle_run(inst, start, ledger)
        ok &= ledger.value_queries == 0
        ledger = QueryLedger()
        algorithms.preprocess_singletons(inst, start, ledger)
        ok &= ledger.value_queries == 0
        if not fairness.is_efl(inst, start)[0]:
            continue
        done += 1
        ledger = QueryLedger()
        algorithms.efl_complete(inst, start, ledger)
        ok &= ledger.value_queries == 0
    rng2 = random.Random(2080)
    for _ in range(200):
        inst = random_instance(rng2, m_max=6)
        _, trace = algorithms.rmms_efl_full(inst, QueryLedger())
        ok &= trace.completion_ledger.value_queries == 0
    report(capsys, 8, "completion uses comparison queries only", ok)


def test_criterion_09_share_properties(capsys):
    rng = random.Random(209)
    ok = True
    for _ in range(2000):
        m = rng.randint(1, 4)
        n = rng.randint(1, 3)
        v = Additive(tuple(rng.randint(0, 5) for _ in range(m)))
        v2 = Additive(tuple(rng.randint(0, 5) for _ in range(m)))
        ok &= oracle.check_self_maximizing(
            oracle.exact_rmms_value, v, v2, n
        )[0]
    for _ in range(500):
        m = rng.randint(1, 4)
        n = rng.randint(1, 3)
        base = [rng.randint(0, 5) for _ in range(m)]
        bumped = [b + rng.randint(0, 2) for b in base]
        hi, lo = Additive(tuple(bumped)), Additive(tuple(base))
        ok &= oracle.check_monotone_share(oracle.exact_rmms_value, hi, lo, n)
        eps = max(hb - b for hb, b in zip(bumped, base)) * m
        ok &= oracle.check_lipschitz_share(
            oracle.exact_rmms_value, hi, lo, n, max(eps, 0)
        )
    report(capsys, 9, "rmms is self-maximizing, monotone, lipschitz", ok)


def test_criterion_10_envy_hierarchy(capsys):
    ok = True
    order = {"none": 0, "EF": 1, "EFX": 2, "EFL": 3, "EF1": 4}
    for m in (1, 2, 3, 4):
        vecs = list(itertools.product(range(3), repeat=m))
        for va, vb in itertools.product(vecs, repeat=2):
            inst = Instance(m, 2, (Additive(va), Additive(vb)))
            partial = m <= 3
            for alloc in oracle.enumerate_allocations(inst, partial=partial):
                for i, j in ((0, 1), (1, 0)):
                    kind = fairness.envy_between(inst, alloc, i, j).kind
                    ok &= kind in order
                    if not alloc.bundles[j]:
                        ok &= kind == "none"
                efx = fairness.is_efx(inst, alloc)[0]
                efl = fairness.is_efl(inst, alloc)[0]
                ef1 = fairness.is_ef1(inst, alloc)[0]
                ef = fairness.is_ef(inst, alloc)[0]
                ok &= (not ef) or efx
                ok &= (not efx) or efl
                ok &= (not efl) or ef1
    report(capsys, 10, "envy notion hierarchy", ok)


def test_criterion_11_cli_determinism(capsys, tmp_path):
    ok = True
    gen_args = [
        "gen", "--agents", "3", "--items", "5", "--kind", "capped_additive",
        "--seed", "31", "--count", "3", "-o",
    ]
    a, b = tmp_path / "gen_a", tmp_path / "gen_b"
    ok &= cli.main(gen_args + [str(a)]) == 0
    ok &= cli.main(gen_args + [str(b)]) == 0
    for i in range(3):
        name = f"instance_31_{i}.json"
        ok &= (a / name).read_bytes() == (b / name).read_bytes()

    bench_args = [
        "bench", "--agents", "2", "--items", "5", "--trials", "4",
        "--seed", "31", "--algorithm", "rmms-efl", "-o",
    ]
    ca, cb = tmp_path / "a.csv", tmp_path / "b.csv"
    ok &= cli.main(bench_args + [str(ca)]) == 0
    ok &= cli.main(bench_args + [str(cb)]) == 0
    ok &= ca.read_bytes() == cb.read_bytes()

    sa, sb = tmp_path / "shares_a.json", tmp_path / "shares_b.json"
    inst_path = a / "instance_31_0.json"
    ok &= cli.main(["shares", str(inst_path), "-o", str(sa)]) == 0
    ok &= cli.main(["shares", str(inst_path), "-o", str(sb)]) == 0
    ok &= sa.read_bytes() == sb.read_bytes()
    report(capsys, 11, "cli outputs reproduce byte for byte", ok)
