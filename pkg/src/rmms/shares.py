"""Exact share computation: MMS, MXS, and the residual maximin share.

All solvers enumerate subsets (2^m) and are intentionally exponential;
``core.MAX_EXACT_ITEMS`` bounds what they accept. Searches are anchored on
the lowest item index throughout, so every witness is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional

from .core import (
    MAX_EXACT_ITEMS,
    Bundle,
    CapExceededError,
    Instance,
    Valuation,
    bits_of,
    submasks,
)


@dataclass(frozen=True)
class ShareReport:
    """A computed share value plus an audit witness.

    For MMS and RMMS the witness is a partition attaining the value (for
    RMMS, the no-removals case). For MXS it is a witness allocation with the
    agent's bundle in her own slot.
    """

    share_kind: str
    value: int
    witness: Optional[tuple[Bundle, ...]]
    agent: Optional[int]
    n_effective: int


class ResidualCheck(NamedTuple):
    feasible: bool
    k: Optional[int] = None
    removed: Optional[Bundle] = None


def _check_caps(v: Valuation) -> None:
    if v.m > MAX_EXACT_ITEMS:
        raise CapExceededError(
            f"exact share solvers support at most {MAX_EXACT_ITEMS} items, got {v.m}"
        )


@lru_cache(maxsize=4096)
def _value_table(v: Valuation) -> tuple[int, ...]:
    """v(S) for every mask, built by one DP pass over submask order."""
    m = v.m
    if hasattr(v, "kind") and v.kind == "table":
        return tuple(v.values)
    table = [0] * (1 << m)
    for mask in range(1, 1 << m):
        low = mask & -mask
        table[mask] = table[mask ^ low] + v.values[low.bit_length() - 1]
    if v.kind == "capped_additive":
        cap = v.cap
        table = [val if val < cap else cap for val in table]
    return tuple(table)


@lru_cache(maxsize=4096)
def _candidate_values(v: Valuation, smask: int) -> tuple[int, ...]:
    """Distinct subset values of smask, ascending. Always contains 0."""
    table = _value_table(v)
    return tuple(sorted({table[sub] for sub in submasks(smask)}))


def acceptable_partition(
    v: Valuation, S: Bundle, q: int, t: int
) -> Optional[tuple[Bundle, ...]]:
    """A q-partition of S with every part of value >= t, or None.

    Empty parts appear only at t = 0, where the partition (S, {}, ..., {})
    is returned directly. Deterministic: each part is anchored on the lowest
    remaining item and candidate parts are scanned in ascending mask order.
    """
    if q < 1:
        raise ValueError(f"need at least one part, got q={q}")
    if t < 0:
        raise ValueError(f"threshold must be non-negative, got t={t}")
    _check_caps(v)
    if t == 0:
        return (S,) + (Bundle(),) * (q - 1)
    table = _value_table(v)
    failed: set[tuple[int, int]] = set()

    def solve(remaining: int, parts: int) -> Optional[list[int]]:
        if table[remaining] < t:
            return None  # monotone: no part inside `remaining` can reach t
        if parts == 1:
            return [remaining]
        if (remaining, parts) in failed:
            return None
        low = remaining & -remaining
        rest = remaining ^ low
        for sub in submasks(rest):
            part = low | sub
            if table[part] >= t:
                tail = solve(remaining ^ part, parts - 1)
                if tail is not None:
                    return [part] + tail
        failed.add((remaining, parts))
        return None

    parts = solve(S.mask, q)
    if parts is None:
        return None
    return tuple(Bundle(p) for p in parts)


def _canonical(parts: tuple[Bundle, ...]) -> tuple[Bundle, ...]:
    return tuple(sorted(parts))


@lru_cache(maxsize=65536)
def _mms(v: Valuation, smask: int, n: int) -> ShareReport:
    candidates = _candidate_values(v, smask)
    S = Bundle(smask)
    # Feasibility of an acceptable partition is downward closed in t.
    lo, hi = 0, len(candidates) - 1
    best = acceptable_partition(v, S, n, candidates[0])
    best_idx = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        parts = acceptable_partition(v, S, n, candidates[mid])
        if parts is not None:
            lo = mid
            best, best_idx = parts, mid
        else:
            hi = mid - 1
    return ShareReport("MMS", candidates[best_idx], _canonical(best), None, n)


def mms(v: Valuation, S: Bundle, n: int, agent: Optional[int] = None) -> ShareReport:
    """Maximin share of S under v for n agents, with a witness partition."""
    if n < 1:
        raise ValueError(f"need at least one agent, got n={n}")
    _check_caps(v)
    return replace(_mms(v, S.mask, n), agent=agent)


def is_residual_feasible(v: Valuation, S: Bundle, n: int, t: int) -> ResidualCheck:
    """Check residual feasibility of threshold t for (v, S, n).

    True iff for every k in [0, n) and every removed set R that splits into
    k disjoint bundles each of value < t, the remainder has an (n-k)-partition
    with all parts >= t. On failure, the offending (k, R) comes back as a
    counterexample.
    """
    if n < 1:
        raise ValueError(f"need at least one agent, got n={n}")
    if t < 0:
        raise ValueError(f"threshold must be non-negative, got t={t}")
    _check_caps(v)
    if acceptable_partition(v, S, n, t) is None:
        return ResidualCheck(False, 0, Bundle())
    if t == 0:
        # No bundle has value < 0, so no removals qualify for any k >= 1.
        return ResidualCheck(True)
    table = _value_table(v)
    split_memo: dict[tuple[int, int], bool] = {}

    def can_split_low(R: int, k: int) -> bool:
        # R partitions into at most k non-empty bundles, each of value < t.
        if R == 0:
            return True
        if k == 0:
            return False
        key = (R, k)
        cached = split_memo.get(key)
        if cached is not None:
            return cached
        low = R & -R
        rest = R ^ low
        result = False
        for sub in submasks(rest):
            part = low | sub
            if table[part] < t and can_split_low(R ^ part, k - 1):
                result = True
                break
        split_memo[key] = result
        return result

    for k in range(1, n):
        for R in submasks(S.mask):
            if R == 0:
                continue  # covered by the k = 0 check
            if not can_split_low(R, k):
                continue
            if acceptable_partition(v, Bundle(S.mask ^ R), n - k, t) is None:
                return ResidualCheck(False, k, Bundle(R))
    return ResidualCheck(True)


@lru_cache(maxsize=65536)
def _rmms(v: Valuation, smask: int, n: int) -> ShareReport:
    S = Bundle(smask)
    ceiling = _mms(v, smask, n).value
    candidates = [c for c in _candidate_values(v, smask) if c <= ceiling]
    # Descending scan; feasibility is not assumed monotone in t, but the
    # first feasible candidate in descending order is the global maximum.
    for t in reversed(candidates):
        if is_residual_feasible(v, S, n, t).feasible:
            witness = acceptable_partition(v, S, n, t)
            return ShareReport("RMMS", t, _canonical(witness), None, n)
    raise AssertionError("t = 0 is always residual feasible")


def rmms(v: Valuation, S: Bundle, n: int, agent: Optional[int] = None) -> ShareReport:
    """Residual maximin share: the largest residual-feasible threshold.

    The optimum is attained at a subset value because feasibility only
    depends on t through comparisons against subset values, so scanning the
    distinct subset values suffices.
    """
    if n < 1:
        raise ValueError(f"need at least one agent, got n={n}")
    _check_caps(v)
    return replace(_rmms(v, S.mask, n), agent=agent)


MXS_ASSIGNMENT_CAP = 2 ** 24


def mxs(inst: Instance, agent: int) -> ShareReport:
    """Minimum EFX share: cheapest own bundle in some full allocation in
    which the agent has no EFX envy toward anyone.

    Quantifies over full allocations, so with a single agent the only
    allocation hands her everything.
    """
    n, m = inst.n, inst.m
    if n ** m > MXS_ASSIGNMENT_CAP:
        raise CapExceededError(
            f"mxs enumeration cap exceeded: {n}^{m} > {MXS_ASSIGNMENT_CAP}"
        )
    v = inst.valuations[agent]
    _check_caps(v)
    table = _value_table(v)
    full = (1 << m) - 1
    if n == 1:
        return ShareReport("MXS", table[full], (Bundle(full),), agent, 1)

    def feasible(own: int) -> Optional[list[int]]:
        # Partition the complement into n-1 bundles none of which the agent
        # EFX-envies given her own bundle. "Not envied" is downward closed,
        # so empty parts are fine.
        threshold = table[own]

        def part_ok(part: int) -> bool:
            p = part
            while p:
                low = p & -p
                if table[part ^ low] > threshold:
                    return False
                p ^= low
            return True

        failed: set[tuple[int, int]] = set()

        def cover(mask: int, parts: int) -> Optional[list[int]]:
            if mask == 0:
                return [0] * parts
            if parts == 0 or (mask, parts) in failed:
                return None
            low = mask & -mask
            rest = mask ^ low
            for sub in submasks(rest):
                part = low | sub
                if part_ok(part):
                    tail = cover(mask ^ part, parts - 1)
                    if tail is not None:
                        return [part] + tail
            failed.add((mask, parts))
            return None

        return cover(full ^ own, n - 1)

    order = sorted(range(1 << m), key=lambda s: (table[s], s))
    for own in order:
        others = feasible(own)
        if others is not None:
            bundles = others[:agent] + [own] + others[agent:]
            return ShareReport(
                "MXS", table[own], tuple(Bundle(b) for b in bundles[:n]), agent, n
            )
    raise AssertionError("own = all items always admits an envy-free remainder")


def ratio_bound(n: int, valuation_class: str) -> Fraction:
    """Guaranteed RMMS/MMS lower bound ratio, as an exact rational."""
    if n < 1:
        raise ValueError(f"need at least one agent, got n={n}")
    if valuation_class == "subadditive":
        return Fraction(1, n)
    if valuation_class == "additive":
        if n == 1:
            return Fraction(1)
        if n % 2 == 1:
            return Fraction(2 * n, 3 * n - 1)
        return Fraction(2 * n - 2, 3 * n - 4)
    raise ValueError(f"unknown valuation class {valuation_class!r}")
