"""Allocation procedures: envy-cycle elimination, EFL completion, and the
round-based procedure producing an EFX partial allocation in which every
agent meets her residual maximin share.

Envy-cycle elimination and the completion pipeline touch valuations only
through comparison queries; the share-threshold algorithm needs actual share
values and therefore uses value queries as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Bundle,
    Instance,
    PartialAllocation,
    PreconditionError,
    QueryLedger,
    bits_of,
    compare_query,
    submasks,
    value_query,
)
from . import fairness
from . import shares


@dataclass
class RunTrace:
    """Audit record of one algorithm run.

    ``matching`` maps each final bundle to the index of the start bundle it
    contains (the permutation realized by bundle rotations); ``last_added``
    holds, per final bundle, the last item granted to it, or None if the
    bundle never grew.
    """

    rounds: list = field(default_factory=list)
    matching: Optional[list[int]] = None
    last_added: Optional[list[Optional[int]]] = None
    ledger: Optional[QueryLedger] = None
    partial: Optional[PartialAllocation] = None
    completion_ledger: Optional[QueryLedger] = None
    rmms_values: Optional[list[int]] = None


def envy_cycle_run(
    inst: Instance, start: PartialAllocation, ledger: QueryLedger
) -> tuple[PartialAllocation, RunTrace]:
    """Run envy-cycle elimination from ``start`` until the pool is empty.

    While pool items remain: if no agent is envied by nobody, rotate bundles
    along an envy cycle (each agent in the cycle takes the bundle she envies);
    then grant the lowest-index un-envied agent the lowest-index pool item.
    Uses only comparison queries.
    """
    if start.m != inst.m or start.n != inst.n:
        raise ValueError("start allocation does not match instance shape")
    n = inst.n
    # Bundle records move between agents whole, carrying provenance and the
    # last item granted to them.
    records = [
        {"mask": b.mask, "origin": idx, "last": None}
        for idx, b in enumerate(start.bundles)
    ]
    pool = start.pool.mask
    trace = RunTrace(ledger=ledger)

    def envies(i: int, j: int) -> bool:
        return not compare_query(
            inst.valuations[i],
            Bundle(records[i]["mask"]),
            Bundle(records[j]["mask"]),
            ledger,
        )

    while pool:
        envy = [[i != j and envies(i, j) for j in range(n)] for i in range(n)]
        unenvied = next(
            (j for j in range(n) if not any(envy[i][j] for i in range(n))), None
        )
        while unenvied is None:
            # Every agent is envied, so walking enviers backwards must loop.
            seen: dict[int, int] = {}
            cur = 0
            path = []
            while cur not in seen:
                seen[cur] = len(path)
                path.append(cur)
                cur = next(i for i in range(n) if envy[i][cur])
            cycle = path[seen[cur]:]
            # path[k+1] is an envier of path[k], so each cycle member takes
            # the bundle of its successor's... the bundle it envies.
            old = [records[a] for a in cycle]
            for idx, agent in enumerate(cycle):
                if idx + 1 < len(cycle):
                    records[cycle[idx + 1]] = old[idx]
                else:
                    records[cycle[0]] = old[idx]
            trace.rounds.append({"kind": "rotate", "agents": list(cycle)})
            envy = [[i != j and envies(i, j) for j in range(n)] for i in range(n)]
            unenvied = next(
                (j for j in range(n) if not any(envy[i][j] for i in range(n))), None
            )
        item = (pool & -pool).bit_length() - 1
        pool ^= 1 << item
        records[unenvied]["mask"] |= 1 << item
        records[unenvied]["last"] = item
        trace.rounds.append({"kind": "grant", "agent": unenvied, "item": item})

    result = PartialAllocation(
        inst.m, Bundle(0), tuple(Bundle(r["mask"]) for r in records)
    )
    trace.matching = [r["origin"] for r in records]
    trace.last_added = [r["last"] for r in records]
    return result, trace


def verify_cycle_run_properties(
    inst: Instance,
    start: PartialAllocation,
    result: PartialAllocation,
    trace: RunTrace,
) -> list[str]:
    """Check the three guarantees of envy-cycle elimination; return failures.

    1. matching: the start bundle matched to each agent is contained in her
       final bundle; 2. every agent's final value weakly dominates her start
       value; 3. a grown bundle minus its last item is envied by nobody.
    """
    failures = []
    pi = trace.matching
    if sorted(pi) != list(range(inst.n)):
        failures.append(f"matching {pi} is not a permutation")
        return failures
    for i in range(inst.n):
        if not start.bundles[pi[i]].issubset(result.bundles[i]):
            failures.append(f"start bundle {pi[i]} not contained in final bundle {i}")
        v = inst.valuations[i]
        if v.value_of(result.bundles[i].mask) < v.value_of(start.bundles[i].mask):
            failures.append(f"agent {i} lost value against her start bundle")
    for j in range(inst.n):
        last = trace.last_added[j]
        grew = result.bundles[j] != start.bundles[pi[j]]
        if grew != (last is not None):
            failures.append(f"last_added[{j}] inconsistent with bundle growth")
            continue
        if last is None:
            continue
        reduced = result.bundles[j].mask ^ (1 << last)
        for i in range(inst.n):
            v = inst.valuations[i]
            if v.value_of(result.bundles[i].mask) < v.value_of(reduced):
                failures.append(
                    f"agent {i} envies bundle {j} even without its last item"
                )
    return failures


def preprocess_singletons(
    inst: Instance, partial: PartialAllocation, ledger: QueryLedger
) -> PartialAllocation:
    """Swap agents onto strictly preferred single pool items until stable.

    Repeatedly the lowest-index agent strictly preferring some pool item to
    her whole bundle takes the lowest-index such item, returning her old
    bundle to the pool. Strict preference is expressed with >=-comparisons
    only: NOT v(bundle) >= v({item}). Terminates within n*m swaps (each swap
    strictly increases the swapping agent's value and item values are fixed).
    """
    if partial.m != inst.m or partial.n != inst.n:
        raise ValueError("allocation does not match instance shape")
    n, m = inst.n, inst.m
    pool = partial.pool.mask
    bundles = [b.mask for b in partial.bundles]
    swaps = 0
    while True:
        swapped = False
        for i in range(n):
            v = inst.valuations[i]
            own = Bundle(bundles[i])
            taken = None
            for e in bits_of(pool):
                if not compare_query(v, own, Bundle(1 << e), ledger):
                    taken = e
                    break
            if taken is not None:
                pool = (pool | bundles[i]) ^ (1 << taken)
                bundles[i] = 1 << taken
                swaps += 1
                assert swaps <= n * m, "singleton preprocessing failed to converge"
                swapped = True
                break
        if not swapped:
            return PartialAllocation(
                m, Bundle(pool), tuple(Bundle(b) for b in bundles)
            )


def efl_complete(
    inst: Instance, partial: PartialAllocation, ledger: QueryLedger
) -> tuple[PartialAllocation, RunTrace]:
    """Complete an EFL partial allocation to a full EFL allocation.

    Singleton preprocessing followed by envy-cycle elimination; every agent's
    final value weakly dominates her value in ``partial``. Uses only
    comparison queries against the ledger.
    """
    ok, violations = fairness.is_efl(inst, partial)
    if not ok:
        raise PreconditionError(
            f"input allocation is not EFL: {violations[0]}"
        )
    before = ledger.value_queries
    prepped = preprocess_singletons(inst, partial, ledger)
    result, trace = envy_cycle_run(inst, prepped, ledger)
    assert ledger.value_queries == before, "completion issued a value query"
    trace.partial = partial
    return result, trace


def _minimal_desired_shrink(part, poor, desires):
    """Shrink a part to an inclusion-minimal non-empty subset some poor agent
    desires, scanning removable items in ascending index."""
    cur = part
    progress = True
    while progress:
        progress = False
        for e in list(bits_of(cur)):
            if not (cur >> e) & 1:
                continue
            cand = cur ^ (1 << e)
            if cand and any(desires(a, cand) for a in poor):
                cur = cand
                progress = True
    return cur


def _max_matching(num_parts: int, adj: list[list[int]]) -> list[int]:
    """Augmenting-path maximum matching; adj[p] lists agents desiring part p.

    Returns match_of_part (agent index or -1), deterministic for fixed input.
    """
    match_of_part = [-1] * num_parts
    match_of_agent: dict[int, int] = {}

    def augment(p: int, seen: set[int]) -> bool:
        for a in adj[p]:
            if a in seen:
                continue
            seen.add(a)
            if a not in match_of_agent or augment(match_of_agent[a], seen):
                match_of_agent[a] = p
                match_of_part[p] = a
                return True
        return False

    for p in range(num_parts):
        augment(p, set())
    return match_of_part


def rmms_efx_partial(
    inst: Instance, ledger: QueryLedger
) -> tuple[PartialAllocation, RunTrace]:
    """Partial allocation that is EFX and gives every agent at least her RMMS.

    Round structure: a lowest-index poor agent partitions the free items into
    one acceptable part per poor agent; parts shrink to inclusion-minimal
    subsets desired by some poor agent; either one wealthy agent upgrades to
    a minimal strictly-preferred strict subset of a part (freeing her old
    items), or poor agents are matched to parts they desire, completing a
    perfect matching or the deficiency-maximal partial one.
    """
    n, m = inst.n, inst.m
    full = (1 << m) - 1
    rmms_values = [
        shares.rmms(inst.valuations[i], Bundle(full), n, agent=i).value
        for i in range(n)
    ]
    trace = RunTrace(ledger=ledger, rmms_values=list(rmms_values))
    # None = poor (holds nothing); an int mask (possibly 0) = wealthy.
    assigned: list[Optional[int]] = [None] * n
    free = full

    def desires(a: int, mask: int) -> bool:
        return value_query(inst.valuations[a], Bundle(mask), ledger) >= rmms_values[a]

    def assert_minimal(mask: int, poor: list[int]) -> None:
        # Allocated bundles with >= 2 items must be minimal: dropping any
        # item leaves a bundle no currently-poor agent desires.
        if mask.bit_count() < 2:
            return
        for e in bits_of(mask):
            reduced = mask ^ (1 << e)
            for a in poor:
                assert inst.valuations[a].value_of(reduced) < rmms_values[a], (
                    f"allocated bundle {sorted(bits_of(mask))} is not minimal"
                )

    max_rounds = n * (1 << m) + n
    rounds = 0
    while any(b is None for b in assigned):
        rounds += 1
        assert rounds <= max_rounds, "round bound exceeded"
        poor = [a for a in range(n) if assigned[a] is None]
        n_r = len(poor)
        leader = poor[0]
        t = rmms_values[leader]
        parts = shares.acceptable_partition(
            inst.valuations[leader], Bundle(free), n_r, t
        )
        assert parts is not None, (
            "residual feasibility promised an acceptable partition of the "
            "free items and none was found"
        )
        shrunk = []
        for P in parts:
            if P.mask == 0:
                shrunk.append(0)
            else:
                shrunk.append(_minimal_desired_shrink(P.mask, poor, desires))

        # Wealthy upgrade: first (part, strict subset, agent) hit in
        # (part index, cardinality, mask, agent index) order.
        wealthy = [a for a in range(n) if assigned[a] is not None]
        upgrade = None
        for pidx, pmask in enumerate(shrunk):
            if upgrade is not None:
                break
            subsets = sorted(
                (s for s in submasks(pmask) if s != pmask),
                key=lambda s: (s.bit_count(), s),
            )
            for S in subsets:
                if upgrade is not None:
                    break
                for w in wealthy:
                    vw = inst.valuations[w]
                    if value_query(vw, Bundle(S), ledger) > value_query(
                        vw, Bundle(assigned[w]), ledger
                    ):
                        upgrade = (w, S, pidx)
                        break
        if upgrade is not None:
            w, S, pidx = upgrade
            assert inst.valuations[w].value_of(S) >= rmms_values[w], (
                "upgraded wealthy bundle fell below the agent's share"
            )
            assert_minimal(S, poor)
            free = (free | assigned[w]) & ~S
            assigned[w] = S
            trace.rounds.append(
                {"kind": "upgrade", "agent": w, "bundle": sorted(bits_of(S))}
            )
            continue

        adj = [[a for a in poor if desires(a, pmask)] for pmask in shrunk]
        match_of_part = _max_matching(n_r, adj)
        matched = sum(1 for a in match_of_part if a != -1)
        if matched == n_r:
            for pidx, a in enumerate(match_of_part):
                assert_minimal(shrunk[pidx], poor)
                assigned[a] = shrunk[pidx]
                free &= ~shrunk[pidx]
            trace.rounds.append(
                {
                    "kind": "final-matching",
                    "assigned": {a: sorted(bits_of(shrunk[p]))
                                 for p, a in enumerate(match_of_part)},
                }
            )
        else:
            # Deficiency round: alternating reachability from the lowest
            # unmatched part yields parts T desired by exactly |T| - 1 poor
            # agents; those agents keep their matched parts.
            match_of_agent = {
                a: p for p, a in enumerate(match_of_part) if a != -1
            }
            start = next(p for p in range(n_r) if match_of_part[p] == -1)
            part_reach = {start}
            agent_reach: set[int] = set()
            frontier = [start]
            while frontier:
                p = frontier.pop(0)
                for a in adj[p]:
                    if a in agent_reach:
                        continue
                    agent_reach.add(a)
                    mp = match_of_agent.get(a)
                    assert mp is not None, "augmenting path missed by matching"
                    if mp not in part_reach:
                        part_reach.add(mp)
                        frontier.append(mp)
            assert len(part_reach) >= 2, "every part is desired by some poor agent"
            assert len(agent_reach) == len(part_reach) - 1, (
                "deficiency set does not certify Hall violation"
            )
            assigned_now = {}
            for a in sorted(agent_reach):
                pidx = match_of_agent[a]
                assert_minimal(shrunk[pidx], poor)
                assigned[a] = shrunk[pidx]
                free &= ~shrunk[pidx]
                assigned_now[a] = sorted(bits_of(shrunk[pidx]))
            trace.rounds.append(
                {"kind": "deficiency-matching", "assigned": assigned_now}
            )

    result = PartialAllocation(
        m, Bundle(free), tuple(Bundle(b if b is not None else 0) for b in assigned)
    )
    trace.partial = result
    return result, trace


def rmms_efl_full(
    inst: Instance,
    ledger: QueryLedger,
    completion_ledger: Optional[QueryLedger] = None,
) -> tuple[PartialAllocation, RunTrace]:
    """Full EFL allocation giving every agent at least her RMMS.

    Runs the EFX partial procedure, then completes it; the completion phase
    gets its own ledger so its comparison-only behavior stays auditable.
    """
    if completion_ledger is None:
        completion_ledger = QueryLedger()
    partial, trace = rmms_efx_partial(inst, ledger)
    result, completion_trace = efl_complete(inst, partial, completion_ledger)
    trace.rounds.extend(completion_trace.rounds)
    trace.matching = completion_trace.matching
    trace.last_added = completion_trace.last_added
    trace.partial = partial
    trace.completion_ledger = completion_ledger
    return result, trace
