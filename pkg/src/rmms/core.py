"""Core data model: bundles, valuations, instances, allocations, query ledgers.

Items are indexed 0..m-1 and bundles are bit masks over those indices, so
disjointness tests, unions and subset enumeration are single integer ops.
All values are non-negative integers; exact solvers elsewhere in the
package rely on that (no floating point anywhere in the library).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Union

# Exact solvers enumerate 2^m subsets; beyond this the table representation
# and the share solvers refuse to run.
MAX_EXACT_ITEMS = 20
# Item values are capped so that sums over MAX_EXACT_ITEMS items fit
# comfortably in 64 bits.
MAX_VALUE = 2 ** 31


class MalformedBundleError(ValueError):
    """A bundle references item indices outside [0, m)."""


class CapExceededError(RuntimeError):
    """An exact solver was asked for more enumeration than it supports."""


class PreconditionError(ValueError):
    """An algorithm precondition (e.g. input allocation is EFL) failed."""


def bits_of(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def submasks(mask: int) -> Iterator[int]:
    """Yield every submask of ``mask`` in ascending numeric order."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


@dataclass(frozen=True, order=True)
class Bundle:
    """An item subset, encoded as a bit mask (item j <-> bit j)."""

    mask: int = 0

    def __post_init__(self):
        if self.mask < 0:
            raise MalformedBundleError("bundle mask must be non-negative")

    @classmethod
    def from_items(cls, items: Iterable[int]) -> "Bundle":
        mask = 0
        for e in items:
            if e < 0:
                raise MalformedBundleError(f"negative item index {e}")
            mask |= 1 << e
        return cls(mask)

    def items(self) -> list[int]:
        return list(bits_of(self.mask))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, item: int) -> bool:
        return item >= 0 and (self.mask >> item) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        return bits_of(self.mask)

    def __bool__(self) -> bool:
        return self.mask != 0

    def union(self, other: "Bundle") -> "Bundle":
        return Bundle(self.mask | other.mask)

    def difference(self, other: "Bundle") -> "Bundle":
        return Bundle(self.mask & ~other.mask)

    def remove(self, item: int) -> "Bundle":
        if item not in self:
            raise MalformedBundleError(f"item {item} not in bundle")
        return Bundle(self.mask ^ (1 << item))

    def add(self, item: int) -> "Bundle":
        return Bundle(self.mask | (1 << item))

    def isdisjoint(self, other: "Bundle") -> bool:
        return self.mask & other.mask == 0

    def issubset(self, other: "Bundle") -> bool:
        return self.mask & ~other.mask == 0


EMPTY_BUNDLE = Bundle(0)


def _check_item_values(values: tuple[int, ...]) -> list[str]:
    problems = []
    for j, val in enumerate(values):
        if not isinstance(val, int):
            problems.append(f"item {j}: value {val!r} is not an integer")
        elif val < 0:
            problems.append(f"item {j}: negative value {val}")
        elif val > MAX_VALUE:
            problems.append(f"item {j}: value {val} exceeds cap {MAX_VALUE}")
    return problems


@dataclass(frozen=True)
class Additive:
    """Additive valuation: v(S) = sum of per-item values."""

    values: tuple[int, ...]
    kind = "additive"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        problems = _check_item_values(self.values)
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def m(self) -> int:
        return len(self.values)

    def value_of(self, mask: int) -> int:
        total = 0
        vs = self.values
        while mask:
            low = mask & -mask
            total += vs[low.bit_length() - 1]
            mask ^= low
        return total


@dataclass(frozen=True)
class CappedAdditive:
    """Additive valuation truncated at a cap: v(S) = min(sum, cap).

    Subadditive for any non-negative values and cap.
    """

    values: tuple[int, ...]
    cap: int
    kind = "capped_additive"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        problems = _check_item_values(self.values)
        if self.cap < 0 or self.cap > MAX_VALUE:
            problems.append(f"cap {self.cap} outside [0, {MAX_VALUE}]")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def m(self) -> int:
        return len(self.values)

    def value_of(self, mask: int) -> int:
        total = 0
        vs = self.values
        cap = self.cap
        while mask:
            low = mask & -mask
            total += vs[low.bit_length() - 1]
            if total >= cap:
                return cap
            mask ^= low
        return total


def table_violations(values: tuple[int, ...]) -> list[str]:
    """All normalization/monotonicity/range violations of an explicit table."""
    size = len(values)
    m = size.bit_length() - 1
    problems = []
    if size == 0 or size != 1 << m:
        return [f"table length {size} is not a power of two"]
    if values[0] != 0:
        problems.append(f"not normalized: v(empty) = {values[0]}")
    for mask in range(size):
        val = values[mask]
        if val < 0 or val > MAX_VALUE:
            problems.append(f"subset {mask}: value {val} outside [0, {MAX_VALUE}]")
        sub = mask
        while sub:
            low = sub & -sub
            smaller = mask ^ low
            if values[smaller] > val:
                problems.append(
                    f"not monotone: v({sorted(bits_of(smaller))}) = "
                    f"{values[smaller]} > {val} = v({sorted(bits_of(mask))})"
                )
            sub ^= low
    return problems


@dataclass(frozen=True)
class Table:
    """Explicit valuation: one integer per subset, indexed by bit mask.

    Validated exhaustively at construction; pass ``validate=False`` only to
    build deliberately broken tables for ``validate_instance`` to report on.
    """

    values: tuple[int, ...]
    validate: bool = field(default=True, compare=False, repr=False)
    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        size = len(self.values)
        m = size.bit_length() - 1
        if size == 0 or size != 1 << m:
            raise ValueError(f"table length {size} is not a power of two")
        if m > MAX_EXACT_ITEMS:
            raise CapExceededError(
                f"table valuations support at most {MAX_EXACT_ITEMS} items, got {m}"
            )
        if self.validate:
            problems = table_violations(self.values)
            if problems:
                raise ValueError("; ".join(problems[:5]))

    @property
    def m(self) -> int:
        return len(self.values).bit_length() - 1

    def value_of(self, mask: int) -> int:
        return self.values[mask]


Valuation = Union[Additive, CappedAdditive, Table]


@dataclass(frozen=True)
class Instance:
    """An allocation instance: m items and n agents with valuations over them."""

    m: int
    n: int
    valuations: tuple[Valuation, ...]

    def __post_init__(self):
        object.__setattr__(self, "valuations", tuple(self.valuations))
        if self.m < 1:
            raise ValueError(f"need at least one item, got m={self.m}")
        if self.n < 1:
            raise ValueError(f"need at least one agent, got n={self.n}")
        if len(self.valuations) != self.n:
            raise ValueError(
                f"expected {self.n} valuations, got {len(self.valuations)}"
            )
        for i, v in enumerate(self.valuations):
            if v.m != self.m:
                raise ValueError(
                    f"valuation {i} covers {v.m} items, instance has {self.m}"
                )

    @property
    def all_items(self) -> Bundle:
        return Bundle((1 << self.m) - 1)


@dataclass(frozen=True)
class PartialAllocation:
    """Disjoint bundles pool, bundles[0..n-1] covering all m items.

    The pool holds the unallocated items; a full allocation has an empty pool.
    """

    m: int
    pool: Bundle
    bundles: tuple[Bundle, ...]

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(self.bundles))
        full = (1 << self.m) - 1
        union = 0
        total_bits = 0
        for b in (self.pool, *self.bundles):
            if b.mask & ~full:
                raise MalformedBundleError(
                    f"bundle {b.items()} outside item range [0, {self.m})"
                )
            union |= b.mask
            total_bits += len(b)
        if union != full or total_bits != self.m:
            raise ValueError("pool and bundles must partition the item set")

    @classmethod
    def empty(cls, m: int, n: int) -> "PartialAllocation":
        return cls(m, Bundle((1 << m) - 1), tuple(EMPTY_BUNDLE for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.bundles)

    @property
    def is_full(self) -> bool:
        return self.pool.mask == 0


@dataclass
class QueryLedger:
    """Per-run counters for value and comparison oracle queries."""

    value_queries: int = 0
    comparison_queries: int = 0

    def reset(self) -> None:
        self.value_queries = 0
        self.comparison_queries = 0


def _check_range(v: Valuation, bundle: Bundle) -> None:
    if bundle.mask >> v.m:
        raise MalformedBundleError(
            f"bundle {bundle.items()} outside item range [0, {v.m})"
        )


def value_query(v: Valuation, S: Bundle, ledger: QueryLedger) -> int:
    """Answer a value query v(S) and charge it to the ledger."""
    _check_range(v, S)
    ledger.value_queries += 1
    return v.value_of(S.mask)


def compare_query(v: Valuation, S: Bundle, T: Bundle, ledger: QueryLedger) -> bool:
    """Answer a comparison query v(S) >= v(T) and charge it to the ledger."""
    _check_range(v, S)
    _check_range(v, T)
    ledger.comparison_queries += 1
    return v.value_of(S.mask) >= v.value_of(T.mask)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[dict, ...]

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [dict(v) for v in self.violations]}


def validate_instance(inst: Instance) -> ValidationReport:
    """Report every valuation invariant violated by ``inst``.

    Additive and capped-additive valuations are monotone and normalized by
    construction; tables are rechecked exhaustively (they may have been built
    unvalidated, e.g. straight from a file).
    """
    violations: list[dict] = []
    for i, v in enumerate(inst.valuations):
        if isinstance(v, Table):
            for problem in table_violations(v.values):
                violations.append({"agent": i, "problem": problem})
        else:
            for problem in _check_item_values(v.values):
                violations.append({"agent": i, "problem": problem})
            if isinstance(v, CappedAdditive) and v.cap < 0:
                violations.append({"agent": i, "problem": f"negative cap {v.cap}"})
    return ValidationReport(not violations, tuple(violations))


# ---------------------------------------------------------------------------
# JSON wire formats (bit-exact contract, see README)

def valuation_to_json(v: Valuation) -> dict:
    if isinstance(v, Additive):
        return {"kind": "additive", "values": list(v.values)}
    if isinstance(v, CappedAdditive):
        return {"kind": "capped_additive", "values": list(v.values), "cap": v.cap}
    if isinstance(v, Table):
        return {"kind": "table", "values": list(v.values)}
    raise TypeError(f"unknown valuation type {type(v)!r}")


def valuation_from_json(d: dict, validate: bool = True) -> Valuation:
    kind = d.get("kind")
    if kind == "additive":
        return Additive(tuple(d["values"]))
    if kind == "capped_additive":
        return CappedAdditive(tuple(d["values"]), d["cap"])
    if kind == "table":
        return Table(tuple(d["values"]), validate=validate)
    raise ValueError(f"unknown valuation kind {kind!r}")


def instance_to_json(inst: Instance) -> dict:
    return {
        "m": inst.m,
        "n": inst.n,
        "valuations": [valuation_to_json(v) for v in inst.valuations],
    }


def instance_from_json(d: dict, validate: bool = True) -> Instance:
    return Instance(
        m=d["m"],
        n=d["n"],
        valuations=tuple(valuation_from_json(v, validate) for v in d["valuations"]),
    )


def allocation_to_json(alloc: PartialAllocation) -> dict:
    return {
        "pool": alloc.pool.items(),
        "bundles": [b.items() for b in alloc.bundles],
    }


def allocation_from_json(d: dict, m: int) -> PartialAllocation:
    return PartialAllocation(
        m,
        Bundle.from_items(d["pool"]),
        tuple(Bundle.from_items(b) for b in d["bundles"]),
    )


def dump_json(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
