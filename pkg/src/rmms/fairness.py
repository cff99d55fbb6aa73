"""Envy predicates and allocation certificates.

Four envy notions are evaluated per ordered agent pair, from strongest
(EF1 envy) down to weakest (EF envy); an allocation is EF1/EFL/EFX/EF when
no pair exhibits the respective envy. Two normalizations keep the hierarchy
EFX => EFL => EF1 intact:

- an empty envied bundle triggers no envy of any kind (for monotone
  normalized valuations EF envy toward the empty bundle is impossible, and
  the universally-quantified predicates would otherwise hold vacuously);
- a singleton envied bundle triggers no EFL envy (with one item there is no
  "less preferred" item to point at; without this exemption an allocation
  could be EFX but not EFL).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import Instance, PartialAllocation, Valuation, bits_of

ENVY_KINDS = ("EF1", "EFL", "EFX", "EF", "none")


@dataclass(frozen=True)
class EnvyVerdict:
    """The strongest envy agent ``envier`` has toward ``envied``.

    ``witness`` is the lowest-index item certifying EFX envy (an item e in
    the envied bundle with v(own) < v(envied - e)); None for other kinds.
    """

    envier: int
    envied: int
    kind: str
    witness: Optional[int] = None


def _ef_envy(v: Valuation, own: int, other: int) -> bool:
    return v.value_of(own) < v.value_of(other)


def _efx_witness(v: Valuation, own: int, other: int) -> Optional[int]:
    own_val = v.value_of(own)
    for e in bits_of(other):
        if own_val < v.value_of(other ^ (1 << e)):
            return e
    return None


def _efl_envy(v: Valuation, own: int, other: int) -> bool:
    if other.bit_count() < 2:
        return False
    own_val = v.value_of(own)
    for e in bits_of(other):
        bit = 1 << e
        if own_val >= v.value_of(bit) and own_val >= v.value_of(other ^ bit):
            return False
    return True


def _ef1_envy(v: Valuation, own: int, other: int) -> bool:
    if other == 0:
        return False
    own_val = v.value_of(own)
    for e in bits_of(other):
        if own_val >= v.value_of(other ^ (1 << e)):
            return False
    return True


def envy_between(
    inst: Instance, alloc: PartialAllocation, i: int, j: int
) -> EnvyVerdict:
    """Evaluate all four envy notions of i toward j; return the strongest."""
    if i == j:
        raise ValueError("envy is defined between distinct agents")
    if alloc.m != inst.m or alloc.n != inst.n:
        raise ValueError("allocation does not match instance shape")
    v = inst.valuations[i]
    own = alloc.bundles[i].mask
    other = alloc.bundles[j].mask
    if other == 0:
        return EnvyVerdict(i, j, "none")
    if _ef1_envy(v, own, other):
        return EnvyVerdict(i, j, "EF1")
    if _efl_envy(v, own, other):
        return EnvyVerdict(i, j, "EFL")
    witness = _efx_witness(v, own, other)
    if witness is not None:
        return EnvyVerdict(i, j, "EFX", witness)
    if _ef_envy(v, own, other):
        return EnvyVerdict(i, j, "EF")
    return EnvyVerdict(i, j, "none")


def _scan(inst, alloc, envy_pred) -> tuple[bool, list[EnvyVerdict]]:
    violations = []
    for i in range(inst.n):
        v = inst.valuations[i]
        own = alloc.bundles[i].mask
        for j in range(inst.n):
            if i == j:
                continue
            other = alloc.bundles[j].mask
            if other and envy_pred(v, own, other):
                violations.append(envy_between(inst, alloc, i, j))
    return (not violations, violations)


def is_ef1(inst: Instance, alloc: PartialAllocation):
    """No ordered pair exhibits EF1 envy."""
    return _scan(inst, alloc, _ef1_envy)


def is_efl(inst: Instance, alloc: PartialAllocation):
    """No ordered pair exhibits EFL envy."""
    return _scan(inst, alloc, _efl_envy)


def is_efx(inst: Instance, alloc: PartialAllocation):
    """No ordered pair exhibits EFX envy."""
    return _scan(inst, alloc, lambda v, a, b: _efx_witness(v, a, b) is not None)


def is_ef(inst: Instance, alloc: PartialAllocation):
    """No ordered pair exhibits plain envy."""
    return _scan(inst, alloc, _ef_envy)


def certificate(inst: Instance, alloc: PartialAllocation) -> dict:
    """JSON-ready fairness certificate for an allocation."""
    ef1, _ = is_ef1(inst, alloc)
    efl, _ = is_efl(inst, alloc)
    efx, _ = is_efx(inst, alloc)
    ef, _ = is_ef(inst, alloc)
    violations = []
    for i in range(inst.n):
        for j in range(inst.n):
            if i == j:
                continue
            verdict = envy_between(inst, alloc, i, j)
            if verdict.kind != "none":
                violations.append(
                    {
                        "envier": verdict.envier,
                        "envied": verdict.envied,
                        "kind": verdict.kind,
                        "witness": verdict.witness,
                    }
                )
    return {"ef1": ef1, "efl": efl, "efx": efx, "ef": ef, "violations": violations}
