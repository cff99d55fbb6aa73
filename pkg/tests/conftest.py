import random

from rmms.core import Additive, Bundle, CappedAdditive, Instance, PartialAllocation


def random_additive_instance(rng: random.Random, n: int, m: int,
                             max_value: int = 3) -> Instance:
    return Instance(
        m, n,
        tuple(
            Additive(tuple(rng.randint(0, max_value) for _ in range(m)))
            for _ in range(n)
        ),
    )


def random_capped_instance(rng: random.Random, n: int, m: int,
                           max_value: int = 5) -> Instance:
    vals = []
    for _ in range(n):
        values = tuple(rng.randint(0, max_value) for _ in range(m))
        cap = rng.randint(1, max(1, sum(values)))
        vals.append(CappedAdditive(values, cap))
    return Instance(m, n, tuple(vals))


def random_partial(rng: random.Random, inst: Instance) -> PartialAllocation:
    pool = 0
    bundles = [0] * inst.n
    for item in range(inst.m):
        slot = rng.randint(0, inst.n)
        if slot == 0:
            pool |= 1 << item
        else:
            bundles[slot - 1] |= 1 << item
    return PartialAllocation(
        inst.m, Bundle(pool), tuple(Bundle(b) for b in bundles)
    )
