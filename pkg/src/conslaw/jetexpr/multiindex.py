"""Multi-indices as sorted tuples of independent-variable names."""
from __future__ import annotations

from collections import Counter
from itertools import product
from math import comb, factorial, prod


def canon(mi) -> tuple:
    return tuple(sorted(mi))


def join(a, b) -> tuple:
    return tuple(sorted(tuple(a) + tuple(b)))


def minus(big, small):
    """big - small as a multi-index, or None when small is not contained in big."""
    c = Counter(big)
    c.subtract(Counter(small))
    if any(v < 0 for v in c.values()):
        return None
    return tuple(sorted(c.elements()))


def orderings(mi) -> int:
    """Number of distinct orderings of the multiset (the multinomial |J|!/J!)."""
    c = Counter(mi)
    return factorial(len(mi)) // prod(factorial(v) for v in c.values())


def binom(big, small) -> int:
    """Product of per-variable binomials C(big_x, small_x)."""
    cb, cs = Counter(big), Counter(small)
    return prod(comb(cb[k], cs[k]) for k in cb)


def submultisets(mi):
    c = Counter(mi)
    keys = sorted(c)
    for counts in product(*(range(c[k] + 1) for k in keys)):
        yield tuple(sorted(k for k, n in zip(keys, counts) for _ in range(n)))


def all_multiindices(variables, max_order: int):
    """Every multi-index over ``variables`` of order 0..max_order."""
    out = [()]
    frontier = [()]
    for _ in range(max_order):
        nxt = set()
        for m in frontier:
            for x in variables:
                nxt.add(join(m, (x,)))
        frontier = sorted(nxt)
        out.extend(frontier)
    return out
