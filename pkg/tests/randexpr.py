"""Seeded random expressions, operators and Lagrangians for the property suites."""
from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import strategies as st

from conslaw.jetexpr.expr import Jet, Num, Sym, add, func, mul, pow_
from conslaw.jetexpr.system import SystemDef

INDEP = ("t", "x")
DEPS = ("u", "v")
_MI = [(), ("t",), ("x",), ("t", "t"), ("t", "x"), ("x", "x")]


def random_atom(rng: random.Random, deps=DEPS, max_order: int = 2):
    k = rng.random()
    if k < 0.2:
        return Sym(rng.choice(INDEP))
    if k < 0.3:
        return Num(Fraction(rng.randint(-5, 5), rng.randint(1, 4)))
    mis = [mi for mi in _MI if len(mi) <= max_order]
    return Jet(rng.choice(deps), rng.choice(mis))


def random_expr(rng: random.Random, depth: int = 3, deps=DEPS, max_order: int = 2, funcs: bool = True):
    if depth <= 0 or (depth < 3 and rng.random() < 0.25):
        return random_atom(rng, deps, max_order)
    nxt = lambda: random_expr(rng, depth - 1, deps, max_order, funcs)
    k = rng.random()
    if k < 0.35:
        return add(nxt(), nxt())
    if k < 0.7:
        return mul(nxt(), nxt())
    if k < 0.85 or not funcs:
        return pow_(nxt(), rng.choice((2, 3)))
    return func(rng.choice(("sin", "cos", "exp")), nxt())


def random_polynomial(rng: random.Random, jets, terms: int = 4, degree: int = 3):
    out = []
    for _ in range(terms):
        c = Fraction(rng.randint(-6, 6), rng.randint(1, 3))
        factors = [rng.choice(jets) for _ in range(rng.randint(1, degree))]
        out.append(mul(Num(c), *factors))
    return add(*out)


def random_system(rng: random.Random, neq: int = 2) -> SystemDef:
    """A random square system in (t, x; u, v) up to second order."""
    eqs = tuple(add(Jet(DEPS[k], ("t",)), random_expr(rng, 3)) for k in range(neq))
    return SystemDef(INDEP, DEPS[:neq], eqs)


def random_lagrangian_expr(rng: random.Random):
    jets = [Jet("u"), Jet("u", ("t",)), Jet("u", ("x",)), Jet("u", ("x", "x")), Sym("x")]
    return random_polynomial(rng, jets, terms=rng.randint(2, 5), degree=3)


seeds = st.integers(min_value=0, max_value=2**31 - 1)
expressions = seeds.map(lambda s: random_expr(random.Random(s)))
