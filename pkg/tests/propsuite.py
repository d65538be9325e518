"""Seeded property suites shared by the property tests and the acceptance run.

Each suite returns a SuiteResult with the count of cases that held and the
worst oracle residual seen.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from conslaw.jetexpr.calculus import total_derivative
from conslaw.jetexpr.expr import Jet, Num, Sym, add, func, mul
from conslaw.jetexpr.oracle import DEFAULT, is_proportional, is_zero
from conslaw.jetexpr.system import SystemDef
from conslaw.laws import MultiplierSet
from conslaw.symaction import PointTransformation, transform_multipliers
from conslaw.varcalc import Lagrangian, adjoint, euler_lagrange, euler_operator, frechet, is_self_adjoint, structurally_equal

from randexpr import DEPS, INDEP, random_expr, random_lagrangian_expr, random_system


@dataclass
class SuiteResult:
    name: str
    total: int
    held: int = 0
    worst: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.held == self.total

    def record(self, ok: bool, residual: float = 0.0, what: str = ""):
        self.worst = max(self.worst, residual)
        if ok:
            self.held += 1
        else:
            self.failures.append(what)

    def line(self) -> str:
        return f"{self.name}: {self.held}/{self.total}, worst residual {self.worst:.3g}"


def divergences_annihilated(n: int = 200, seed: int = 1, cfg=DEFAULT) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("random divergences killed by E_u, E_v", n)
    for k in range(n):
        A, B = random_expr(rng, 3), random_expr(rng, 3)
        div = add(total_derivative(A, "t"), total_derivative(B, "x"))
        zv = is_zero([euler_operator(div, d) for d in DEPS], cfg)
        res.record(zv.zero, zv.max_residual, f"case {k}: A={A}, B={B}")
    return res


def total_derivatives_commute(n: int = 100, seed: int = 2, cfg=DEFAULT) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("D_t D_x = D_x D_t", n)
    for k in range(n):
        e = random_expr(rng, 3)
        lhs = total_derivative(total_derivative(e, "x"), "t")
        rhs = total_derivative(total_derivative(e, "t"), "x")
        zv = is_zero(add(lhs, mul(-1, rhs)), cfg)
        res.record(zv.zero, zv.max_residual, f"case {k}: {e}")
    return res


def adjoint_involution(n: int = 50, seed: int = 3) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("adjoint(adjoint(L)) = L", n)
    for k in range(n):
        L = frechet(random_system(rng))
        res.record(structurally_equal(adjoint(adjoint(L), L.fields), L), 0.0, f"case {k}")
    return res


def euler_lagrange_self_adjoint(n: int = 30, seed: int = 4, cfg=DEFAULT) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("Frechet of Euler-Lagrange is self-adjoint", n)
    scope = SystemDef(INDEP, ("u",), ())
    for k in range(n):
        lag = Lagrangian(random_lagrangian_expr(rng), scope)
        v = is_self_adjoint(euler_lagrange(lag), cfg)
        res.record(v.passed, v.max_residual, f"case {k}: L={lag.L}")
    return res


# linear wave v_t - u_x = 0, v_x - u_t = 0 and its multipliers
# Lambda = [f(t+x) + g(t-x), -f(t+x) + g(t-x)]
WAVE = SystemDef.from_strings(["t", "x"], ["u", "v"], ["v_t - u_x", "v_x - u_t"],
                              solved={"v_t": "u_x", "v_x": "u_t"})


def _q(rng, lo=-3, hi=3, den=4, nonzero=False) -> Fraction:
    while True:
        q = Fraction(rng.randint(lo, hi), rng.randint(1, den))
        if q or not nonzero:
            return q


def _profile(rng, s):
    kind = rng.choice(("sin", "exp", "poly"))
    a, b = _q(rng, nonzero=True), _q(rng)
    if kind == "poly":
        return add(mul(a, s), mul(b, s, s), Num(_q(rng)))
    return mul(a, func(kind, add(mul(Fraction(1, 2), s), b)))


def random_wave_multipliers(rng) -> MultiplierSet:
    p, m = add(Sym("t"), Sym("x")), add(Sym("t"), mul(-1, Sym("x")))
    f, g = _profile(rng, p), _profile(rng, m)
    return MultiplierSet((add(f, g), add(mul(-1, f), g)), WAVE)


def random_wave_transformation(rng) -> PointTransformation:
    """A composite of translations, scalings and the reflection (x, v) -> (-x, -v)."""
    t, x, u, v = Sym("t"), Sym("x"), Jet("u"), Jet("v")
    lam = _q(rng, 1, 3, 2, nonzero=True)
    mu = _q(rng, 1, 3, 2, nonzero=True) * rng.choice((1, -1))
    sgn = rng.choice((1, -1))
    a, b, c, d = (_q(rng) for _ in range(4))
    fw = {"t": add(mul(lam, t), a), "x": add(mul(sgn * lam, x), b),
          "u": add(mul(mu, u), c), "v": add(mul(sgn * mu, v), d)}
    inv = {"t": mul(1 / lam, add(t, -a)), "x": mul(1 / (sgn * lam), add(x, -b)),
           "u": mul(1 / mu, add(u, -c)), "v": mul(1 / (sgn * mu), add(v, -d))}
    pt = PointTransformation(WAVE, fw, inv)
    pt.validate()
    return pt


def multiplier_round_trip(n: int = 20, seed: int = 5, cfg=DEFAULT) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("transform then inverse returns multipliers with c = 1", n)
    for k in range(n):
        m = random_wave_multipliers(rng)
        pt = random_wave_transformation(rng)
        there = transform_multipliers(m, pt, cfg=cfg)
        back = transform_multipliers(there, pt.inverted(), cfg=cfg)
        pv = is_proportional(list(back), list(m), cfg)
        ok = pv.proportional and abs(pv.c - 1) < 1e-9
        res.record(ok, pv.max_residual, f"case {k}: {m} under {pt.forward}")
    return res
