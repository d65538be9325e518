"""Variational calculus in jet space.

Euler and higher Euler operators, the divergence test, prolongation of
generators, symmetry determining equations, linearizing operators and their
formal adjoints, and the Noether flux construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .jetexpr import multiindex as mix
from .jetexpr.calculus import collect_monomials, diff, expand, substitute, total_derivative, total_derivative_multi
from .jetexpr.expr import ZERO, Add, Expr, Jet, Num, Sym, add, as_expr, atoms, free_jets, max_jet_order, mul, split_coeff
from .jetexpr.oracle import DEFAULT, OracleConfig, is_proportional, is_zero
from .jetexpr.system import SystemDef
from .laws import ConservationLaw, MultiplierSet
from .verdict import Check, Verdict


# --------------------------------------------------------------------------
# Euler operators


def euler_operator(e: Expr, dep: str) -> Expr:
    """E_u e = sum over J of (-D)_J de/du_J."""
    e = as_expr(e)
    terms = []
    for j in free_jets(e):
        if j.dep != dep:
            continue
        t = total_derivative_multi(diff(e, j), j.mi)
        terms.append(t if j.order % 2 == 0 else mul(-1, t))
    return add(*terms)


def higher_euler(e: Expr, dep: str, I) -> Expr:
    """Higher Euler operator E_{u_I} e.

    E_{u_I} = sum_P [N(P)/N(I+P)] (-D)_P d/du_{I+P}, where N counts the
    distinct orderings of a multi-index.  With this weighting the flux
    W^i = sum_K N(K) (D_K eta) E_{u_{K+i}} L satisfies
    X L - eta E L = D_i W^i for every characteristic eta.
    """
    I = mix.canon(I)
    if not I:
        raise ValueError("higher_euler needs |I| >= 1; use euler_operator for I = ()")
    e = as_expr(e)
    nI = len(I)
    terms = []
    for j in free_jets(e):
        if j.dep != dep or j.order < nI:
            continue
        P = mix.minus(j.mi, I)
        if P is None:
            continue
        c = Fraction(mix.orderings(P), mix.orderings(j.mi)) * (-1) ** len(P)
        terms.append(mul(Num(c), total_derivative_multi(diff(e, j), P)))
    return add(*terms)


def dependents_in(e: Expr) -> list:
    return sorted({j.dep for j in free_jets(as_expr(e))})


def is_divergence(e: Expr, deps: Sequence[str] | None = None, cfg: OracleConfig = DEFAULT) -> Verdict:
    """Total divergence iff every Euler operator annihilates ``e``."""
    e = as_expr(e)
    deps = dependents_in(e) if deps is None else list(deps)
    v = Verdict()
    for d in deps:
        v.add(Check.from_zero(f"E_{d}", is_zero(euler_operator(e, d), cfg)))
    if not deps:
        v.notes.append("no dependent variables: divergence of x-only terms holds trivially")
    return v


# --------------------------------------------------------------------------
# generators and prolongation


@dataclass(frozen=True)
class Generator:
    """Point generator xi_i d/dx_i + eta^s d/du^s, or evolutionary eta^s[u] d/du^s."""

    kind: str
    eta: dict
    xi: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("point", "evolutionary"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == "evolutionary" and any(not as_expr(c).is_zero_literal for c in self.xi.values()):
            raise ValueError("evolutionary generators have no xi components")
        if self.kind == "point":
            for c in list(self.eta.values()) + list(self.xi.values()):
                if any(j.order > 0 for j in free_jets(as_expr(c))):
                    raise ValueError("point generator coefficients may depend only on x and u")

    @classmethod
    def point(cls, xi: dict, eta: dict) -> "Generator":
        return cls("point", {k: as_expr(v) for k, v in eta.items()}, {k: as_expr(v) for k, v in xi.items()})

    @classmethod
    def evolutionary(cls, eta: dict) -> "Generator":
        return cls("evolutionary", {k: as_expr(v) for k, v in eta.items()})

    def characteristic(self, dep: str) -> Expr:
        """eta - xi_i u_i, the evolutionary form of the generator."""
        q = as_expr(self.eta.get(dep, ZERO))
        if self.kind == "point":
            q = add(q, *(mul(-1, c, Jet(dep, (x,))) for x, c in self.xi.items()))
        return q

    def to_evolutionary(self, deps: Sequence[str]) -> "Generator":
        return Generator.evolutionary({d: self.characteristic(d) for d in deps})

    def coefficients(self) -> dict:
        out = {f"xi_{k}": v for k, v in self.xi.items()}
        out.update({f"eta_{k}": v for k, v in self.eta.items()})
        return out

    def substitute(self, bindings: dict) -> "Generator":
        return Generator(self.kind, {k: substitute(v, bindings) for k, v in self.eta.items()},
                         {k: substitute(v, bindings) for k, v in self.xi.items()})


class Prolongation:
    """The operator X^(p) acting on expressions of jet order at most p."""

    def __init__(self, g: Generator, order: int):
        self.g = g
        self.order = order
        self._coeff: dict = {}

    def coefficient(self, j: Jet) -> Expr:
        """eta^s_J = D_J(Q^s) + xi_i u^s_{J+i}."""
        c = self._coeff.get(j)
        if c is None:
            c = total_derivative_multi(self.g.characteristic(j.dep), j.mi)
            if self.g.kind == "point":
                c = add(c, *(mul(xc, Jet(j.dep, j.mi + (x,))) for x, xc in self.g.xi.items()))
            self._coeff[j] = c
        return c

    def __call__(self, e: Expr) -> Expr:
        e = as_expr(e)
        mo = max_jet_order(e)
        if mo > self.order:
            raise ValueError(f"prolongation order {self.order} is below the jet order {mo} of the target")
        terms = []
        if self.g.kind == "point":
            terms.extend(mul(c, diff(e, Sym(x, "indep"))) for x, c in self.g.xi.items())
        for j in free_jets(e):
            terms.append(mul(self.coefficient(j), diff(e, j)))
        return add(*terms)


def prolong(g: Generator, order: int) -> Prolongation:
    return Prolongation(g, order)


def _first_order_excluded(j: Jet) -> bool:
    return j.order >= 1


def split_by_monomials(exprs: Sequence[Expr], excluded: Callable[[Jet], bool]) -> list:
    rows = []
    for e in exprs:
        rows.extend(collect_monomials(e, excluded).values())
    return rows


def dedupe_rows(rows: Sequence[Expr], cfg: OracleConfig = DEFAULT) -> list:
    """Drop oracle-zero rows and rows proportional to an earlier one."""
    kept: list = []
    seen: set = set()
    for r in rows:
        r = expand(r)
        if r.is_zero_literal:
            continue
        key = _monic(r)
        if key in seen:
            continue
        if is_zero(r, cfg).zero:
            continue
        if any(is_proportional([r], [k], cfg).proportional for k in kept):
            continue
        seen.add(key)
        kept.append(r)
    return kept


def _monic(r: Expr) -> Expr:
    """Scale so the leading numeric coefficient is 1 (a cheap duplicate key)."""
    lead = r.terms[0] if isinstance(r, Add) else r
    c, _ = split_coeff(lead)
    return mul(Num(1 / c), r)


def symmetry_determining(sys: SystemDef, g: Generator, excluded: Callable[[Jet], bool] | None = None,
                         cfg: OracleConfig = DEFAULT, dedupe: bool = True) -> list:
    """Linear determining equations of point symmetries, restricted to solutions.

    X^(K) G_a is rewritten on the solution manifold with the system's solved
    form and split by monomials in the jets outside the ansatz dependence.
    """
    if not sys.solved:
        raise ValueError("symmetry_determining needs solved-form substitutions for the leading derivatives")
    excluded = excluded or _first_order_excluded
    K = max(max_jet_order(G) for G in sys.equations)
    X = prolong(g, K)
    residuals = [substitute(X(G), sys.solved) for G in sys.equations]
    rows = split_by_monomials(residuals, excluded)
    return dedupe_rows(rows, cfg) if dedupe else [r for r in rows if not r.is_zero_literal]


def symmetry_residuals(sys: SystemDef, g: Generator) -> list:
    """X^(K) G_a on the solution manifold (all zero iff g is admitted)."""
    K = max(max_jet_order(G) for G in sys.equations)
    X = prolong(g, K)
    return [substitute(X(G), sys.solved) for G in sys.equations]


# --------------------------------------------------------------------------
# linear operators


@dataclass(frozen=True)
class LinearOperator:
    """Matrix of differential operators: entry (r, c) maps multi-index J to the coefficient of D_J."""

    independent: tuple
    fields: tuple
    rows: int
    entries: dict = field(default_factory=dict)

    def entry(self, r: int, c: int) -> dict:
        return self.entries.get((r, c), {})

    @property
    def shape(self) -> tuple:
        return (self.rows, len(self.fields))

    def apply(self, vec: Sequence[Expr]) -> list:
        vec = [as_expr(v) for v in vec]
        if len(vec) != len(self.fields):
            raise ValueError("vector length does not match operator columns")
        out = []
        for r in range(self.rows):
            terms = []
            for c, v in enumerate(vec):
                for J, coeff in self.entry(r, c).items():
                    terms.append(mul(coeff, total_derivative_multi(v, J)))
            out.append(add(*terms))
        return out

    def order(self) -> int:
        return max((len(J) for e in self.entries.values() for J in e), default=0)

    def expressions(self, field_names: Sequence[str] | None = None) -> list:
        """Rows applied to the column jets, as equation left-hand sides."""
        names = tuple(field_names or self.fields)
        return self.apply([Jet(n) for n in names])

    def __str__(self):
        return "; ".join(str(e) for e in self.expressions())


def _clean(entry: dict) -> dict:
    out = {}
    for J, c in entry.items():
        c = expand(c)
        if not c.is_zero_literal:
            out[mix.canon(J)] = c
    return out


def operator_from(entries: dict, independent, fields, rows) -> LinearOperator:
    clean = {}
    for k, e in entries.items():
        e = _clean(e)
        if e:
            clean[k] = e
    return LinearOperator(tuple(independent), tuple(fields), rows, clean)


def frechet(sys: SystemDef) -> LinearOperator:
    """Linearizing operator: entry (a, s) = sum_J dG_a/du^s_J D_J."""
    entries: dict = {}
    for r, G in enumerate(sys.equations):
        for j in free_jets(G):
            c = sys.dependent.index(j.dep)
            entries.setdefault((r, c), {})
            entries[(r, c)][j.mi] = add(entries[(r, c)].get(j.mi, ZERO), diff(G, j))
    return operator_from(entries, sys.independent, sys.dependent, len(sys.equations))


def adjoint(L: LinearOperator, fields: Sequence[str] | None = None) -> LinearOperator:
    """Formal adjoint: (L*)_{s a} V = sum_J (-D)_J (c_{a s J} V), re-expanded by Leibniz."""
    fields = tuple(fields) if fields else tuple(f"lambda{r + 1}" for r in range(L.rows))
    entries: dict = {}
    for (r, c), ent in L.entries.items():
        tgt = entries.setdefault((c, r), {})
        for J, coeff in ent.items():
            sign = -1 if len(J) % 2 else 1
            for K in mix.submultisets(J):
                rest = mix.minus(J, K)
                term = mul(sign * mix.binom(J, K), total_derivative_multi(coeff, rest))
                tgt[K] = add(tgt.get(K, ZERO), term)
    return operator_from(entries, L.independent, fields, len(L.fields))


def operators_equal(A: LinearOperator, B: LinearOperator, cfg: OracleConfig = DEFAULT) -> Verdict:
    """Entrywise oracle comparison of coefficients (column names are not compared)."""
    v = Verdict()
    if A.shape != B.shape:
        v.add(Check("shape", False, note=f"{A.shape} vs {B.shape}"))
        return v
    keys = set(A.entries) | set(B.entries)
    for k in sorted(keys):
        ea, eb = A.entry(*k), B.entry(*k)
        for J in sorted(set(ea) | set(eb)):
            d = add(ea.get(J, ZERO), mul(-1, eb.get(J, ZERO)))
            if expand(d).is_zero_literal:
                continue
            v.add(Check.from_zero(f"entry{k} D_{''.join(J) or '1'}", is_zero(d, cfg)))
    if not v.checks:
        v.add(Check("entries", True, note="structurally equal"))
    return v


def structurally_equal(A: LinearOperator, B: LinearOperator) -> bool:
    if A.shape != B.shape:
        return False
    keys = set(A.entries) | set(B.entries)
    for k in keys:
        ea, eb = A.entry(*k), B.entry(*k)
        for J in set(ea) | set(eb):
            if not expand(add(ea.get(J, ZERO), mul(-1, eb.get(J, ZERO)))).is_zero_literal:
                return False
    return True


def _fresh(base: str, taken: set, n: int) -> tuple:
    out = []
    k = 1
    while len(out) < n:
        name = f"{base}{k}"
        if name not in taken:
            out.append(name)
        k += 1
    return tuple(out)


def bilinear_identity_check(L: LinearOperator, Lstar: LinearOperator | None = None,
                            cfg: OracleConfig = DEFAULT) -> Verdict:
    """Check that V.LU - U.L*V is a total divergence in the jets of U, V and all coefficients."""
    Lstar = adjoint(L) if Lstar is None else Lstar
    taken = set(L.fields) | set(L.independent)
    for ent in L.entries.values():
        for c in ent.values():
            taken |= {j.dep for j in free_jets(c)}
    Us = _fresh("q", taken, len(L.fields))
    Vs = _fresh("r", taken | set(Us), L.rows)
    LU = L.apply([Jet(n) for n in Us])
    LsV = Lstar.apply([Jet(n) for n in Vs])
    e = add(*(mul(Jet(v), x) for v, x in zip(Vs, LU)), *(mul(-1, Jet(u), y) for u, y in zip(Us, LsV)))
    deps = sorted({j.dep for j in free_jets(e)})
    return is_divergence(e, deps, cfg)


def is_self_adjoint(sys: SystemDef, cfg: OracleConfig = DEFAULT) -> Verdict:
    L = frechet(sys)
    if L.rows != len(L.fields):
        v = Verdict()
        v.add(Check("square", False, note="number of equations differs from number of dependent variables"))
        return v
    v = operators_equal(adjoint(L, sys.dependent), L, cfg)
    v.data["order"] = L.order()
    return v


# --------------------------------------------------------------------------
# Lagrangians and Noether


@dataclass(frozen=True)
class Lagrangian:
    L: Expr
    system: SystemDef

    @classmethod
    def parse(cls, text: str, independent, dependent, params=(), functions=None) -> "Lagrangian":
        sys = SystemDef.from_strings(independent, dependent, (), params, functions)
        return cls(sys.parse(text), sys)


def euler_lagrange(lag: Lagrangian) -> SystemDef:
    """One equation E_{u^g} L per dependent variable (alternating-sign Euler operator)."""
    eqs = [expand(euler_operator(lag.L, d)) for d in lag.system.dependent]
    return lag.system.with_equations(eqs, solved={})


def _point_to_evolutionary(g: Generator, deps) -> Generator:
    return g if g.kind == "evolutionary" else g.to_evolutionary(deps)


def variational_symmetry_test(lag: Lagrangian, g: Generator, cfg: OracleConfig = DEFAULT) -> Verdict:
    """X L is a total divergence, with X taken in evolutionary form."""
    ev = _point_to_evolutionary(g, lag.system.dependent)
    XL = prolong(ev, max(max_jet_order(lag.L), 0))(lag.L)
    v = is_divergence(XL, lag.system.dependent, cfg)
    v.data["XL"] = XL
    return v


def noether_w(lag: Lagrangian, g: Generator) -> dict:
    """W^i = sum over sigma and multi-indices K of N(K) (D_K eta^sigma) E_{u^sigma_{K+i}} L."""
    ev = _point_to_evolutionary(g, lag.system.dependent)
    k = max(max_jet_order(lag.L), 0)
    W = {}
    for x in lag.system.independent:
        terms = []
        for dep in lag.system.dependent:
            eta = ev.eta.get(dep, ZERO)
            if as_expr(eta).is_zero_literal:
                continue
            for K in mix.all_multiindices(lag.system.independent, max(k - 1, 0)):
                HE = higher_euler(lag.L, dep, mix.join(K, (x,)))
                if HE.is_zero_literal:
                    continue
                terms.append(mul(mix.orderings(K), total_derivative_multi(eta, K), HE))
        W[x] = add(*terms)
    return W


class NoetherError(ValueError):
    pass


def noether_flux(lag: Lagrangian, g: Generator, f: dict, cfg: OracleConfig = DEFAULT):
    """Densities Phi^i = W^i - f^i of the conservation law of a variational symmetry.

    ``f`` maps each independent variable to f^i with X L = D_i f^i.  The result
    satisfies D_i Phi^i = -eta^s E_s L, so its multipliers are -eta.
    """
    ev = _point_to_evolutionary(g, lag.system.dependent)
    xs = lag.system.independent
    f = {x: as_expr(f.get(x, ZERO)) for x in xs}
    XL = prolong(ev, max(max_jet_order(lag.L), 0))(lag.L)
    match = is_zero(add(XL, *(mul(-1, total_derivative(f[x], x)) for x in xs)), cfg)
    if not match.zero:
        raise NoetherError(f"X L - D_i f^i is not zero (residual {match.residual:.3g}); "
                           "the supplied f does not match or the symmetry is not variational")
    W = noether_w(lag, g)
    phi = {x: add(W[x], mul(-1, f[x])) for x in xs}
    el = [euler_operator(lag.L, d) for d in lag.system.dependent]
    etas = [as_expr(ev.eta.get(d, ZERO)) for d in lag.system.dependent]
    lhs = add(*(mul(e, G) for e, G in zip(etas, el)))
    check = is_zero(add(lhs, *(mul(-1, total_derivative(add(f[x], mul(-1, W[x])), x)) for x in xs)), cfg)
    if not check.zero:
        raise NoetherError(f"flux identity failed (residual {check.residual:.3g})")
    els = euler_lagrange(lag)
    mult = MultiplierSet(tuple(mul(-1, e) for e in etas), els)
    return ConservationLaw(phi, mult, "noether")
