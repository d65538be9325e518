"""Direct construction of conservation laws from multipliers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .jetexpr.calculus import diff, linear_coefficients, substitute, total_derivative
from .jetexpr.expr import ZERO, AFun, Expr, Jet, Sym, add, afun, as_expr, free_jets, integral, mul, walk
from .jetexpr.oracle import DEFAULT, OracleConfig, is_proportional, is_zero, sample_points
from .jetexpr.parse import parse_expr
from .jetexpr.system import SystemDef
from .laws import ConservationLaw, MultiplierSet
from .varcalc import dedupe_rows, euler_operator, split_by_monomials
from .verdict import Check, Verdict

__all__ = [
    "Ansatz", "ConservationLaw", "MultiplierSet", "derive_determining", "verify_multipliers",
    "densities_2var", "verify_conservation_law", "classify_dh", "match_proportional",
    "rowspace_equivalent", "is_trivial", "ShapeError", "SelfCheckError",
]


class ShapeError(ValueError):
    pass


class SelfCheckError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True)
class Ansatz:
    """Unknown multiplier functions and the jet variables they may depend on.

    ``unknowns`` maps a function name to its argument names, e.g.
    {"alpha": ("x", "t", "u", "v")}; ``multipliers`` are expressions in those
    unknowns (default: each unknown applied to its own arguments, in order).
    """

    unknowns: dict
    multipliers: tuple = ()

    def scope(self, sys: SystemDef):
        return sys.scope.extended(functions=dict(self.unknowns))

    def multiplier_exprs(self, sys: SystemDef) -> list:
        sc = self.scope(sys)
        texts = self.multipliers or tuple(self.unknowns)
        return [parse_expr(t, sc) if isinstance(t, str) else as_expr(t) for t in texts]

    def dependence(self, sys: SystemDef) -> set:
        """Jets (and plain dependent variables) allowed inside the unknowns."""
        sc = self.scope(sys)
        out = set()
        for sig in self.unknowns.values():
            if isinstance(sig, int):
                raise ValueError("ansatz unknowns need a named signature")
            for a in sig:
                e = parse_expr(a, sc)
                if isinstance(e, Jet):
                    out.add(e)
        return out


def derive_determining(sys: SystemDef, ansatz: Ansatz, cfg: OracleConfig = DEFAULT) -> list:
    """Split E_u(Lambda.G) = 0 by monomials in the jets the unknowns do not depend on."""
    lam = ansatz.multiplier_exprs(sys)
    if len(lam) != len(sys.equations):
        raise ShapeError(f"{len(lam)} multipliers for {len(sys.equations)} equations")
    allowed = ansatz.dependence(sys)
    comb = add(*(mul(l, G) for l, G in zip(lam, sys.equations)))
    residuals = [euler_operator(comb, d) for d in sys.dependent]
    rows = split_by_monomials(residuals, lambda j: j not in allowed)
    return dedupe_rows(rows, cfg)


def verify_multipliers(sys: SystemDef, m: MultiplierSet, cfg: OracleConfig = DEFAULT) -> Verdict:
    comb = m.combination()
    v = Verdict()
    for d in sys.dependent:
        v.add(Check.from_zero(f"E_{d}", is_zero(euler_operator(comb, d), cfg)))
    if is_trivial(m, cfg):
        v.notes.append("multipliers vanish on solutions (trivial)")
    return v


def is_trivial(m: MultiplierSet, cfg: OracleConfig = DEFAULT) -> bool:
    return is_zero(list(m.on_solutions()), cfg).zero


def verify_conservation_law(sys: SystemDef, m: MultiplierSet, cl: ConservationLaw,
                            cfg: OracleConfig = DEFAULT) -> Verdict:
    """Lambda^s G_s - D_i Phi^i vanishes identically in jet space."""
    resid = add(m.combination(), mul(-1, cl.divergence()))
    return Verdict([Check.from_zero("characteristic form", is_zero(resid, cfg))])


# --------------------------------------------------------------------------
# densities for two-variable potential systems


def _shape_2var(sys: SystemDef, cfg: OracleConfig):
    """Extract F(u), G(u) from G1 = v_t - F(u) u_x - G(u), G2 = v_x - u_t."""
    if set(sys.independent) != {"t", "x"} or len(sys.dependent) != 2 or len(sys.equations) != 2:
        raise ShapeError("needs independent variables t, x and two dependent variables")
    u, v = sys.dependent
    ux, ut, vx, vt = Jet(u, "x"), Jet(u, "t"), Jet(v, "x"), Jet(v, "t")
    G1, G2 = sys.equations
    F = mul(-1, diff(G1, ux))
    Gf = mul(-1, substitute(G1, {ux: ZERO, vt: ZERO}, closure=False))
    checks = [
        add(G1, mul(-1, vt), mul(F, ux), Gf),
        add(G2, mul(-1, vx), ut),
    ]
    if not is_zero(checks, cfg).zero:
        raise ShapeError("system is not of the form v_t - F(u)u_x - G(u) = 0, v_x - u_t = 0")
    for e in (F, Gf):
        if any(j != Jet(u) for j in free_jets(e)) or Sym("x") in _syms(e) or Sym("t") in _syms(e):
            raise ShapeError("F and G must depend on u only")
    return u, v, F, Gf


def _syms(e: Expr) -> set:
    return {n for n in walk(e) if isinstance(n, Sym)}


def densities_2var(sys: SystemDef, m: MultiplierSet, base=(0, 0), cfg: OracleConfig = DEFAULT) -> ConservationLaw:
    """Densities (T, X) from multipliers alpha(x,t,u,v), beta(x,t,u,v) by line integrals.

    T = -int_a^u beta(x,t,s,b) ds + int_b^v alpha(x,t,u,s) ds
    X = -int_a^u F(s) alpha(x,t,s,b) ds + int_b^v beta(x,t,u,s) ds - G(a) int_0^x alpha(s,t,a,b) ds
    """
    u, v, F, Gf = _shape_2var(sys, cfg)
    alpha, beta = m.values
    for lam in (alpha, beta):
        if any(j.order > 0 for j in free_jets(lam)):
            raise ShapeError("multipliers must depend on (x, t, u, v) only")
    a, b = as_expr(base[0]), as_expr(base[1])
    s = Sym("s", "dummy")
    U, V = Jet(u), Jet(v)

    def at(e, **kw):
        bind = {}
        if "u" in kw:
            bind[U] = kw["u"]
        if "v" in kw:
            bind[V] = kw["v"]
        if "x" in kw:
            bind[Sym("x")] = kw["x"]
        return substitute(e, bind, closure=False)

    T = add(mul(-1, integral(at(beta, u=s, v=b), s, a, U)),
            integral(at(alpha, v=s), s, b, V))
    X = add(mul(-1, integral(mul(at(F, u=s), at(alpha, u=s, v=b)), s, a, U)),
            integral(at(beta, v=s), s, b, V),
            mul(-1, at(Gf, u=a), integral(at(alpha, x=s, u=a, v=b), s, 0, Sym("x"))))
    cl = ConservationLaw({"t": T, "x": X}, m, "line-integral")
    check = verify_conservation_law(sys, m, cl, cfg)
    if not check.passed:
        raise SelfCheckError("density self-check failed", check.max_residual)
    return cl


# --------------------------------------------------------------------------
# classifying functions


def classify_dh(F: Expr, G: Expr, var, cfg: OracleConfig = DEFAULT) -> tuple:
    """Classifying functions d(U), h(U) of a potential system and a case tag.

    d = G'^2 F''' - 3 G' G'' F'' + (3 G''^2 - G' G''') F'
    h = G'^2 G'''' - 4 G' G'' G''' + 3 G''^3
    """
    def ders(e, n):
        out = [as_expr(e)]
        for _ in range(n):
            out.append(diff(out[-1], var))
        return out

    f = ders(F, 3)
    g = ders(G, 4)
    d = add(mul(g[1], g[1], f[3]), mul(-3, g[1], g[2], f[2]),
            mul(add(mul(3, g[2], g[2]), mul(-1, g[1], g[3])), f[1]))
    h = add(mul(g[1], g[1], g[4]), mul(-4, g[1], g[2], g[3]), mul(3, g[2], g[2], g[2]))
    dz, hz = is_zero(d, cfg).zero, is_zero(h, cfg).zero
    tag = {(True, True): "d=0,h=0", (False, True): "d!=0,h=0",
           (False, False): "d!=0,h!=0", (True, False): "d=0,h!=0"}[(dz, hz)]
    return d, h, tag


# --------------------------------------------------------------------------
# comparing determining systems


def match_proportional(derived, reference, cfg: OracleConfig = DEFAULT) -> Verdict:
    """One-to-one matching where each pair is oracle-proportional (constant factor)."""
    derived, reference = list(derived), list(reference)
    v = Verdict()
    n, k = len(derived), len(reference)
    prop = np.zeros((n, k), dtype=bool)
    factors = {}
    for i, a in enumerate(derived):
        for j, b in enumerate(reference):
            pv = is_proportional([a], [b], cfg)
            prop[i, j] = pv.proportional
            if pv.proportional:
                factors[(i, j)] = pv.c
    if n != k:
        v.add(Check("count", False, note=f"{n} derived vs {k} reference equations"))
    cost = np.where(prop, 0, 1)
    rows, cols = linear_sum_assignment(cost)
    pairs = []
    for i, j in zip(rows, cols):
        ok = bool(prop[i, j])
        v.add(Check(f"derived[{i}] ~ reference[{j}]", ok,
                    note=f"factor {factors[(i, j)]:.6g}" if ok else "no proportional partner"))
        if ok:
            pairs.append((int(i), int(j), factors[(i, j)]))
    v.data["pairs"] = pairs
    return v


def _unknown_nodes(rows, names) -> list:
    nodes = set()
    for r in rows:
        nodes |= {n for n in walk(r) if isinstance(n, AFun) and n.name in names}
    return sorted(nodes, key=lambda n: n.sort_key)


def rowspace_equivalent(a_rows, b_rows, unknowns, cfg: OracleConfig = DEFAULT, rank_tol: float = 1e-8) -> Verdict:
    """Two linear systems in the unknown functions span the same rows at every sample point.

    Coefficients may be functions (of u, say), so equivalence is tested
    pointwise: rank A = rank B = rank [A; B] on every oracle sample.
    """
    a_rows, b_rows = list(a_rows), list(b_rows)
    nodes = _unknown_nodes(a_rows + b_rows, set(unknowns))
    coeffs = []
    for r in a_rows + b_rows:
        lc = linear_coefficients(r, nodes)
        if None in lc:
            raise ValueError(f"row has a term free of the unknowns: {lc[None]}")
        coeffs.append([lc.get(n, ZERO) for n in nodes])
    flat = [c for row in coeffs for c in row]
    na, w = len(a_rows), len(nodes)
    worst = 0.0
    bad = None
    ranks = set()
    for pt, vals in sample_points(flat, cfg, stream=7):
        M = np.array(vals).reshape(len(coeffs), w)
        ra, rb, rab = (_rank(M[:na], rank_tol), _rank(M[na:], rank_tol), _rank(M, rank_tol))
        ranks.add((ra, rb, rab))
        if not (ra == rb == rab):
            bad = (ra, rb, rab)
            worst = 1.0
            break
    v = Verdict([Check("row space", bad is None, worst,
                       note=f"ranks {sorted(ranks)}" if bad is None else f"rank mismatch (A, B, A+B) = {bad}")])
    v.data["unknowns"] = [str(n) for n in nodes]
    return v


def _rank(M: np.ndarray, tol: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int((s > tol * s[0]).sum())
