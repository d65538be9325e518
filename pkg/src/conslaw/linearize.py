"""Verifiers for linearization by point mappings, from symmetries and from multipliers.

Candidates are supplied, not solved for: the checks confirm that given
coefficient functions, invariants and target operators fit together.
"""
from __future__ import annotations

import dataclasses
from fractions import Fraction
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import root

from .dcm import match_proportional, verify_multipliers
from .jetexpr.calculus import diff, replace_nodes, substitute
from .jetexpr.evaluate import DomainError, JetPoint, compile_expr, magnitude
from .jetexpr.expr import ZERO, Expr, Jet, Sym, add, as_expr, free_jets, mul, walk
from .jetexpr.oracle import DEFAULT, OracleConfig, is_zero, sample_points
from .jetexpr.parse import parse_expr
from .jetexpr.system import SystemDef
from .laws import MultiplierSet
from .varcalc import Generator, LinearOperator, adjoint, bilinear_identity_check, frechet, operator_from, symmetry_residuals
from .verdict import Check, Verdict

RANK_SAMPLES = 16
RANK_TOL = 1e-8
PULLBACK_TOL = 1e-7


class SampleError(ValueError):
    """A supplied sample function does not solve the stated linear system."""


class PullbackError(RuntimeError):
    pass


def _parse_in(scope, e) -> Expr:
    return parse_expr(e, scope) if isinstance(e, str) else as_expr(e)


def _matrix(scope, rows) -> tuple:
    return tuple(tuple(_parse_in(scope, c) for c in row) for row in rows)


@dataclass(frozen=True)
class LinearizationCandidate:
    """Symmetry coefficients xi_i = alpha[s][i] F^s, eta^nu = beta[s][nu] F^s with L F = 0.

    ``target`` is the linear system L F = 0 written in the variables z with
    the F^s as its dependent variables; ``X`` gives z_j as functions of
    (x, u) and ``psi`` the new dependent variables w^g.
    """

    system: SystemDef
    alpha: tuple
    beta: tuple
    target: SystemDef
    X: tuple
    psi: tuple = ()

    def __post_init__(self):
        n, m = len(self.system.independent), len(self.system.dependent)
        if len(self.alpha) != m or any(len(r) != n for r in self.alpha):
            raise ValueError(f"alpha must be {m} x {n}")
        if len(self.beta) != m or any(len(r) != m for r in self.beta):
            raise ValueError(f"beta must be {m} x {m}")
        if len(self.X) != n or len(self.target.independent) != n:
            raise ValueError(f"need {n} invariants X_j and a target in {n} variables")
        if len(self.target.dependent) != m:
            raise ValueError(f"target must have {m} dependent variables")
        if self.psi and len(self.psi) != m:
            raise ValueError(f"need {m} functions psi")

    @classmethod
    def parse(cls, system: SystemDef, alpha, beta, target: SystemDef, X, psi=()) -> "LinearizationCandidate":
        sc = system.scope
        return cls(system, _matrix(sc, alpha), _matrix(sc, beta), target,
                   tuple(_parse_in(sc, e) for e in X), tuple(_parse_in(sc, e) for e in psi))

    @property
    def L(self) -> LinearOperator:
        return frechet(self.target)

    def zmap(self) -> dict:
        return {Sym(z): X for z, X in zip(self.target.independent, self.X)}

    def generator(self, F) -> Generator:
        """The symmetry generator for one solution F of L F = 0 (F given in z variables)."""
        Fx = [substitute(as_expr(f), self.zmap(), closure=False) for f in F]
        xs, us = self.system.independent, self.system.dependent
        xi = {x: add(*(mul(self.alpha[s][i], Fx[s]) for s in range(len(us)))) for i, x in enumerate(xs)}
        eta = {u: add(*(mul(self.beta[s][k], Fx[s]) for s in range(len(us)))) for k, u in enumerate(us)}
        return Generator.point(xi, eta)

    def vector_field(self, s: int, phi: Expr) -> Expr:
        """alpha_i^s dphi/dx_i + beta_nu^s dphi/du^nu."""
        xs, us = self.system.independent, self.system.dependent
        return add(*(mul(self.alpha[s][i], diff(phi, Sym(x))) for i, x in enumerate(xs)),
                   *(mul(self.beta[s][k], diff(phi, Jet(u))) for k, u in enumerate(us)))


def check_linear_solution(target: SystemDef, F, cfg: OracleConfig = DEFAULT, name: str = "L F") -> Verdict:
    L = frechet(target)
    vals = L.apply([as_expr(f) for f in F])
    zv = is_zero(vals, cfg)
    if not zv.zero:
        raise SampleError(f"sample {[str(f) for f in F]} does not satisfy {name} = 0 (residual {zv.residual:.3g})")
    return Verdict([Check.from_zero(name, zv)])


def parse_samples(target: SystemDef, samples) -> list:
    return [tuple(_parse_in(target.scope, f) for f in F) for F in samples]


def verify_symmetry_form(sys: SystemDef, cand: LinearizationCandidate, sample_F, cfg: OracleConfig = DEFAULT) -> Verdict:
    """Each sampled solution F of L F = 0 yields an admitted point symmetry of sys."""
    v = Verdict()
    for k, F in enumerate(parse_samples(cand.target, sample_F)):
        check_linear_solution(cand.target, F, cfg)
        g = cand.generator(F)
        res = symmetry_residuals(sys, g)
        v.add(Check.from_zero(f"sample {k}: {', '.join(str(f) for f in F)}", is_zero(res, cfg)))
    return v


# --------------------------------------------------------------------------
# the mapping


@dataclass
class Mapping:
    """z_j = X_j(x, u), w^g = psi^g(x, u)."""

    system: SystemDef
    z: tuple
    w: tuple
    znames: tuple = ()
    wnames: tuple = ()

    def as_dict(self) -> dict:
        out = {f"z{j + 1}": str(e) for j, e in enumerate(self.z)}
        out.update({f"w{g + 1}": str(e) for g, e in enumerate(self.w)})
        return out


def _rank_check(exprs, wrt, cfg: OracleConfig, name: str, stream: int) -> Check:
    jac = [diff(e, a) for e in exprs for a in wrt]
    rows, cols = len(exprs), len(wrt)
    worst = np.inf
    cfg16 = dataclasses.replace(cfg, samples=RANK_SAMPLES)
    for _, vals in sample_points(jac, cfg16, stream=stream):
        s = np.linalg.svd(np.array(vals, dtype=float).reshape(rows, cols), compute_uv=False)
        ratio = s[-1] / s[0] if s[0] > 0 else 0.0
        worst = min(worst, ratio)
    ok = worst > RANK_TOL
    return Check(name, ok, note=f"min sigma ratio {worst:.3g}" if ok else f"rank deficient (ratio {worst:.3g})")


def verify_theorem5(cand: LinearizationCandidate, cfg: OracleConfig = DEFAULT) -> tuple:
    """Invariance of the X_j, their independence, and psi normalized along each vector field."""
    sys = cand.system
    m = len(sys.dependent)
    v = Verdict()
    for j, X in enumerate(cand.X):
        rows = [cand.vector_field(s, X) for s in range(m)]
        v.add(Check.from_zero(f"X_{j + 1} invariant", is_zero(rows, cfg)))
    coords = [Sym(x) for x in sys.independent] + [Jet(u) for u in sys.dependent]
    v.add(_rank_check(list(cand.X), coords, cfg, "X functionally independent", 11))
    if not cand.psi:
        v.add(Check("psi supplied", False, note="no psi functions in candidate"))
        return None, v
    for g, psi in enumerate(cand.psi):
        for s in range(m):
            rhs = 1 if g == s else 0
            zv = is_zero(add(cand.vector_field(s, psi), -rhs), cfg)
            v.add(Check.from_zero(f"psi^{g + 1} along field {s + 1} = {rhs}", zv))
    v.add(_rank_check(list(cand.X) + list(cand.psi), coords, cfg, "mapping invertible", 12))
    v.notes.append("target taken homogeneous: the inhomogeneous term g(z) is not constructed")
    if not v.passed:
        return None, v
    mp = Mapping(sys, tuple(cand.X), tuple(cand.psi), tuple(cand.target.independent), tuple(cand.target.dependent))
    v.data["mapping"] = mp.as_dict()
    return mp, v


def _draw(rng, cfg: OracleConfig) -> float:
    lo, hi = cfg.sample_range[rng.integers(len(cfg.sample_range))]
    return float(rng.uniform(lo, hi))


def verify_mapped_linearity(sys: SystemDef, mapping: Mapping, target: SystemDef, solutions,
                            samples: int = 8, cfg: OracleConfig = DEFAULT) -> Verdict:
    """Pull solutions of the linear target back through the mapping and evaluate sys on them.

    A target solution w(z) defines u(x) implicitly by H(x, u) = psi(x, u) - w(X(x, u)) = 0;
    the point u is found by root finding and first derivatives by implicit
    differentiation u_x = -H_u^{-1} H_x.
    """
    xs, us = sys.independent, sys.dependent
    if max(max(j.order for j in free_jets(G)) for G in sys.equations) > 1:
        raise ValueError("mapped-linearity check handles first-order systems only")
    xsym, ujet = [Sym(x) for x in xs], [Jet(u) for u in us]
    zmap = {Sym(z): X for z, X in zip(mapping.znames or target.independent, mapping.z)}
    eqs = list(sys.equations)
    geval = [compile_expr(G) for G in eqs]
    v = Verdict()
    v.notes.append("target taken homogeneous: the inhomogeneous term g(z) is not constructed")
    for k, w in enumerate(parse_samples(target, solutions)):
        check_linear_solution(target, w, cfg, "L w")
        H = [add(p, mul(-1, substitute(wg, zmap, closure=False))) for p, wg in zip(mapping.w, w)]
        Hf = [compile_expr(h) for h in H]
        Hu = [[compile_expr(diff(h, a)) for a in ujet] for h in H]
        Hx = [[compile_expr(diff(h, a)) for a in xsym] for h in H]
        worst, got = 0.0, 0
        rng = np.random.default_rng([cfg.seed, 301, k])
        attempts = 0
        while got < samples:
            attempts += 1
            if attempts > samples * 40:
                raise PullbackError(f"could not resolve the inverse mapping for target solution {k}")
            x0 = [_draw(rng, cfg) for _ in xs]
            u_guess = [_draw(rng, cfg) for _ in us]
            base = {a: val for a, val in zip(xsym, x0)}

            def point(uv):
                vals = dict(base)
                vals.update({a: float(val) for a, val in zip(ujet, uv)})
                return JetPoint(vals, cfg.seed)

            def resid(uv):
                try:
                    p = point(uv)
                    return [f(p) for f in Hf]
                except (DomainError, ZeroDivisionError, OverflowError):
                    return [1e6] * len(Hf)

            sol = root(resid, u_guess, tol=1e-13)
            if not sol.success or max(abs(r) for r in resid(sol.x)) > 1e-11:
                continue
            try:
                p = point(sol.x)
                Hu_v = np.array([[f(p) for f in row] for row in Hu])
                Hx_v = np.array([[f(p) for f in row] for row in Hx])
                if abs(np.linalg.det(Hu_v)) < 1e-8:
                    continue
                du = -np.linalg.solve(Hu_v, Hx_v)  # du[nu][i] = d u^nu / d x_i
                vals = dict(p.values)
                for a, u in enumerate(us):
                    for i, x in enumerate(xs):
                        vals[Jet(u, (x,))] = float(du[a][i])
                jp = JetPoint(vals, cfg.seed)
                for G, g in zip(eqs, geval):
                    r = abs(g(jp)) / max(1.0, magnitude(G, jp))
                    worst = max(worst, r)
            except (DomainError, ZeroDivisionError, OverflowError, np.linalg.LinAlgError):
                continue
            got += 1
        v.add(Check(f"pulled-back solution {k}", worst < PULLBACK_TOL, worst, note=f"{got} points"))
    return v


# --------------------------------------------------------------------------
# multipliers


def verify_multiplier_form(sys: SystemDef, A, X, Lstar: SystemDef, sample_F, cfg: OracleConfig = DEFAULT) -> Verdict:
    """Lambda^s = A_r^s F^r(X) is a multiplier set for each sampled solution of L* F = 0.

    ``A`` is indexed A[r][s]; ``Lstar`` is the adjoint-type linear system in
    the variables z = X with the F^r as dependent variables.
    """
    sc = sys.scope
    A = _matrix(sc, A)
    X = tuple(_parse_in(sc, e) for e in X)
    zmap = {Sym(z): e for z, e in zip(Lstar.independent, X)}
    m = len(sys.equations)
    v = Verdict()
    for k, F in enumerate(parse_samples(Lstar, sample_F)):
        check_linear_solution(Lstar, F, cfg, "L* F")
        Fx = [substitute(f, zmap, closure=False) for f in F]
        lam = MultiplierSet(tuple(add(*(mul(A[r][s], Fx[r]) for r in range(len(Fx)))) for s in range(m)), sys)
        vm = verify_multipliers(sys, lam, cfg)
        v.add(Check(f"sample {k}: {lam}", vm.passed, vm.max_residual, vm.median_residual))
    return v


def rename_independent(L: LinearOperator, names) -> LinearOperator:
    names = tuple(names)
    if len(names) != len(L.independent):
        raise ValueError("independent variable count mismatch")
    ren = dict(zip(L.independent, names))
    if all(a == b for a, b in ren.items()):
        return L

    def fix(e: Expr) -> Expr:
        nodes = {}
        for n in walk(e):
            if isinstance(n, Sym) and n.name in ren:
                nodes[n] = Sym(ren[n.name], n.kind)
            elif isinstance(n, Jet) and n.mi:
                nodes[n] = Jet(n.dep, tuple(ren.get(a, a) for a in n.mi))
        return replace_nodes(e, nodes)

    entries = {k: {tuple(ren[a] for a in J): fix(c) for J, c in ent.items()} for k, ent in L.entries.items()}
    return operator_from(entries, names, L.fields, L.rows)


def _reorient(M: LinearOperator, col_perm, fields, pairs) -> LinearOperator:
    """M with rows permuted and scaled, and columns permuted, into the orientation of the matched adjoint."""
    entries = {}
    for i, j, c in pairs:
        for col, p in enumerate(col_perm):
            ent = M.entry(j, p)
            if ent:
                entries[(i, col)] = {J: mul(Fraction(c).limit_denominator(10 ** 6), e) for J, e in ent.items()}
    return operator_from(entries, M.independent, fields, M.rows)


def adjoint_pairing_check(sym_op: LinearOperator, mult_op: LinearOperator, cfg: OracleConfig = DEFAULT) -> Verdict:
    """adjoint(sym_op) equals mult_op up to a column permutation and constant row scalings.

    Independent variables are identified by position.
    """
    Ls = rename_independent(adjoint(sym_op), mult_op.independent)
    target = mult_op.expressions()
    v = Verdict()
    if Ls.shape != mult_op.shape:
        v.add(Check("shape", False, note=f"{Ls.shape} vs {mult_op.shape}"))
        return v
    best = None
    for perm in permutations(range(len(mult_op.fields))):
        names = [mult_op.fields[p] for p in perm]
        mv = match_proportional(Ls.expressions(names), target, cfg)
        if mv.passed:
            best = (perm, mv)
            break
        if best is None or len(mv.failed()) < len(best[1].failed()):
            best = (perm, mv)
    perm, mv = best
    for c in mv.checks:
        v.add(c)
    v.data["column_map"] = {Ls.fields[i]: mult_op.fields[p] for i, p in enumerate(perm)}
    v.data["row_pairs"] = mv.data.get("pairs", [])
    if v.passed:
        aligned = _reorient(mult_op, perm, Ls.fields, mv.data["pairs"])
        v.data["aligned"] = aligned
    return v


def pairing_bilinear_check(sym_op: LinearOperator, mult_op: LinearOperator, cfg: OracleConfig = DEFAULT) -> Verdict:
    """V.L U - U.L* V is a divergence with L* the paired (reoriented) multiplier operator."""
    pv = adjoint_pairing_check(sym_op, mult_op, cfg)
    if not pv.passed:
        return pv
    aligned = rename_independent(pv.data["aligned"], sym_op.independent)
    return bilinear_identity_check(sym_op, aligned, cfg)
