"""Action of point transformations on multipliers and conservation laws.

Tilde coordinates reuse the plain names: a transformation maps an expression
in (x, u) to the corresponding expression in (x~, u~), written with the same
symbols.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .dcm import verify_multipliers
from .jetexpr import multiindex as mix
from .jetexpr.calculus import NonPolynomialError, collect_monomials, diff, expand, substitute, total_derivative
from .jetexpr.expr import ONE, ZERO, AFun, Expr, Func, Integral, Jet, Num, Pow, Sym, add, as_expr, atoms, free_jets, mul, pow_, walk
from .jetexpr.oracle import DEFAULT, OracleConfig, is_proportional, is_zero
from .jetexpr.parse import parse_expr
from .jetexpr.system import SystemDef
from .laws import ConservationLaw, MultiplierSet
from .verdict import Check, Verdict

SERIES_CAP = 8


class TransformError(ValueError):
    pass


def det(M) -> Expr:
    """Determinant by cofactor expansion along the first row."""
    n = len(M)
    if n == 0:
        return ONE
    if n == 1:
        return as_expr(M[0][0])
    terms = []
    for k in range(n):
        if as_expr(M[0][k]).is_zero_literal:
            continue
        minor = [row[:k] + row[k + 1:] for row in M[1:]]
        terms.append(mul(-1 if k % 2 else 1, M[0][k], det(minor)))
    return add(*terms)


def _replace_row(M, i, row):
    return [list(row) if r == i else list(M[r]) for r in range(len(M))]


@dataclass(frozen=True)
class PointTransformation:
    """x = X(x~, u~), u = U(x~, u~), optionally depending on a parameter ``eps``.

    ``forward`` maps every independent and dependent name to its expression in
    the tilde coordinates; ``inverse`` (optional) maps back.
    """

    system: SystemDef
    forward: dict
    inverse: dict | None = None
    eps: str | None = None
    checked: bool = field(default=False, compare=False)

    @classmethod
    def parse(cls, system: SystemDef, forward: dict, inverse: dict | None = None, eps: str | None = None,
              cfg: OracleConfig = DEFAULT) -> "PointTransformation":
        scope = system.scope.extended(params=(eps,) if eps else ())
        fw = {k: parse_expr(v, scope) if isinstance(v, str) else as_expr(v) for k, v in forward.items()}
        inv = None
        if inverse is not None:
            inv = {k: parse_expr(v, scope) if isinstance(v, str) else as_expr(v) for k, v in inverse.items()}
        t = cls(system, fw, inv, eps)
        t.validate(cfg)
        return t

    @classmethod
    def identity(cls, system: SystemDef) -> "PointTransformation":
        ids = {x: Sym(x) for x in system.independent}
        ids.update({u: Jet(u) for u in system.dependent})
        return cls(system, ids, dict(ids))

    @property
    def coords(self) -> tuple:
        return tuple(self.system.independent) + tuple(self.system.dependent)

    def atom(self, name: str) -> Expr:
        return Sym(name) if name in self.system.independent else Jet(name)

    @property
    def eps_sym(self) -> Sym | None:
        return Sym(self.eps, "param") if self.eps else None

    def validate(self, cfg: OracleConfig = DEFAULT) -> Verdict:
        missing = [c for c in self.coords if c not in self.forward]
        if missing:
            raise TransformError(f"forward map missing {missing}")
        for e in self.forward.values():
            if any(j.order > 0 for j in free_jets(e)):
                raise TransformError("point transformations may not involve derivatives")
        v = Verdict()
        if self.inverse is not None:
            binds = {self.atom(c): self.inverse[c] for c in self.coords}
            comp = [add(substitute(self.forward[c], binds, closure=False), mul(-1, self.atom(c)))
                    for c in self.coords]
            v.add(Check.from_zero("forward(inverse) = id", is_zero(comp, cfg)))
            if not v.passed:
                raise TransformError("forward and inverse maps do not compose to the identity")
        if self.eps:
            at0 = [add(substitute(self.forward[c], {self.eps_sym: ZERO}, closure=False), mul(-1, self.atom(c)))
                   for c in self.coords]
            v.add(Check.from_zero("eps = 0 gives identity", is_zero(at0, cfg)))
            if not v.passed:
                raise TransformError("the family is not the identity at eps = 0")
        object.__setattr__(self, "checked", True)
        return v

    def inverted(self) -> "PointTransformation":
        if self.inverse is None:
            raise TransformError("no inverse map supplied")
        return PointTransformation(self.system, self.inverse, self.forward, self.eps, self.checked)

    # ---- derivative structure

    def matrix(self) -> list:
        """M[j][i] = D~_j x_i."""
        xs = self.system.independent
        return [[total_derivative(self.forward[xi], xj) for xi in xs] for xj in xs]

    def _inverse_matrix(self):
        cache = getattr(self, "_minv", None)
        if cache is None:
            M = self.matrix()
            n = len(M)
            J = det(M)
            if J.is_zero_literal:
                raise TransformError("singular Jacobian")
            Jinv = pow_(J, -1)
            Minv = [[None] * n for _ in range(n)]
            for i in range(n):
                for j in range(n):
                    minor = [row[:i] + row[i + 1:] for r, row in enumerate(M) if r != j]
                    cof = mul(-1 if (i + j) % 2 else 1, det(minor))
                    Minv[i][j] = mul(cof, Jinv)
            cache = (J, Minv)
            object.__setattr__(self, "_minv", cache)
        return cache

    def _jet_image(self, j: Jet, memo: dict) -> Expr:
        """Expression of u_J in tilde coordinates via U_{J+i} = sum_j (M^-1)_{ij} D~_j U_J."""
        if j in memo:
            return memo[j]
        if j.order == 0:
            out = self.forward[j.dep]
        else:
            xs = self.system.independent
            i_var = j.mi[-1]
            parent = Jet(j.dep, j.mi[:-1])
            pimg = self._jet_image(parent, memo)
            _, Minv = self._inverse_matrix()
            i = xs.index(i_var)
            out = add(*(mul(Minv[i][k], total_derivative(pimg, xk)) for k, xk in enumerate(xs)))
        memo[j] = out
        return out

    def apply(self, e: Expr) -> Expr:
        """Rewrite e[x, u] in tilde coordinates through the extended transformation."""
        e = as_expr(e)
        memo = getattr(self, "_jet_memo", None)
        if memo is None:
            memo = {}
            object.__setattr__(self, "_jet_memo", memo)
        binds = {Sym(x): self.forward[x] for x in self.system.independent}
        for j in free_jets(e):
            binds[j] = self._jet_image(j, memo)
        return substitute(e, binds, closure=False)


def jacobian(t: PointTransformation) -> Expr:
    return det(t.matrix())


# --------------------------------------------------------------------------
# densities


class SelfCheckError(RuntimeError):
    pass


def transform_densities(cl: ConservationLaw, t: PointTransformation, cfg: OracleConfig = DEFAULT,
                        check: bool = True) -> ConservationLaw:
    """Psi^i = det(M with row i replaced by Phi(x(x~), u(x~))).

    This is the determinant formula with cyclically permuted rows: moving the
    Phi row from the top to row i is a cyclic shift of sign (-1)^((n-1)(i-1)).
    """
    xs = t.system.independent
    M = t.matrix()
    phi = [t.apply(cl.component(x)) for x in xs]
    psi = {x: det(_replace_row(M, i, phi)) for i, x in enumerate(xs)}
    out = ConservationLaw(psi, None, "point-transformed", cl.notes)
    if check:
        J = jacobian(t)
        lhs = mul(J, t.apply(cl.divergence()))
        rhs = out.divergence()
        zv = is_zero(add(lhs, mul(-1, rhs)), cfg)
        if not zv.zero:
            raise SelfCheckError(f"J D_i Phi^i - D~_i Psi^i is not zero (residual {zv.residual:.3g})")
    return out


# --------------------------------------------------------------------------
# factor matrices and multipliers


def leading_jets(sys: SystemDef) -> list:
    """One jet per equation that occurs linearly there and in no other equation."""
    if sys.solved and len(sys.solved) == len(sys.equations):
        keys = list(sys.solved)
        out = []
        for G in sys.equations:
            cand = [k for k in keys if k in atoms(G) and k not in out]
            if not cand:
                break
            out.append(cand[0])
        if len(out) == len(sys.equations):
            return out
    out = []
    for b, G in enumerate(sys.equations):
        others = set().union(*(atoms(H) for k, H in enumerate(sys.equations) if k != b))
        cands = [j for j in free_jets(G) if j not in others and j not in out]
        cands = [j for j in cands if not any(isinstance(a, Jet) and a.order > 0 for a in atoms(diff(G, j)))
                 and diff(diff(G, j), j).is_zero_literal]
        if not cands:
            raise NonPolynomialError(f"equation {b + 1} has no isolated linear leading jet")
        out.append(max(cands, key=lambda j: (j.order, j.sort_key)))
    return out


def factor_over(P: Expr, sys: SystemDef, cfg: OracleConfig = DEFAULT) -> list:
    """Coefficients c_b with P = sum_b c_b G_b identically (P must vanish on solutions).

    Each equation is G_b = k_b l_b + r_b with an isolated leading jet l_b;
    substituting l_b = (g_b - r_b)/k_b turns P into a polynomial in the g_b
    with no constant term, and every monomial is attributed to its first g.
    """
    lead = leading_jets(sys)
    gs = [Jet(f"_g{b}") for b in range(len(lead))]
    binds = {}
    for b, (G, l) in enumerate(zip(sys.equations, lead)):
        k = diff(G, l)
        r = add(G, mul(-1, k, l))
        binds[l] = mul(add(gs[b], mul(-1, r)), pow_(k, -1))
    P = as_expr(P)
    for l in lead:
        if any(j.dep == l.dep and j.order > l.order and mix.minus(j.mi, l.mi) is not None for j in free_jets(P)):
            raise NonPolynomialError(f"expression contains derivatives of the leading jet {l}")
    Q = substitute(P, binds, closure=False)
    gset = set(gs)
    mono = collect_monomials(Q, lambda j: j in gset)
    const = mono.pop((), ZERO)
    if not is_zero(const, cfg).zero:
        raise NonPolynomialError("expression does not vanish on solutions of the system")
    coeffs = [[] for _ in gs]
    for key, c in mono.items():
        first, p = key[0]
        rest = [(g, q) for g, q in key[1:]] + ([(first, p - 1)] if p > 1 else [])
        coeffs[gs.index(first)].append(mul(c, *(pow_(g, q) for g, q in rest)))
    back = {g: G for g, G in zip(gs, sys.equations)}
    out = [substitute(add(*cs), back, closure=False) for cs in coeffs]
    resid = add(P, mul(-1, add(*(mul(c, G) for c, G in zip(out, sys.equations)))))
    zv = is_zero(resid, cfg)
    if not zv.zero:
        raise NonPolynomialError(f"factorization check failed (residual {zv.residual:.3g})")
    return out


def infer_factor_matrix(sys: SystemDef, t: PointTransformation, cfg: OracleConfig = DEFAULT) -> list:
    """A with G_a(transformed) = A_a^b G_b, obtained from J G_a(transformed) by factor_over."""
    J = jacobian(t)
    rows = []
    for a, G in enumerate(sys.equations):
        try:
            c = factor_over(expand(mul(J, t.apply(G))), sys, cfg)
        except NonPolynomialError as exc:
            raise TransformError(f"equation {a + 1} is not carried to a combination of the equations "
                                 f"(is the transformation admitted?): {exc}") from None
        rows.append([mul(x, pow_(J, -1)) for x in c])
    return rows


def verify_factor_matrix(sys: SystemDef, t: PointTransformation, A, cfg: OracleConfig = DEFAULT) -> Verdict:
    v = Verdict()
    for a, G in enumerate(sys.equations):
        rhs = add(*(mul(A[a][b], H) for b, H in enumerate(sys.equations)))
        v.add(Check.from_zero(f"G_{a + 1}", is_zero(add(t.apply(G), mul(-1, rhs)), cfg)))
    return v


def parse_matrix(A, sys: SystemDef, eps: str | None = None) -> list:
    scope = sys.scope.extended(params=(eps,) if eps else ())
    return [[parse_expr(c, scope) if isinstance(c, str) else as_expr(c) for c in row] for row in A]


def transform_multipliers(m: MultiplierSet, t: PointTransformation, A=None, cfg: OracleConfig = DEFAULT,
                          check: bool = True) -> MultiplierSet:
    """Lambda^_b = J A_a^b Lambda^a(transformed); A inferred and verified when not supplied."""
    sys = m.system
    if A is None:
        A = infer_factor_matrix(sys, t, cfg)
    else:
        A = parse_matrix(A, sys, t.eps)
    fv = verify_factor_matrix(sys, t, A, cfg)
    if not fv.passed:
        raise TransformError(f"factor matrix does not satisfy G(transformed) = A G "
                             f"(residual {fv.max_residual:.3g})")
    J = jacobian(t)
    lam = [t.apply(l) for l in m.values]
    out = MultiplierSet(tuple(mul(J, add(*(mul(A[a][b], lam[a]) for a in range(len(lam)))))
                              for b in range(len(lam))), sys)
    if check:
        vm = verify_multipliers(sys, out, cfg)
        if not vm.passed:
            raise TransformError(f"transformed multipliers fail (residual {vm.max_residual:.3g}); "
                                 "is the transformation admitted?")
    return out


# --------------------------------------------------------------------------
# one-parameter families


@dataclass
class LieTerm:
    order: int
    multipliers: MultiplierSet
    law: ConservationLaw
    verdict: Verdict


def _taylor(e: Expr, eps: Sym, k: int) -> Expr:
    d = e
    for _ in range(k):
        d = diff(d, eps)
    return mul(Num(Fraction(1, factorial(k))), substitute(d, {eps: ZERO}, closure=False))


def _polynomial_in(e: Expr, s: Sym) -> bool:
    for n in walk(e):
        if s not in atoms(n):
            continue
        if isinstance(n, (Func, AFun, Integral)):
            return False
        if isinstance(n, Pow) and not (n.exp.denominator == 1 and n.exp > 0):
            return False
    return True


def lie_expand(m: MultiplierSet, cl: ConservationLaw, t: PointTransformation, max_order: int,
               A=None, cfg: OracleConfig = DEFAULT) -> list:
    """Multiplier sets and densities from the eps^k coefficients of J exp(eps X)(Lambda G) = D Psi(eps).

    Without a factor matrix, the eps^k coefficient of J (Lambda G)(transformed)
    is factored over the equations directly.  Orders whose multipliers vanish
    are omitted.
    """
    if not t.eps:
        raise TransformError("lie_expand needs a one-parameter family")
    eps = t.eps_sym
    if max_order > SERIES_CAP and not all(_polynomial_in(e, eps) for e in t.forward.values()):
        raise TransformError(f"series order {max_order} exceeds the cap {SERIES_CAP} for non-polynomial families")
    sys = m.system
    J = jacobian(t)
    if A is not None:
        A = parse_matrix(A, sys, t.eps)
        lam_t = [t.apply(l) for l in m.values]
        lam_eps = [mul(J, add(*(mul(A[a][b], lam_t[a]) for a in range(len(lam_t))))) for b in range(len(lam_t))]
        prod_eps = None
    else:
        prod_eps = mul(J, t.apply(m.combination()))
    psi = transform_densities(cl, t, cfg, check=False)
    out = []
    for k in range(1, max_order + 1):
        if prod_eps is None:
            lam_k = [expand(_taylor(l, eps, k)) for l in lam_eps]
        else:
            lam_k = factor_over(expand(_taylor(prod_eps, eps, k)), sys, cfg)
        if all(l.is_zero_literal for l in lam_k) or is_zero(lam_k, cfg).zero:
            continue
        ms = MultiplierSet(tuple(lam_k), sys)
        dens = {x: _taylor(psi.component(x), eps, k) for x in sys.independent}
        law = ConservationLaw(dens, ms, f"lie-order-{k}")
        v = verify_multipliers(sys, ms, cfg)
        resid = add(ms.combination(), mul(-1, law.divergence()))
        v.add(Check.from_zero("Lambda G = D Psi", is_zero(resid, cfg)))
        out.append(LieTerm(k, ms, law, v))
    return out


# --------------------------------------------------------------------------
# newness


@dataclass
class NewnessVerdict:
    new: bool
    index: int | None = None
    c: float | None = None
    notes: list = field(default_factory=list)

    @property
    def label(self) -> str:
        return "new" if self.new else f"equivalent({self.index}, {self.c:.6g})"

    def __bool__(self):
        return self.new


class TrivialMultiplierError(ValueError):
    pass


def newness_test(candidate: MultiplierSet, known, sys: SystemDef | None = None,
                 cfg: OracleConfig = DEFAULT) -> NewnessVerdict:
    """New iff the candidate, restricted to solutions, is proportional to no known set."""
    sys = sys or candidate.system
    restrict = (lambda ms: [substitute(v, sys.solved) for v in ms.values]) if sys.solved else (lambda ms: list(ms.values))
    cand = restrict(candidate)
    if is_zero(cand, cfg).zero:
        raise TrivialMultiplierError("candidate multipliers vanish on solutions")
    for i, k in enumerate(known):
        pv = is_proportional(cand, restrict(k), cfg)
        if pv.proportional:
            return NewnessVerdict(False, i, pv.c)
    return NewnessVerdict(True)
