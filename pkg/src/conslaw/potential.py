"""Potential systems, nonlocal symmetries and the telegraph-family classification."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import count

from .jetexpr.calculus import diff, substitute, total_derivative
from .jetexpr.expr import ZERO, Expr, Jet, Sym, add, as_expr, atoms, integral, mul
from .jetexpr.oracle import DEFAULT, OracleConfig, is_zero
from .jetexpr.system import SystemDef
from .laws import ConservationLaw
from .varcalc import Generator, symmetry_residuals
from .verdict import Check, Verdict


class PotentializationError(ValueError):
    pass


def potential_names():
    yield "v"
    yield "w"
    for k in count(1):
        yield f"p{k}"


def next_potential(sys: SystemDef) -> str:
    taken = set(sys.dependent) | set(sys.independent) | set(sys.params) | set(sys.functions)
    return next(n for n in potential_names() if n not in taken)


@dataclass(frozen=True)
class PotentialSystem:
    system: SystemDef
    potential: str
    T: Expr
    X: Expr
    replaced: int
    source: Expr
    sign: int = 1
    caveats: tuple = ()

    def soundness(self, cfg: OracleConfig = DEFAULT) -> Verdict:
        """Cross-differentiating the potential equations gives back the source equation."""
        t, x = self.system.independent
        p = self.potential
        e1 = add(Jet(p, (t,)), self.X)
        e2 = add(Jet(p, (x,)), mul(-1, self.T))
        cross = add(total_derivative(e1, x), mul(-1, total_derivative(e2, t)))
        return Verdict([Check.from_zero("cross-differentiation", is_zero(add(cross, mul(-self.sign, self.source)), cfg))])


def _as(sys: SystemDef, e) -> Expr:
    return sys.parse(e) if isinstance(e, str) else as_expr(e)


def potentialize(sys: SystemDef, source, T=None, X=None, name: str | None = None,
                 cfg: OracleConfig = DEFAULT) -> PotentialSystem:
    """Replace one conserved-form equation D_t T + D_x X = 0 by v_t + X = 0, v_x - T = 0.

    ``source`` is an equation index (with T, X supplied) or a ConservationLaw
    carrying multipliers; in the second case the replaced equation is the
    first one whose multiplier does not vanish on solutions.
    """
    if len(sys.independent) != 2:
        raise PotentializationError("potential systems need exactly two independent variables")
    t, x = sys.independent
    caveats = []
    if isinstance(source, ConservationLaw):
        if source.multipliers is None:
            raise PotentializationError("conservation-law route needs multipliers")
        T, X = source.component(t), source.component(x)
        on_sol = source.multipliers.on_solutions()
        idx = None
        for b, lam in enumerate(on_sol):
            if not is_zero(lam, cfg).zero:
                idx = b
                break
        if idx is None:
            raise PotentializationError("all multipliers vanish on solutions")
        caveats.append("usefulness checked only as: replaced equation's multiplier nonzero on solutions")
        target = source.multipliers.combination()
        replaced_eq = sys.equations[idx]
    else:
        idx = int(source)
        if T is None or X is None:
            raise PotentializationError("supply the flux pair T, X for the designated equation")
        T, X = _as(sys, T), _as(sys, X)
        target = replaced_eq = sys.equations[idx]
    div = add(total_derivative(T, t), total_derivative(X, x))
    if is_zero(add(div, mul(-1, target)), cfg).zero:
        sign = 1
    elif is_zero(add(div, target), cfg).zero:
        sign = -1
    else:
        raise PotentializationError("source is not D_t T + D_x X for the given pair")
    p = name or next_potential(sys)
    P = lambda *mi: Jet(p, tuple(mi))
    new_eqs = [add(P(t), X), add(P(x), mul(-1, T))]
    eqs = list(sys.equations[:idx]) + new_eqs + list(sys.equations[idx + 1:])
    kept = [G for k, G in enumerate(sys.equations) if k != idx]
    solved = {k: v for k, v in sys.solved.items()
              if k not in atoms(replaced_eq) and any(k in atoms(G) for G in kept)}
    solved[P(t)] = mul(-1, X)
    solved[P(x)] = T
    new = SystemDef(sys.independent, tuple(sys.dependent) + (p,), tuple(eqs), sys.params,
                    dict(sys.functions), solved, f"{sys.name}+{p}" if sys.name else "")
    ps = PotentialSystem(new, p, T, X, idx, target, sign, tuple(caveats))
    if not ps.soundness(cfg).passed:
        raise PotentializationError("potential equations do not reproduce the source")
    return ps


def nonlocal_symmetry_test(g: Generator, potentials, cfg: OracleConfig = DEFAULT) -> Verdict:
    """Nonlocal iff some coefficient depends essentially on a potential variable."""
    v = Verdict()
    for name, c in g.coefficients().items():
        for p in potentials:
            zv = is_zero(diff(as_expr(c), Jet(p)), cfg)
            v.add(Check(f"d{name}/d{p} = 0", zv.zero, zv.max_residual, zv.median_residual))
    v.status = "local" if v.passed else "nonlocal"
    return v


# --------------------------------------------------------------------------
# telegraph-family potential system v_t - F(u)u_x - G(u) = 0, v_x - u_t = 0


def _literal_zero(c: Expr) -> bool:
    return as_expr(c).is_zero_literal


@dataclass
class NLTResidual:
    residuals: tuple
    verdict: Verdict
    flag: str  # "linearizable", "not linearizable", "no symmetry", "degenerate"

    @property
    def linearizable(self) -> bool:
        return self.flag == "linearizable"


def nlt_classification_residual(F: Expr, G: Expr, c, u: Expr = Jet("u"), cfg: OracleConfig = DEFAULT) -> NLTResidual:
    """Residuals of the two ODEs for (F, G) admitting the extra potential symmetry.

    R1 = (c3 u + c4) F' - 2 (c1 - c2 - G) F
    R2 = (c3 u + c4) G' + G^2 - (c1 - 2 c2 + c3) G - c5
    """
    c1, c2, c3, c4, c5 = (as_expr(ci) for ci in c)
    F, G = as_expr(F), as_expr(G)
    lin = add(mul(c3, u), c4)
    R1 = add(mul(lin, diff(F, u)), mul(-2, add(c1, mul(-1, c2), mul(-1, G)), F))
    R2 = add(mul(lin, diff(G, u)), mul(G, G), mul(-1, add(c1, mul(-2, c2), c3), G), mul(-1, c5))
    v = Verdict()
    v.add(Check.from_zero("F equation", is_zero(R1, cfg)))
    v.add(Check.from_zero("G equation", is_zero(R2, cfg)))
    if all(_literal_zero(ci) or is_zero(ci, cfg).zero for ci in (c1, c2, c3, c4, c5)):
        flag = "degenerate"
    elif not v.passed:
        flag = "no symmetry"
    else:
        cond = is_zero(c1, cfg).zero and is_zero(add(c5, mul(-1, c2, add(c3, mul(-1, c2)))), cfg).zero
        flag = "linearizable" if cond else "not linearizable"
    return NLTResidual((R1, R2), v, flag)


def nlt_determining(F: Expr, G: Expr, g: Generator, names=("x", "t", "u", "v")) -> list:
    """The eight determining equations of X = xi d/dx + tau d/dt + eta d/du + phi d/dv."""
    x, t, u, v = names
    X, Tt, U, V = Sym(x), Sym(t), Jet(u), Jet(v)
    xi, tau = as_expr(g.xi.get(x, ZERO)), as_expr(g.xi.get(t, ZERO))
    eta, phi = as_expr(g.eta.get(u, ZERO)), as_expr(g.eta.get(v, ZERO))
    d = diff
    Fp, Gp = d(F, U), d(G, U)
    neg = lambda e: mul(-1, e)
    return [
        add(d(xi, V), neg(d(tau, U))),
        add(d(eta, U), neg(d(phi, V)), d(xi, X), neg(d(tau, Tt))),
        add(mul(G, add(d(eta, V), d(tau, X))), d(eta, Tt), neg(d(phi, X))),
        add(d(xi, U), neg(mul(F, d(tau, V)))),
        add(d(phi, U), neg(mul(G, d(tau, U))), neg(mul(F, d(eta, V)))),
        add(mul(G, d(xi, V)), d(xi, Tt), neg(mul(F, d(tau, X)))),
        add(mul(F, add(d(phi, V), neg(d(tau, Tt)), d(xi, X), neg(d(eta, U)), mul(-2, G, d(tau, V)))),
            neg(mul(Fp, eta))),
        add(mul(G, add(d(phi, V), neg(d(tau, Tt)), neg(mul(G, d(tau, V))))), neg(mul(F, d(eta, X))),
            neg(mul(Gp, eta)), d(phi, Tt)),
    ]


def nlt_potential_symmetry(c, F: Expr, G: Expr, base=1, cfg: OracleConfig = DEFAULT,
                           check_pre: bool = True) -> tuple:
    """Generator xi = c1 x + int F du, tau = c2 t + v, eta = c3 u + c4, phi = c5 t + (c1 - c2 + c3) v.

    Returns (generator, report) where the report holds the eight determining
    residuals.  ``base`` is the lower limit of the F-integral.
    """
    c1, c2, c3, c4, c5 = (as_expr(ci) for ci in c)
    F, G = as_expr(F), as_expr(G)
    U, V = Jet("u"), Jet("v")
    if check_pre:
        pre = nlt_classification_residual(F, G, c, U, cfg)
        if not pre.verdict.passed:
            raise ValueError(f"classification residuals do not vanish (max {pre.verdict.max_residual:.3g})")
    s = Sym("s", "dummy")
    g = Generator.point(
        {"x": add(mul(c1, Sym("x")), integral(substitute(F, {U: s}, closure=False), s, as_expr(base), U)),
         "t": add(mul(c2, Sym("t")), V)},
        {"u": add(mul(c3, U), c4),
         "v": add(mul(c5, Sym("t")), mul(add(c1, mul(-1, c2), c3), V))})
    return g, determining_report(F, G, g, cfg)


def determining_report(F: Expr, G: Expr, g: Generator, cfg: OracleConfig = DEFAULT) -> Verdict:
    rep = Verdict()
    for k, r in enumerate(nlt_determining(F, G, g), 1):
        rep.add(Check.from_zero(f"determining {k}", is_zero(r, cfg)))
    return rep


def nlt_system(F: str = "F(u)", G: str = "G(u)", params=(), functions=None) -> SystemDef:
    """v_t - F u_x - G = 0, v_x - u_t = 0 in (t, x), with solved form."""
    functions = {"F": 1, "G": 1} if functions is None else functions
    return SystemDef.from_strings(
        ["t", "x"], ["u", "v"], [f"v_t - ({F})*u_x - ({G})", "v_x - u_t"], params=params, functions=functions,
        solved={"v_t": f"({F})*u_x + ({G})", "v_x": "u_t"})


def admitted(sys: SystemDef, g: Generator, cfg: OracleConfig = DEFAULT) -> Verdict:
    res = symmetry_residuals(sys, g)
    return Verdict([Check.from_zero(f"X G_{k + 1}", is_zero(r, cfg)) for k, r in enumerate(res)])
