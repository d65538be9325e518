"""Differentiation, substitution and polynomial collection on jet expressions."""
from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .expr import (
    ONE,
    ZERO,
    AFun,
    Add,
    Const,
    Expr,
    Func,
    Integral,
    Jet,
    Mul,
    Num,
    Pow,
    Sym,
    add,
    afun,
    as_expr,
    atoms,
    free_jets,
    func,
    integral,
    mul,
    pow_,
    rebuild,
)


class CyclicBindingError(ValueError):
    pass


class NonPolynomialError(ValueError):
    """An excluded jet variable occurs non-polynomially (e.g. inside a function argument)."""


def _func_derivative(name: str, a: Expr) -> Expr:
    if name == "exp":
        return func("exp", a)
    if name == "log":
        return pow_(a, -1)
    if name == "sin":
        return func("cos", a)
    if name == "cos":
        return mul(-1, func("sin", a))
    if name == "tan":
        return pow_(func("cos", a), -2)
    if name == "sinh":
        return func("cosh", a)
    if name == "cosh":
        return func("sinh", a)
    if name == "tanh":
        return pow_(func("sech", a), 2)
    if name == "sech":
        return mul(-1, func("sech", a), func("tanh", a))
    raise ValueError(name)


@lru_cache(maxsize=400_000)
def diff(e: Expr, wrt: Expr) -> Expr:
    """Partial derivative with every jet coordinate treated as independent."""
    if not isinstance(wrt, (Sym, Jet)):
        raise TypeError("can only differentiate with respect to a symbol or jet coordinate")
    if wrt not in atoms(e):
        return ZERO
    if isinstance(e, (Sym, Jet)):
        return ONE if e == wrt else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, wrt) for t in e.terms))
    if isinstance(e, Mul):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            d = diff(f, wrt)
            if not d.is_zero_literal:
                terms.append(mul(*fs[:i], d, *fs[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        return mul(Num(e.exp), pow_(e.base, e.exp - 1), diff(e.base, wrt))
    if isinstance(e, Func):
        return mul(_func_derivative(e.name, e.arg), diff(e.arg, wrt))
    if isinstance(e, AFun):
        terms = []
        for k, a in enumerate(e.args):
            d = diff(a, wrt)
            if not d.is_zero_literal:
                terms.append(mul(afun(e.name, e.args, e.derivs + (k,)), d))
        return add(*terms)
    if isinstance(e, Integral):
        if wrt == e.var:
            raise ValueError("cannot differentiate with respect to a bound integration variable")
        v = e.var
        hi_term = mul(substitute(e.integrand, {v: e.hi}, closure=False), diff(e.hi, wrt))
        lo_term = mul(-1, substitute(e.integrand, {v: e.lo}, closure=False), diff(e.lo, wrt))
        inner = integral(diff(e.integrand, wrt), v, e.lo, e.hi)
        return add(hi_term, lo_term, inner)
    return ZERO


@lru_cache(maxsize=400_000)
def total_derivative(e: Expr, x: str) -> Expr:
    """D_x e = de/dx + sum over jets u_J of u_{J+x} de/du_J."""
    terms = [diff(e, Sym(x, "indep"))]
    for j in free_jets(e):
        d = diff(e, j)
        if not d.is_zero_literal:
            terms.append(mul(Jet(j.dep, j.mi + (x,)), d))
    return add(*terms)


def total_derivative_multi(e: Expr, J) -> Expr:
    for x in J:
        e = total_derivative(e, x)
    return e


def _multiset_minus(big: tuple, small: tuple):
    """Return big - small as a sorted tuple, or None if small is not a sub-multiset."""
    c = Counter(big)
    c.subtract(Counter(small))
    if any(v < 0 for v in c.values()):
        return None
    return tuple(sorted(c.elements()))


def substitute(e: Expr, bindings: dict, closure: bool = True) -> Expr:
    """Replace atoms (Sym or Jet) by expressions.

    With ``closure=True`` a binding for u_J also rewrites every u_{J+K} as
    D_K of the bound expression, and replacements are themselves substituted
    until no bound jet remains (raising CyclicBindingError on a cycle).  With
    ``closure=False`` the replacement is a single simultaneous pass.
    """
    if not bindings:
        return e
    bindings = {k: as_expr(v) for k, v in bindings.items()}
    jet_keys = sorted((k for k in bindings if isinstance(k, Jet)), key=lambda j: (-j.order, j.sort_key))
    cache: dict = {}
    active: set = set()

    def jet_replacement(j: Jet):
        if j in bindings:
            return bindings[j], ()
        if not closure:
            return None
        for k in jet_keys:
            if k.dep == j.dep and k.order < j.order:
                rest = _multiset_minus(j.mi, k.mi)
                if rest is not None:
                    return bindings[k], rest
        return None

    def go(n: Expr, shadow: frozenset) -> Expr:
        key = (n, shadow)
        if key in cache:
            return cache[key]
        if atoms(n).isdisjoint(bindings) and not (closure and _has_derived(n)):
            cache[key] = n
            return n
        if isinstance(n, (Sym, Jet)):
            if n in shadow:
                out = n
            elif isinstance(n, Sym):
                out = bindings.get(n, n)
            else:
                rep = jet_replacement(n)
                if rep is None:
                    out = n
                else:
                    r, rest = rep
                    r = total_derivative_multi(r, rest)
                    out = go_closed(n, r, shadow) if closure else r
        elif isinstance(n, Integral):
            inner_shadow = shadow | {n.var}
            out = integral(go(n.integrand, inner_shadow), n.var, go(n.lo, shadow), go(n.hi, shadow))
        else:
            out = rebuild(n, tuple(go(c, shadow) for c in n.children()))
        cache[key] = out
        return out

    def go_closed(src, r, shadow):
        if src in active:
            raise CyclicBindingError(f"cyclic substitution through {src}")
        active.add(src)
        try:
            return go(r, shadow)
        finally:
            active.discard(src)

    def _has_derived(n: Expr) -> bool:
        for j in atoms(n):
            if isinstance(j, Jet):
                for k in jet_keys:
                    if k.dep == j.dep and k.order < j.order and _multiset_minus(j.mi, k.mi) is not None:
                        return True
        return False

    return go(e, frozenset())


def bind_function(e: Expr, name: str, params: tuple, body: Expr) -> Expr:
    """Replace the arbitrary function ``name`` by a concrete body.

    ``params`` are the Sym/Jet atoms of ``body`` standing for the function's
    arguments; derivative orders are realized by differentiating the body.
    """
    params = tuple(params)
    cache: dict = {}

    def realize(node: AFun) -> Expr:
        if len(node.args) != len(params):
            raise ValueError(f"arity mismatch binding {name}")
        d = body
        for k in node.derivs:
            d = diff(d, params[k])
        args = tuple(go(a) for a in node.args)
        return substitute(d, dict(zip(params, args)), closure=False)

    def go(n: Expr) -> Expr:
        if n in cache:
            return cache[n]
        if isinstance(n, AFun) and n.name == name:
            out = realize(n)
        elif n.children():
            out = rebuild(n, tuple(go(c) for c in n.children()))
        else:
            out = n
        cache[n] = out
        return out

    return go(e)


# --------------------------------------------------------------------------
# expansion and coefficient collection


def _terms(e: Expr) -> tuple:
    return e.terms if isinstance(e, Add) else (e,)


def expand(e: Expr) -> Expr:
    """Distribute products over sums (recursively, including function arguments)."""
    return _expand(e)


@lru_cache(maxsize=100_000)
def _expand(e: Expr) -> Expr:
    if isinstance(e, (Num, Const, Sym, Jet)):
        return e
    if isinstance(e, Add):
        return add(*(_expand(t) for t in e.terms))
    if isinstance(e, Mul):
        parts = [_terms(_expand(f)) for f in e.factors]
        if all(len(p) == 1 for p in parts):
            return mul(*(p[0] for p in parts))
        return add(*(mul(*combo) for combo in product(*parts)))
    if isinstance(e, Pow):
        b = _expand(e.base)
        if isinstance(b, Add) and e.exp.denominator == 1 and e.exp > 0:
            out = b
            for _ in range(int(e.exp) - 1):
                out = add(*(mul(x, y) for x in _terms(out) for y in b.terms))
            return out
        return pow_(b, e.exp)
    return rebuild(e, tuple(_expand(c) for c in e.children()))


def collect_monomials(e: Expr, excluded) -> dict:
    """Coefficients of ``e`` as a polynomial in the jet variables selected by ``excluded``.

    Returns {monomial: coefficient} with monomials as sorted tuples of
    (Jet, power).  Raises NonPolynomialError if a selected jet occurs anywhere
    other than as a positive integer power factor.
    """
    out: dict = {}
    for t in _terms(expand(e)):
        mono: dict = {}
        rest = []
        for f in (t.factors if isinstance(t, Mul) else (t,)):
            base, p = (f.base, f.exp) if isinstance(f, Pow) else (f, Fraction(1))
            if isinstance(base, Jet) and excluded(base):
                if p.denominator != 1 or p < 0:
                    raise NonPolynomialError(f"{base} occurs with power {p}")
                mono[base] = mono.get(base, 0) + int(p)
            else:
                rest.append(f)
        coeff = mul(*rest)
        bad = [j for j in free_jets(coeff) if excluded(j)]
        if bad:
            raise NonPolynomialError(f"{bad[0]} occurs non-polynomially")
        key = tuple(sorted(mono.items(), key=lambda kv: kv[0].sort_key))
        out[key] = add(out.get(key, ZERO), coeff)
    return {k: v for k, v in out.items() if not v.is_zero_literal}


def replace_nodes(e: Expr, mapping: dict) -> Expr:
    """Structurally replace whole subtrees (e.g. AFun nodes) by expressions."""
    if not mapping:
        return e
    cache: dict = {}

    def go(n: Expr) -> Expr:
        if n in mapping:
            return as_expr(mapping[n])
        if n in cache:
            return cache[n]
        ch = n.children()
        out = rebuild(n, tuple(go(c) for c in ch)) if ch else n
        cache[n] = out
        return out

    return go(e)


def linear_coefficients(e: Expr, unknowns) -> dict:
    """Coefficients of ``e`` viewed as linear in the given nodes: {node: coeff, None: rest}."""
    unknowns = list(unknowns)
    params = {u: Sym(f"_lin{k}", "param") for k, u in enumerate(unknowns)}
    flat = replace_nodes(e, params)
    out = {}
    rest = substitute(flat, {p: ZERO for p in params.values()}, closure=False)
    for u, p in params.items():
        c = diff(flat, p)
        if any(q in atoms(c) for q in params.values()):
            raise NonPolynomialError(f"{u} occurs non-linearly")
        if not c.is_zero_literal:
            out[u] = c
    if not rest.is_zero_literal:
        out[None] = rest
    return out
