"""Numeric evaluation of expressions at jet points."""
from __future__ import annotations

import hashlib
import math
import random
import warnings
from dataclasses import dataclass, field

from scipy import integrate

from .expr import AFun, Add, Const, Expr, Func, Integral, Jet, Mul, Num, Pow, Sym

_CONSTS = {"pi": math.pi, "sqrt2": math.sqrt(2.0)}


class DomainError(ArithmeticError):
    """Evaluation left the real domain (log of non-positive, overflow, ...)."""


class UnassignedSymbolError(KeyError):
    pass


def _stable_seed(*parts) -> int:
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")


class SmoothRandomFunction:
    """A random analytic function of k arguments with exact partial derivatives.

    Realized as a random quadratic polynomial plus three plane waves, so the
    low-order Taylor data at a point are generically independent while the
    function stays smooth (needed for quadrature and finite differences).
    """

    def __init__(self, nargs: int, rng: random.Random):
        u = rng.uniform
        self.nargs = nargs
        self.c0 = u(-1.5, 1.5)
        self.c1 = [u(-1.5, 1.5) for _ in range(nargs)]
        c2 = [[u(-1.0, 1.0) for _ in range(nargs)] for _ in range(nargs)]
        self.c2 = [[(c2[i][j] + c2[j][i]) / 2 for j in range(nargs)] for i in range(nargs)]
        self.waves = [(u(0.5, 1.5) * rng.choice((-1, 1)), [u(-1.6, 1.6) for _ in range(nargs)],
                       u(0, 2 * math.pi)) for _ in range(3)]

    def __call__(self, derivs: tuple, x: tuple) -> float:
        n = self.nargs
        order = len(derivs)
        val = 0.0
        if order == 0:
            val = self.c0 + sum(self.c1[i] * x[i] for i in range(n))
            val += sum(self.c2[i][j] * x[i] * x[j] for i in range(n) for j in range(n))
        elif order == 1:
            k = derivs[0]
            val = self.c1[k] + 2 * sum(self.c2[k][j] * x[j] for j in range(n))
        elif order == 2:
            val = 2 * self.c2[derivs[0]][derivs[1]]
        shift = order * math.pi / 2
        for a, w, ph in self.waves:
            scale = a
            for d in derivs:
                scale *= w[d]
            val += scale * math.sin(sum(w[i] * x[i] for i in range(n)) + ph + shift)
        return val


@dataclass
class JetPoint:
    """Numeric values for symbols and jets plus memoized arbitrary-function values."""

    values: dict
    seed: int = 0
    memo: dict = field(default_factory=dict)
    _funcs: dict = field(default_factory=dict)

    def lookup(self, atom: Expr) -> float:
        try:
            return self.values[atom]
        except KeyError:
            raise UnassignedSymbolError(str(atom)) from None

    def function_value(self, name: str, derivs: tuple, args: tuple) -> float:
        key = (name, derivs, args)
        v = self.memo.get(key)
        if v is None:
            f = self._funcs.get((name, len(args)))
            if f is None:
                rng = random.Random(_stable_seed(self.seed, name, len(args)))
                f = self._funcs[(name, len(args))] = SmoothRandomFunction(len(args), rng)
            v = self.memo[key] = f(derivs, args)
        return v

    @classmethod
    def from_names(cls, scope, assignments: dict, seed: int = 0) -> "JetPoint":
        """Build a point from {'u_x': 1.5, 't': 0.3} style names resolved in a Scope."""
        from .parse import parse_expr

        vals = {}
        for k, v in assignments.items():
            vals[parse_expr(k, scope)] = float(v)
        return cls(vals, seed)


def _check(v: float) -> float:
    if not math.isfinite(v):
        raise DomainError("non-finite value")
    return v


def _log(a):
    if a <= 0:
        raise DomainError("log of non-positive argument")
    return math.log(a)


def _sech(a):
    if abs(a) > 700:
        return 0.0
    return 1.0 / math.cosh(a)


def _safe(f):
    def g(a):
        try:
            return f(a)
        except (OverflowError, ValueError) as exc:
            raise DomainError(str(exc)) from None

    return g


_FUNCS = {
    "exp": _safe(math.exp),
    "log": _log,
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "sinh": _safe(math.sinh),
    "cosh": _safe(math.cosh),
    "tanh": math.tanh,
    "sech": _sech,
}


def _power(b: float, e, ef: float, integer: bool):
    if integer:
        if b == 0 and e < 0:
            raise DomainError("division by zero")
        try:
            return b ** int(e)
        except OverflowError:
            raise DomainError("overflow") from None
    if b < 0 or (b == 0 and e < 0):
        raise DomainError("non-integer power of a non-positive base")
    return b ** ef


def compile_expr(e: Expr):
    """Return a closure ``f(point) -> float`` (cached on the node)."""
    if e._fn is not None:
        return e._fn
    if isinstance(e, Num):
        v = float(e.value)
        fn = lambda p: v  # noqa: E731
    elif isinstance(e, Const):
        v = _CONSTS[e.name]
        fn = lambda p: v  # noqa: E731
    elif isinstance(e, (Sym, Jet)):
        fn = lambda p: p.lookup(e)  # noqa: E731
    elif isinstance(e, Add):
        fs = [compile_expr(t) for t in e.terms]

        def fn(p):
            return _check(sum(f(p) for f in fs))
    elif isinstance(e, Mul):
        fs = [compile_expr(t) for t in e.factors]

        def fn(p):
            out = 1.0
            for f in fs:
                out *= f(p)
            return _check(out)
    elif isinstance(e, Pow):
        fb = compile_expr(e.base)
        ex, ef, integer = e.exp, float(e.exp), e.exp.denominator == 1

        def fn(p):
            return _check(_power(fb(p), ex, ef, integer))
    elif isinstance(e, Func):
        fa = compile_expr(e.arg)
        op = _FUNCS[e.name]

        def fn(p):
            return _check(op(fa(p)))
    elif isinstance(e, AFun):
        fas = [compile_expr(a) for a in e.args]
        name, derivs = e.name, e.derivs

        def fn(p):
            return _check(p.function_value(name, derivs, tuple(f(p) for f in fas)))
    elif isinstance(e, Integral):
        fi, flo, fhi = compile_expr(e.integrand), compile_expr(e.lo), compile_expr(e.hi)
        var = e.var

        def fn(p):
            lo, hi = flo(p), fhi(p)
            saved = p.values.get(var)

            def integrand(s):
                p.values[var] = s
                return fi(p)

            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", integrate.IntegrationWarning)
                    val, _err = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
            except integrate.IntegrationWarning as exc:
                raise DomainError(f"quadrature failed: {exc}") from None
            finally:
                if saved is None:
                    p.values.pop(var, None)
                else:
                    p.values[var] = saved
            return _check(val)
    else:
        raise TypeError(type(e).__name__)
    e._fn = fn
    return fn


def eval_at(e: Expr, point: JetPoint) -> float:
    try:
        return compile_expr(e)(point)
    except ZeroDivisionError:
        raise DomainError("division by zero") from None


def magnitude(e: Expr, point: JetPoint) -> float:
    """Size of ``e`` before cancellation: sums take the largest term, products multiply."""
    if isinstance(e, Add):
        return max(magnitude(t, point) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= magnitude(f, point)
        return out
    if isinstance(e, Pow) and e.exp > 0 and e.exp.denominator == 1:
        return magnitude(e.base, point) ** int(e.exp)
    return abs(eval_at(e, point))
