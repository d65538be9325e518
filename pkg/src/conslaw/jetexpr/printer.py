"""Render expressions in the input grammar, so printed output re-parses to the same tree."""
from __future__ import annotations

from fractions import Fraction

from .expr import AFun, Add, Const, Expr, Func, Integral, Jet, Mul, Num, Pow, Sym


def _num(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _atom_needs_parens(e: Expr) -> bool:
    # anything that is not a single token or call must be wrapped as a power base
    if isinstance(e, Num):
        return e.value < 0 or e.value.denominator != 1
    return isinstance(e, (Add, Mul, Pow))


def _factor(e: Expr) -> str:
    s = to_str(e)
    return f"({s})" if isinstance(e, Add) else s


def _exponent(v: Fraction) -> str:
    if v.denominator == 1 and v > 0:
        return str(v.numerator)
    return f"({_num(v)})"


def _mul(e: Mul) -> str:
    factors = list(e.factors)
    sign = ""
    head = ""
    if isinstance(factors[0], Num):
        c = factors.pop(0).value
        if c == -1:
            sign = "-"
        elif c < 0:
            sign = "-"
            head = _num(-c) + "*"
        else:
            head = _num(c) + "*"
    return sign + head + "*".join(_factor(f) for f in factors)


def to_str(e: Expr) -> str:
    if isinstance(e, Num):
        return _num(e.value)
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Jet):
        return e.dep + ("_" + "".join(e.mi) if e.mi else "")
    if isinstance(e, Pow):
        b = to_str(e.base)
        if _atom_needs_parens(e.base):
            b = f"({b})"
        return f"{b}^{_exponent(e.exp)}"
    if isinstance(e, Func):
        return f"{e.name}({to_str(e.arg)})"
    if isinstance(e, AFun):
        args = ", ".join(to_str(a) for a in e.args)
        if not e.derivs:
            mark = ""
        elif len(e.args) == 1:
            mark = "'" * len(e.derivs)
        else:
            mark = "'{" + ",".join(str(d + 1) for d in e.derivs) + "}"
        return f"{e.name}{mark}({args})"
    if isinstance(e, Integral):
        return f"int({to_str(e.integrand)}, {e.var.name}, {to_str(e.lo)}, {to_str(e.hi)})"
    if isinstance(e, Mul):
        return _mul(e)
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(e.terms):
            s = to_str(t)
            if i == 0:
                out.append(s)
            elif s.startswith("-"):
                out.append(" - " + s[1:])
            else:
                out.append(" + " + s)
        return "".join(out)
    raise TypeError(type(e).__name__)
