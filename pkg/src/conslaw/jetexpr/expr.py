"""Immutable expression trees over jet coordinates.

Every node is built through the constructor functions at the bottom of this
module (``add``, ``mul``, ``pow_``, ``func``, ``afun``, ``integral``), which
keep trees in canonical form: sums and products are flattened, numeric parts
are folded, like terms and like powers are merged, and children are sorted
under a fixed total order.  Structural equality is therefore a (weak) normal
form equality; deciding identities in general is left to the numeric oracle.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, Fraction]

ELEMENTARY = ("exp", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sech")
NAMED_CONSTANTS = ("pi", "sqrt2")

_KIND_ORDER = {"indep": 0, "param": 1, "dummy": 2}


class Expr:
    """Base class.  Subclasses define ``_struct`` (equality) and ``_sk`` (ordering)."""

    __slots__ = ("_hash", "_sortkey", "_atoms", "_fn", "__weakref__")
    rank = 99

    def _init_cache(self):
        self._hash = hash((type(self).__name__, self._struct()))
        self._sortkey = None
        self._atoms = None
        self._fn = None

    def _struct(self):
        raise NotImplementedError

    def _payload(self):
        raise NotImplementedError

    @property
    def sort_key(self):
        if self._sortkey is None:
            self._sortkey = (self.rank, self._payload(), Fraction(1))
        return self._sortkey

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._struct() == other._struct()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __lt__(self, other):
        return self.sort_key < other.sort_key

    def children(self) -> tuple:
        return ()

    # arithmetic sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __neg__(self):
        return mul(-1, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, pow_(other, -1))

    def __rtruediv__(self, other):
        return mul(other, pow_(self, -1))

    def __pow__(self, exponent):
        return pow_(self, exponent)

    def __str__(self):
        from .printer import to_str

        return to_str(self)

    def __repr__(self):
        return f"Expr<{self}>"

    @property
    def is_zero_literal(self) -> bool:
        return isinstance(self, Num) and self.value == 0


class Num(Expr):
    __slots__ = ("value",)
    rank = 0

    def __init__(self, value: Number):
        self.value = Fraction(value)
        self._init_cache()

    def _struct(self):
        return self.value

    def _payload(self):
        return (self.value,)


class Const(Expr):
    """Named exact constant (pi, sqrt2); bound to a float only when evaluated."""

    __slots__ = ("name",)
    rank = 1

    def __init__(self, name: str):
        if name not in NAMED_CONSTANTS:
            raise ValueError(f"unknown named constant {name!r}")
        self.name = name
        self._init_cache()

    def _struct(self):
        return self.name

    def _payload(self):
        return (self.name,)


class Sym(Expr):
    """Independent variable, parameter, or integration dummy."""

    __slots__ = ("name", "kind")
    rank = 2

    def __init__(self, name: str, kind: str = "indep"):
        if kind not in _KIND_ORDER:
            raise ValueError(f"bad symbol kind {kind!r}")
        self.name = name
        self.kind = kind
        self._init_cache()

    def _struct(self):
        return (self.name, self.kind)

    def _payload(self):
        return (_KIND_ORDER[self.kind], self.name)


class Jet(Expr):
    """Jet coordinate u^sigma_J; the multi-index is stored sorted."""

    __slots__ = ("dep", "mi")
    rank = 3

    def __init__(self, dep: str, mi: Iterable[str] = ()):
        self.dep = dep
        self.mi = tuple(sorted(mi))
        self._init_cache()

    @property
    def order(self) -> int:
        return len(self.mi)

    def _struct(self):
        return (self.dep, self.mi)

    def _payload(self):
        return (self.dep, len(self.mi), self.mi)


class Pow(Expr):
    __slots__ = ("base", "exp")
    rank = 4

    def __init__(self, base: Expr, exp: Fraction):
        self.base = base
        self.exp = Fraction(exp)
        self._init_cache()

    @property
    def sort_key(self):
        if self._sortkey is None:
            bk = self.base.sort_key
            self._sortkey = (bk[0], bk[1], self.exp)
        return self._sortkey

    def _struct(self):
        return (self.base, self.exp)

    def children(self):
        return (self.base,)


class Func(Expr):
    __slots__ = ("name", "arg")
    rank = 5

    def __init__(self, name: str, arg: Expr):
        if name not in ELEMENTARY:
            raise ValueError(f"unknown elementary function {name!r}")
        self.name = name
        self.arg = arg
        self._init_cache()

    def _struct(self):
        return (self.name, self.arg)

    def _payload(self):
        return (self.name, self.arg.sort_key)

    def children(self):
        return (self.arg,)


class AFun(Expr):
    """Arbitrary function symbol with partial derivatives.

    ``derivs`` is a sorted tuple of 0-based argument positions; ``(0, 0)`` on a
    one-argument function is F''.
    """

    __slots__ = ("name", "derivs", "args")
    rank = 6

    def __init__(self, name: str, args: tuple, derivs: Iterable[int] = ()):
        self.name = name
        self.args = tuple(args)
        self.derivs = tuple(sorted(derivs))
        if any(d < 0 or d >= len(self.args) for d in self.derivs):
            raise ValueError("derivative position out of range")
        self._init_cache()

    def _struct(self):
        return (self.name, self.derivs, self.args)

    def _payload(self):
        return (self.name, len(self.args), self.derivs, tuple(a.sort_key for a in self.args))

    def children(self):
        return self.args


class Integral(Expr):
    """Definite integral of ``integrand`` over the dummy ``var`` from lo to hi."""

    __slots__ = ("integrand", "var", "lo", "hi")
    rank = 7

    def __init__(self, integrand: Expr, var: Sym, lo: Expr, hi: Expr):
        if var.kind != "dummy":
            raise ValueError("integration variable must be a dummy symbol")
        self.integrand = integrand
        self.var = var
        self.lo = lo
        self.hi = hi
        self._init_cache()

    def _struct(self):
        return (self.integrand, self.var, self.lo, self.hi)

    def _payload(self):
        return (self.var.name, self.integrand.sort_key, self.lo.sort_key, self.hi.sort_key)

    def children(self):
        return (self.integrand, self.lo, self.hi)


class Mul(Expr):
    __slots__ = ("factors",)
    rank = 8

    def __init__(self, factors: tuple):
        self.factors = tuple(factors)
        self._init_cache()

    def _struct(self):
        return self.factors

    def _payload(self):
        return tuple(f.sort_key for f in self.factors)

    def children(self):
        return self.factors

    @property
    def coeff(self) -> Fraction:
        f0 = self.factors[0]
        return f0.value if isinstance(f0, Num) else Fraction(1)


class Add(Expr):
    __slots__ = ("terms",)
    rank = 9

    def __init__(self, terms: tuple):
        self.terms = tuple(terms)
        self._init_cache()

    def _struct(self):
        return self.terms

    def _payload(self):
        return tuple(t.sort_key for t in self.terms)

    def children(self):
        return self.terms


ZERO = Num(0)
ONE = Num(1)


# --------------------------------------------------------------------------
# canonicalizing constructors


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Num(x)
    if isinstance(x, float):
        return Num(Fraction(x).limit_denominator(10**12))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    """Split ``e`` into (numeric coefficient, remaining factor)."""
    if isinstance(e, Num):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Num):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def add(*args) -> Expr:
    coeffs: dict[Expr, Fraction] = {}
    const = Fraction(0)
    stack = [as_expr(a) for a in args]
    while stack:
        a = stack.pop()
        if isinstance(a, Add):
            stack.extend(a.terms)
        elif isinstance(a, Num):
            const += a.value
        else:
            c, rest = split_coeff(a)
            coeffs[rest] = coeffs.get(rest, Fraction(0)) + c
    terms = []
    for rest, c in coeffs.items():
        if c == 0:
            continue
        if c == 1:
            terms.append(rest)
        elif isinstance(rest, Mul):
            terms.append(Mul((Num(c),) + rest.factors))
        else:
            terms.append(Mul((Num(c), rest)))
    if const != 0:
        terms.append(Num(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=lambda t: t.sort_key)
    return Add(tuple(terms))


def mul(*args) -> Expr:
    coeff = Fraction(1)
    powers: dict[Expr, Fraction] = {}
    stack = [as_expr(a) for a in args]
    while stack:
        a = stack.pop()
        if isinstance(a, Num):
            coeff *= a.value
            if coeff == 0:
                return ZERO
        elif isinstance(a, Mul):
            stack.extend(a.factors)
        elif isinstance(a, Pow):
            powers[a.base] = powers.get(a.base, Fraction(0)) + a.exp
        else:
            powers[a] = powers.get(a, Fraction(0)) + 1
    factors = []
    for base, e in powers.items():
        if e == 0:
            continue
        p = pow_(base, e)
        if isinstance(p, Num):
            coeff *= p.value
        elif isinstance(p, Mul):
            # only arises from sqrt2^k style folding
            c, rest = split_coeff(p)
            coeff *= c
            factors.extend(rest.factors if isinstance(rest, Mul) else [rest])
        else:
            factors.append(p)
    if coeff == 0:
        return ZERO
    if not factors:
        return Num(coeff)
    if len(factors) == 1:
        f = factors[0]
        if coeff == 1:
            return f
        if isinstance(f, Add):
            return add(*(mul(coeff, t) for t in f.terms))
    factors.sort(key=lambda f: f.sort_key)
    if coeff != 1:
        factors.insert(0, Num(coeff))
    return Mul(tuple(factors))


def pow_(base, exponent) -> Expr:
    base = as_expr(base)
    if isinstance(exponent, Expr):
        if not isinstance(exponent, Num):
            raise ValueError("only rational constant exponents are supported; use exp/log")
        exponent = exponent.value
    e = Fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Num):
        if e.denominator == 1:
            if base.value == 0 and e < 0:
                raise ZeroDivisionError("0 raised to a negative power")
            return Num(base.value ** int(e))
        if base.value in (0, 1):
            return base
        return Pow(base, e)
    if isinstance(base, Const) and base.name == "sqrt2" and e.denominator == 1:
        k = int(e)
        half = Num(Fraction(2) ** (k // 2))
        return half if k % 2 == 0 else Mul((half, base)) if half.value != 1 else base
    if isinstance(base, Pow) and e.denominator == 1:
        return pow_(base.base, base.exp * e)
    if isinstance(base, Mul) and e.denominator == 1:
        return mul(*(pow_(f, e) for f in base.factors))
    return Pow(base, e)


_FUNC_AT_ZERO = {"exp": 1, "log": None, "sin": 0, "cos": 1, "tan": 0, "sinh": 0,
                 "cosh": 1, "tanh": 0, "sech": 1}


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Num):
        if arg.value == 0 and _FUNC_AT_ZERO[name] is not None:
            return Num(_FUNC_AT_ZERO[name])
        if name == "log" and arg.value == 1:
            return ZERO
    return Func(name, arg)


def afun(name: str, args, derivs=()) -> Expr:
    return AFun(name, tuple(as_expr(a) for a in args), derivs)


def integral(integrand, var: Sym, lo, hi) -> Expr:
    integrand, lo, hi = as_expr(integrand), as_expr(lo), as_expr(hi)
    if integrand.is_zero_literal or lo == hi:
        return ZERO
    if var not in atoms(integrand):
        return mul(integrand, add(hi, mul(-1, lo)))
    return Integral(integrand, var, lo, hi)


def jet(dep: str, *mi: str) -> Jet:
    return Jet(dep, mi)


def sym(name: str, kind: str = "indep") -> Sym:
    return Sym(name, kind)


# --------------------------------------------------------------------------
# structural queries


def atoms(e: Expr) -> frozenset:
    """Free Sym and Jet atoms of ``e`` (integration dummies are bound)."""
    if e._atoms is not None:
        return e._atoms
    if isinstance(e, (Sym, Jet)):
        out = frozenset((e,))
    elif isinstance(e, Integral):
        inner = atoms(e.integrand) - {e.var}
        out = inner | atoms(e.lo) | atoms(e.hi)
    else:
        out = frozenset()
        for c in e.children():
            out = out | atoms(c)
    e._atoms = out
    return out


def free_jets(e: Expr) -> list[Jet]:
    return sorted((a for a in atoms(e) if isinstance(a, Jet)), key=lambda j: j.sort_key)


def depends_on(e: Expr, a: Expr) -> bool:
    return a in atoms(e)


def walk(e: Expr):
    """Pre-order traversal over all nodes."""
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children()))


def function_symbols(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, AFun)}


def max_jet_order(e: Expr, dep: str | None = None) -> int:
    orders = [j.order for j in free_jets(e) if dep is None or j.dep == dep]
    return max(orders, default=-1)


def rebuild(e: Expr, children: tuple) -> Expr:
    """Reconstruct a node of the same kind from new children via the canonical constructors."""
    if isinstance(e, Add):
        return add(*children)
    if isinstance(e, Mul):
        return mul(*children)
    if isinstance(e, Pow):
        return pow_(children[0], e.exp)
    if isinstance(e, Func):
        return func(e.name, children[0])
    if isinstance(e, AFun):
        return afun(e.name, children, e.derivs)
    if isinstance(e, Integral):
        return integral(children[0], e.var, children[1], children[2])
    return e


def normalize(e: Expr) -> Expr:
    """Rebuild bottom-up through the canonical constructors (idempotent)."""
    ch = e.children()
    if not ch:
        return e
    return rebuild(e, tuple(normalize(c) for c in ch))
