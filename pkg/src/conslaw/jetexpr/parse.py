"""Recursive-descent parser for the expression DSL.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | '(' expr ')' | name | name '(' args ')'
            | name primes '(' args ')' | 'int' '(' expr ',' name ',' expr ',' expr ')'
    primes := "'"+ | "'{" INT (',' INT)* '}'

Dependent-variable derivatives are written with an underscore suffix
(``u_tx``).  A function declared with a signature, e.g. ``alpha(x,t,u,v)``,
may be written bare (``alpha``) or with a derivative suffix (``alpha_u``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    ELEMENTARY,
    NAMED_CONSTANTS,
    Const,
    Expr,
    Jet,
    Num,
    Sym,
    add,
    afun,
    func,
    integral,
    mul,
    pow_,
)


class ParseError(ValueError):
    def __init__(self, message: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        self.text = text
        self.message = message
        where = f" at column {pos + 1}" if pos is not None else ""
        super().__init__(message + where)


@dataclass
class Scope:
    """Names visible to the parser."""

    independent: tuple = ()
    dependent: tuple = ()
    params: tuple = ()
    # name -> tuple of argument names (signature) or int arity
    functions: dict = field(default_factory=dict)

    def extended(self, *, independent=(), dependent=(), params=(), functions=None) -> "Scope":
        fns = dict(self.functions)
        fns.update(functions or {})
        return Scope(
            tuple(self.independent) + tuple(n for n in independent if n not in self.independent),
            tuple(self.dependent) + tuple(n for n in dependent if n not in self.dependent),
            tuple(self.params) + tuple(n for n in params if n not in self.params),
            fns,
        )

    def arity(self, name: str) -> int | None:
        sig = self.functions.get(name)
        if sig is None:
            return None
        return sig if isinstance(sig, int) else len(sig)

    def signature_args(self, name: str) -> tuple | None:
        sig = self.functions.get(name)
        if isinstance(sig, int) or sig is None:
            return None
        return tuple(self.resolve_plain(a) for a in sig)

    def resolve_plain(self, name: str) -> Expr:
        if name in self.independent:
            return Sym(name, "indep")
        if name in self.dependent:
            return Jet(name)
        if name in self.params:
            return Sym(name, "param")
        raise KeyError(name)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+)
  | (?P<name>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)?)
  | (?P<primes>'\{[0-9,\s]*\}|'+)
  | (?P<op>\*\*|[-+*/^(),=])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", i, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), i))
        i = m.end()
    out.append(Token("end", "", len(text)))
    return out


def _split_index(suffix: str, names: tuple, pos: int) -> tuple:
    """Split a derivative suffix into declared names, longest match first."""
    out, i = [], 0
    ordered = sorted(names, key=len, reverse=True)
    while i < len(suffix):
        for n in ordered:
            if suffix.startswith(n, i):
                out.append(n)
                i += len(n)
                break
        else:
            raise ParseError(f"cannot split derivative suffix {suffix!r} over {list(names)}", pos)
    return tuple(out)


class _Parser:
    def __init__(self, text: str, scope: Scope):
        self.text = text
        self.scope = scope
        self.toks = tokenize(text)
        self.i = 0
        self.dummies: list[str] = []

    # helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.pos, self.text)

    def take(self, text=None, kind=None) -> Token:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = text or kind
            raise self.error(f"expected {want!r}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def accept(self, text) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    # grammar
    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            t = self.term()
            terms.append(t if op == "+" else mul(-1, t))
        return add(*terms)

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.take().text
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                if rhs.is_zero_literal:
                    raise self.error("division by zero")
                e = mul(e, pow_(rhs, -1))
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            return mul(-1, self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text in ("^", "**"):
            optok = self.take()
            ex = self.unary()
            if not isinstance(ex, Num):
                raise self.error("exponent must be a rational constant (use exp/log otherwise)", optok)
            try:
                return pow_(base, ex.value)
            except ZeroDivisionError:
                raise self.error("zero raised to a negative power", optok) from None
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(Fraction(t.text))
        if self.accept("("):
            e = self.expr()
            self.take(")")
            return e
        if t.kind == "name":
            return self.name()
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def args(self) -> list[Expr]:
        self.take("(")
        out = [self.expr()]
        while self.accept(","):
            out.append(self.expr())
        self.take(")")
        return out

    def name(self) -> Expr:
        t = self.take(kind="name")
        name = t.text
        sc = self.scope
        nxt = self.tok
        if name == "int" and nxt.text == "(":
            return self.integral(t)
        if nxt.kind == "primes":
            self.i += 1
            return self.function_call(name, t, self._prime_derivs(nxt))
        if nxt.text == "(" and "_" not in name:
            if name in ELEMENTARY:
                (a,) = self._exact_args(name, 1, t)
                return func(name, a)
            if name == "sqrt":
                (a,) = self._exact_args(name, 1, t)
                return pow_(a, Fraction(1, 2))
            if sc.arity(name) is not None:
                return self.function_call(name, t, ())
        if name in self.dummies:
            return Sym(name, "dummy")
        if "_" in name:
            base, suffix = name.split("_", 1)
            if base in sc.dependent:
                return Jet(base, _split_index(suffix, sc.independent, t.pos))
            sig = sc.functions.get(base)
            if sig is not None and not isinstance(sig, int):
                names = _split_index(suffix, tuple(sig), t.pos)
                return afun(base, sc.signature_args(base), [sig.index(n) for n in names])
            raise self.error(f"undeclared dependent variable or function {base!r}", t)
        try:
            return sc.resolve_plain(name)
        except KeyError:
            pass
        if name in NAMED_CONSTANTS:
            return Const(name)
        sig = sc.functions.get(name)
        if sig is not None and not isinstance(sig, int):
            return afun(name, sc.signature_args(name))
        raise self.error(f"undeclared identifier {name!r}", t)

    def _exact_args(self, name, n, t):
        a = self.args()
        if len(a) != n:
            raise self.error(f"{name} takes {n} argument(s), got {len(a)}", t)
        return a

    def _prime_derivs(self, tok) -> list[int]:
        if tok.text.startswith("'{"):
            body = tok.text[2:-1].replace(" ", "")
            if not body:
                return []
            return [int(p) - 1 for p in body.split(",")]
        return [0] * len(tok.text)

    def function_call(self, name, t, derivs) -> Expr:
        ar = self.scope.arity(name)
        if ar is None:
            raise self.error(f"undeclared function {name!r}", t)
        if self.tok.text == "(":
            a = self.args()
        else:
            sig = self.scope.signature_args(name)
            if sig is None:
                raise self.error(f"function {name!r} needs arguments", t)
            a = list(sig)
        if len(a) != ar:
            raise self.error(f"function {name!r} takes {ar} argument(s), got {len(a)}", t)
        if any(d < 0 or d >= ar for d in derivs):
            raise self.error(f"derivative position out of range for {name!r}", t)
        return afun(name, a, derivs)

    def integral(self, t) -> Expr:
        self.take("(")
        # locate the dummy name: the token after the first top-level comma
        depth, j = 0, self.i
        while True:
            tk = self.toks[j]
            if tk.kind == "end":
                raise self.error("unterminated int(...)", t)
            if tk.text == "(":
                depth += 1
            elif tk.text == ")":
                depth -= 1
            elif tk.text == "," and depth == 0:
                break
            j += 1
        var_tok = self.toks[j + 1]
        if var_tok.kind != "name" or "_" in var_tok.text:
            raise self.error("int(f, s, a, b): expected integration variable name", var_tok)
        self.dummies.append(var_tok.text)
        try:
            f = self.expr()
        finally:
            self.dummies.pop()
        self.take(",")
        self.take(kind="name")
        self.take(",")
        lo = self.expr()
        self.take(",")
        hi = self.expr()
        self.take(")")
        return integral(f, Sym(var_tok.text, "dummy"), lo, hi)


def parse_expr(text: str, scope) -> Expr:
    """Parse ``text`` against a Scope (or anything exposing ``.scope``)."""
    if not isinstance(scope, Scope):
        scope = scope.scope
    if not text.strip():
        raise ParseError("empty expression", 0, text)
    return _Parser(text, scope).parse()
