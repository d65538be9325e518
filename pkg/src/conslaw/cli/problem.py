"""Problem files: named blocks of systems, multipliers, transformations and candidates.

Grammar::

    file      := (let | block | comment | blank)*
    block     := KIND NAME ['for' NAME] NEWLINE line* 'end'
    line      := KEY [rest-of-line]
    let       := 'let' NAME '=' EXPR          (textual macro, parenthesized on use)

Expressions use the jet DSL.  Lists are comma separated at parenthesis depth 0.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..dcm import Ansatz
from ..jetexpr.expr import Expr, Jet
from ..jetexpr.parse import ParseError, Scope, parse_expr
from ..jetexpr.system import SystemDef
from ..laws import ConservationLaw, MultiplierSet
from ..varcalc import Generator, Lagrangian

KINDS = ("system", "lagrangian", "multipliers", "densities", "transform", "generator", "ansatz",
         "equations", "candidate", "mform", "classify", "nlt")
NEEDS_SYSTEM = {"multipliers", "densities", "transform", "ansatz", "equations", "candidate", "mform"}
_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*$")


class ProblemError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None, path: str = ""):
        self.line, self.col, self.path = line, col, path
        where = ""
        if line is not None:
            where = f"{path or '<problem>'}:{line}" + (f":{col}" if col is not None else "") + ": "
        super().__init__(where + message)


@dataclass
class Line:
    no: int
    key: str
    rest: str
    col: int  # 1-based column where ``rest`` starts


@dataclass
class Block:
    kind: str
    name: str
    target: str | None
    line: int
    lines: list = field(default_factory=list)
    value: object = None


def split_list(text: str) -> list:
    """Split on commas outside parentheses and braces."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    last = "".join(cur).strip()
    if last or out:
        out.append(last)
    return out


def _split_eq(text: str, ln: Line, path: str) -> tuple:
    if "=" not in text:
        raise ProblemError("expected 'name = expression'", ln.no, ln.col, path)
    lhs, rhs = text.split("=", 1)
    return lhs.strip(), rhs.strip()


class ProblemFile:
    """Parsed and resolved blocks, keyed by name."""

    def __init__(self, path: str = ""):
        self.path = path
        self.blocks: dict = {}
        self.text = ""

    # -- lookup
    def get(self, name: str, kind=None):
        b = self.blocks.get(name)
        if b is None:
            raise ProblemError(f"no block named {name!r}")
        kinds = (kind,) if isinstance(kind, str) else kind
        if kinds and b.kind not in kinds:
            raise ProblemError(f"{name!r} is a {b.kind} block, expected {' or '.join(kinds)}")
        return b.value

    def block(self, name: str) -> Block:
        if name not in self.blocks:
            raise ProblemError(f"no block named {name!r}")
        return self.blocks[name]

    def names(self, kind: str | None = None) -> list:
        return [n for n, b in self.blocks.items() if kind is None or b.kind == kind]

    def merge(self, other: "ProblemFile") -> "ProblemFile":
        for n, b in other.blocks.items():
            if n in self.blocks:
                raise ProblemError(f"block {n!r} defined in more than one file", b.line, None, other.path)
            self.blocks[n] = b
        self.text += other.text
        return self


def parse_problem_text(text: str, path: str = "") -> ProblemFile:
    pf = ProblemFile(path)
    pf.text = text
    macros: list = []
    cur: Block | None = None
    local: list = []
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        words = body.strip().split(None, 1)
        key, rest = words[0], (words[1] if len(words) > 1 else "")
        col = body.find(rest, indent + len(key)) + 1 if rest else indent + len(key) + 1
        if key == "let":
            name, expr = _split_eq(rest, Line(no, key, rest, col), path)
            if not _NAME.match(name):
                raise ProblemError(f"bad macro name {name!r}", no, col, path)
            (local if cur else macros).append((name, expr))
            continue
        if cur is None:
            if key not in KINDS:
                raise ProblemError(f"unknown block kind {key!r}", no, indent + 1, path)
            parts = rest.split()
            if not parts or not _NAME.match(parts[0]):
                raise ProblemError(f"{key} block needs a name", no, col, path)
            target = None
            if len(parts) >= 3 and parts[1] == "for":
                target = parts[2]
            elif len(parts) != 1:
                raise ProblemError("expected 'KIND NAME [for NAME]'", no, col, path)
            if parts[0] in pf.blocks:
                raise ProblemError(f"duplicate definition of {parts[0]!r}", no, col, path)
            cur = Block(key, parts[0], target, no)
            local = []
            continue
        if key == "end":
            cur.value = _resolve(cur, pf, list(macros) + local, path)
            pf.blocks[cur.name] = cur
            cur = None
            continue
        cur.lines.append(Line(no, key, rest, col))
    if cur is not None:
        raise ProblemError(f"block {cur.name!r} is missing 'end'", cur.line, None, path)
    if not pf.blocks:
        raise ProblemError("no blocks", None, None, path)
    return pf


def parse_problem_file(path) -> ProblemFile:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}") from None
    return parse_problem_text(text, str(path))


def fixture_paths() -> list:
    root = resources.files("conslaw") / "fixtures"
    return sorted((p for p in root.iterdir() if p.name.endswith(".prob")), key=lambda p: p.name)


def load_fixtures() -> ProblemFile:
    pf = None
    for p in fixture_paths():
        one = parse_problem_text(p.read_text(), p.name)
        pf = one if pf is None else pf.merge(one)
    return pf


# --------------------------------------------------------------------------
# block resolution


class _Ctx:
    def __init__(self, block: Block, pf: ProblemFile, macros: list, path: str):
        self.block, self.pf, self.macros, self.path = block, pf, macros, path

    def err(self, msg: str, ln: Line | None = None, col: int | None = None):
        return ProblemError(msg, ln.no if ln else self.block.line, col if col is not None else (ln.col if ln else None),
                            self.path)

    def expand(self, text: str) -> str:
        for name, body in reversed(self.macros):
            text = re.sub(rf"(?<![A-Za-z0-9_']){re.escape(name)}(?![A-Za-z0-9_'])", f"({body})", text)
        return text

    def expr(self, text: str, scope: Scope, ln: Line, offset: int = 0) -> Expr:
        src = self.expand(text)
        try:
            return parse_expr(src, scope)
        except ParseError as exc:
            col = ln.col + offset + (exc.pos if exc.pos is not None and src == text else 0)
            raise self.err(f"{exc.message} in {text!r}", ln, col) from None

    def exprs(self, text: str, scope: Scope, ln: Line) -> list:
        return [self.expr(t, scope, ln) for t in split_list(text)]

    def ref(self, name: str, kinds, ln: Line | None = None):
        b = self.pf.blocks.get(name)
        if b is None:
            raise self.err(f"unresolved reference {name!r}", ln)
        if kinds and b.kind not in kinds:
            raise self.err(f"{name!r} is a {b.kind} block, expected {' or '.join(kinds)}", ln)
        return b.value

    def system(self) -> SystemDef:
        if self.block.target is None:
            raise self.err(f"{self.block.kind} block needs 'for SYSTEM'")
        val = self.ref(self.block.target, ("system", "lagrangian"))
        return val.system if isinstance(val, Lagrangian) else val


def _parse_functions(items: list, ctx: _Ctx, ln: Line) -> dict:
    out = {}
    for it in items:
        if not it.strip():
            continue
        m = re.fullmatch(r"([A-Za-z][A-Za-z0-9_]*)\s*(?:/\s*(\d+)|\(([^)]*)\))", it.strip())
        if not m:
            raise ctx.err(f"bad function declaration {it!r} (use F/1 or alpha(x,t,u,v))", ln)
        if m.group(2):
            out[m.group(1)] = int(m.group(2))
        else:
            out[m.group(1)] = tuple(a.strip() for a in m.group(3).split(",") if a.strip())
    return out


def _names(rest: str) -> tuple:
    return tuple(w for w in re.split(r"[\s,]+", rest.strip()) if w)


def _resolve(b: Block, pf: ProblemFile, macros: list, path: str):
    ctx = _Ctx(b, pf, macros, path)
    if b.kind in NEEDS_SYSTEM and b.target is None:
        raise ctx.err(f"{b.kind} block needs 'for SYSTEM'")
    return _RESOLVERS[b.kind](b, ctx)


def _decls(b: Block, ctx: _Ctx):
    indep, dep, params, funcs = (), (), (), {}
    other = []
    for ln in b.lines:
        if ln.key == "independent":
            indep = _names(ln.rest)
        elif ln.key == "dependent":
            dep = _names(ln.rest)
        elif ln.key == "params":
            params = _names(ln.rest)
        elif ln.key == "functions":
            funcs.update(_parse_functions(split_list(ln.rest), ctx, ln))
        else:
            other.append(ln)
    return indep, dep, params, funcs, other


def _system(b: Block, ctx: _Ctx) -> SystemDef:
    indep, dep, params, funcs, other = _decls(b, ctx)
    if not indep or not dep:
        raise ctx.err("system needs 'independent' and 'dependent' declarations")
    base = SystemDef(indep, dep, (), params, funcs, {}, b.name)
    sc = base.scope
    eqs, solved = [], {}
    for ln in other:
        if ln.key == "eq":
            eqs.append(ctx.expr(ln.rest, sc, ln))
        elif ln.key == "solve":
            lhs, rhs = _split_eq(ln.rest, ln, ctx.path)
            j = ctx.expr(lhs, sc, ln)
            if not isinstance(j, Jet):
                raise ctx.err(f"solved-form left side {lhs!r} is not a jet", ln)
            solved[j] = ctx.expr(rhs, sc, ln)
        else:
            raise ctx.err(f"unknown system directive {ln.key!r}", ln)
    if not eqs:
        raise ctx.err("system has no equations")
    return SystemDef(indep, dep, tuple(eqs), params, funcs, solved, b.name)


def _lagrangian(b: Block, ctx: _Ctx) -> Lagrangian:
    indep, dep, params, funcs, other = _decls(b, ctx)
    sys = SystemDef(indep, dep, (), params, funcs, {}, b.name)
    L = None
    for ln in other:
        if ln.key == "L":
            L = ctx.expr(ln.rest.lstrip("= ").strip(), sys.scope, ln)
        else:
            raise ctx.err(f"unknown lagrangian directive {ln.key!r}", ln)
    if L is None:
        raise ctx.err("lagrangian block needs 'L = expression'")
    return Lagrangian(L, sys)


def _multipliers(b: Block, ctx: _Ctx) -> MultiplierSet:
    sys = ctx.system()
    vals = []
    for ln in b.lines:
        if ln.key != "m":
            raise ctx.err(f"unknown multipliers directive {ln.key!r}", ln)
        vals.append(ctx.expr(ln.rest, sys.scope, ln))
    if len(vals) != len(sys.equations):
        raise ctx.err(f"arity mismatch: {len(vals)} multipliers for {len(sys.equations)} equations")
    return MultiplierSet(tuple(vals), sys)


def _densities(b: Block, ctx: _Ctx) -> ConservationLaw:
    sys = ctx.system()
    dens, mult = {}, None
    for ln in b.lines:
        if ln.key == "phi":
            x, rhs = _split_eq(ln.rest, ln, ctx.path)
            if x not in sys.independent:
                raise ctx.err(f"{x!r} is not an independent variable of {sys.name}", ln)
            dens[x] = ctx.expr(rhs, sys.scope, ln)
        elif ln.key == "mult":
            mult = ctx.ref(ln.rest.strip(), ("multipliers",), ln)
        else:
            raise ctx.err(f"unknown densities directive {ln.key!r}", ln)
    return ConservationLaw(dens, mult, "supplied")


@dataclass
class TransformSpec:
    system: SystemDef
    forward: dict
    inverse: dict | None
    eps: str | None
    A: list | None


def _transform(b: Block, ctx: _Ctx) -> TransformSpec:
    sys = ctx.system()
    eps = None
    for ln in b.lines:
        if ln.key == "eps":
            eps = ln.rest.strip()
    sc = sys.scope.extended(params=(eps,) if eps else ())
    fw, inv, A = {}, {}, []
    coords = set(sys.independent) | set(sys.dependent)
    for ln in b.lines:
        if ln.key == "eps":
            continue
        if ln.key in ("map", "inverse"):
            name, rhs = _split_eq(ln.rest, ln, ctx.path)
            if name not in coords:
                raise ctx.err(f"{name!r} is not a coordinate of {sys.name}", ln)
            (fw if ln.key == "map" else inv)[name] = ctx.expr(rhs, sc, ln)
        elif ln.key == "A":
            A.append(ctx.exprs(ln.rest, sc, ln))
        else:
            raise ctx.err(f"unknown transform directive {ln.key!r}", ln)
    missing = coords - set(fw)
    if missing:
        raise ctx.err(f"transform misses maps for {sorted(missing)}")
    return TransformSpec(sys, fw, inv or None, eps, A or None)


@dataclass
class GeneratorSpec:
    generator: Generator
    system: SystemDef
    unknowns: dict
    f: dict


def _generator(b: Block, ctx: _Ctx) -> GeneratorSpec:
    sys = ctx.system()
    unknowns = {}
    for ln in b.lines:
        if ln.key == "unknown":
            unknowns.update(_parse_functions(split_list(ln.rest), ctx, ln))
    sc = sys.scope.extended(functions=unknowns)
    kind, xi, eta, f = "point", {}, {}, {}
    for ln in b.lines:
        if ln.key in ("unknown", "reference"):
            continue
        if ln.key == "kind":
            kind = ln.rest.strip()
            continue
        if ln.key not in ("xi", "eta", "f"):
            raise ctx.err(f"unknown generator directive {ln.key!r}", ln)
        name, rhs = _split_eq(ln.rest, ln, ctx.path)
        pool = sys.dependent if ln.key == "eta" else sys.independent
        if name not in pool:
            raise ctx.err(f"{name!r} is not a valid index for {ln.key}", ln)
        {"xi": xi, "eta": eta, "f": f}[ln.key][name] = ctx.expr(rhs, sc, ln)
    try:
        g = Generator.point(xi, eta) if kind == "point" else Generator.evolutionary(eta)
    except ValueError as exc:
        raise ctx.err(str(exc)) from None
    return GeneratorSpec(g, sys, unknowns, f)


def _ansatz(b: Block, ctx: _Ctx) -> Ansatz:
    ctx.system()
    unknowns, mults = {}, []
    for ln in b.lines:
        if ln.key == "unknown":
            unknowns.update(_parse_functions(split_list(ln.rest), ctx, ln))
        elif ln.key == "m":
            mults.append(ctx.expand(ln.rest))
        elif ln.key == "reference":
            continue
        else:
            raise ctx.err(f"unknown ansatz directive {ln.key!r}", ln)
    return Ansatz(unknowns, tuple(mults))


@dataclass
class EquationSet:
    system: SystemDef
    unknowns: dict
    rows: list


def _equations(b: Block, ctx: _Ctx) -> EquationSet:
    sys = ctx.system()
    unknowns = {}
    for ln in b.lines:
        if ln.key == "unknown":
            unknowns.update(_parse_functions(split_list(ln.rest), ctx, ln))
    sc = sys.scope.extended(functions=unknowns)
    rows = []
    for ln in b.lines:
        if ln.key == "unknown":
            continue
        if ln.key != "row":
            raise ctx.err(f"unknown equations directive {ln.key!r}", ln)
        rows.append(ctx.expr(ln.rest, sc, ln))
    return EquationSet(sys, unknowns, rows)


@dataclass
class CandidateSpec:
    system: SystemDef
    target: SystemDef
    alpha: list
    beta: list
    X: list
    psi: list
    samples: list
    linear: SystemDef | None
    solutions: list


def _candidate(b: Block, ctx: _Ctx) -> CandidateSpec:
    sys = ctx.system()
    sc = sys.scope
    target = linear = None
    for ln in b.lines:
        if ln.key == "target":
            target = ctx.ref(ln.rest.strip(), ("system",), ln)
        elif ln.key == "linear":
            linear = ctx.ref(ln.rest.strip(), ("system",), ln)
    if target is None:
        raise ctx.err("candidate needs 'target LINEAR_SYSTEM'")
    alpha, beta, X, psi, samples, sols = [], [], [], [], [], []
    for ln in b.lines:
        if ln.key in ("target", "linear"):
            continue
        if ln.key == "alpha":
            alpha.append(ctx.exprs(ln.rest, sc, ln))
        elif ln.key == "beta":
            beta.append(ctx.exprs(ln.rest, sc, ln))
        elif ln.key == "X":
            X = ctx.exprs(ln.rest, sc, ln)
        elif ln.key == "psi":
            psi = ctx.exprs(ln.rest, sc, ln)
        elif ln.key == "sample":
            samples.append(ctx.exprs(ln.rest, target.scope, ln))
        elif ln.key == "solution":
            if linear is None:
                raise ctx.err("'solution' needs a preceding 'linear' target", ln)
            sols.append(ctx.exprs(ln.rest, linear.scope, ln))
        else:
            raise ctx.err(f"unknown candidate directive {ln.key!r}", ln)
    return CandidateSpec(sys, target, alpha, beta, X, psi, samples, linear, sols)


@dataclass
class MFormSpec:
    system: SystemDef
    adjoint: SystemDef
    A: list
    X: list
    samples: list


def _mform(b: Block, ctx: _Ctx) -> MFormSpec:
    sys = ctx.system()
    adj = None
    for ln in b.lines:
        if ln.key == "adjoint":
            adj = ctx.ref(ln.rest.strip(), ("system",), ln)
    if adj is None:
        raise ctx.err("mform needs 'adjoint LINEAR_SYSTEM'")
    A, X, samples = [], [], []
    for ln in b.lines:
        if ln.key == "adjoint":
            continue
        if ln.key == "A":
            A.append(ctx.exprs(ln.rest, sys.scope, ln))
        elif ln.key == "X":
            X = ctx.exprs(ln.rest, sys.scope, ln)
        elif ln.key == "sample":
            samples.append(ctx.exprs(ln.rest, adj.scope, ln))
        else:
            raise ctx.err(f"unknown mform directive {ln.key!r}", ln)
    return MFormSpec(sys, adj, A, X, samples)


@dataclass
class PairSpec:
    F: Expr
    G: Expr
    c: list | None
    scope: Scope


def _fg(b: Block, ctx: _Ctx) -> PairSpec:
    params, funcs = (), {}
    for ln in b.lines:
        if ln.key == "params":
            params = _names(ln.rest)
        elif ln.key == "functions":
            funcs.update(_parse_functions(split_list(ln.rest), ctx, ln))
    sc = Scope(("t", "x"), ("u",), params, funcs)
    F = G = c = None
    for ln in b.lines:
        if ln.key in ("params", "functions"):
            continue
        if ln.key in ("F", "G", "c"):
            rhs = ln.rest.lstrip("= ").strip()
            if ln.key == "c":
                c = ctx.exprs(rhs, sc, ln)
                if len(c) != 5:
                    raise ctx.err("c needs five constants", ln)
            elif ln.key == "F":
                F = ctx.expr(rhs, sc, ln)
            else:
                G = ctx.expr(rhs, sc, ln)
        else:
            raise ctx.err(f"unknown {b.kind} directive {ln.key!r}", ln)
    if F is None or G is None:
        raise ctx.err(f"{b.kind} block needs F and G")
    if b.kind == "nlt" and c is None:
        raise ctx.err("nlt block needs 'c = c1, c2, c3, c4, c5'")
    return PairSpec(F, G, c, sc)


_RESOLVERS = {
    "system": _system, "lagrangian": _lagrangian, "multipliers": _multipliers, "densities": _densities,
    "transform": _transform, "generator": _generator, "ansatz": _ansatz, "equations": _equations,
    "candidate": _candidate, "mform": _mform, "classify": _fg, "nlt": _fg,
}
