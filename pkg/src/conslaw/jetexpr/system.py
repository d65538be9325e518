from __future__ import annotations

from dataclasses import dataclass, field

from .expr import Expr, Jet, Sym
from .parse import Scope, parse_expr


@dataclass(frozen=True)
class SystemDef:
    """A PDE system G_alpha[u] = 0 with optional solved-form leading derivatives."""

    independent: tuple
    dependent: tuple
    equations: tuple = ()
    params: tuple = ()
    functions: dict = field(default_factory=dict)
    solved: dict = field(default_factory=dict)
    name: str = ""

    @property
    def scope(self) -> Scope:
        return Scope(tuple(self.independent), tuple(self.dependent), tuple(self.params), dict(self.functions))

    def parse(self, text: str) -> Expr:
        return parse_expr(text, self.scope)

    @classmethod
    def from_strings(cls, independent, dependent, equations=(), params=(), functions=None,
                     solved=None, name="") -> "SystemDef":
        """Convenience builder: ``functions`` maps name to a signature string list or arity."""
        independent, dependent, params = tuple(independent), tuple(dependent), tuple(params)
        functions = dict(functions or {})
        sys = cls(independent, dependent, (), params, functions, {}, name)
        eqs = tuple(sys.parse(e) for e in equations)
        sol = {}
        for lhs, rhs in (solved or {}).items():
            j = sys.parse(lhs)
            if not isinstance(j, Jet):
                raise ValueError(f"solved-form left side {lhs!r} is not a jet variable")
            sol[j] = sys.parse(rhs)
        return cls(independent, dependent, eqs, params, functions, sol, name)

    def with_equations(self, equations, solved=None, name=None) -> "SystemDef":
        return SystemDef(self.independent, self.dependent, tuple(equations), self.params,
                         dict(self.functions), dict(self.solved if solved is None else solved),
                         self.name if name is None else name)

    def indep_syms(self) -> tuple:
        return tuple(Sym(x, "indep") for x in self.independent)

    def dep_jets(self) -> tuple:
        return tuple(Jet(u) for u in self.dependent)

    def __hash__(self):
        return hash((self.independent, self.dependent, self.equations, self.params, self.name))
