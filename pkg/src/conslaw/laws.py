"""Multiplier sets and conservation laws."""
from __future__ import annotations

from dataclasses import dataclass, field

from .jetexpr.calculus import substitute, total_derivative
from .jetexpr.expr import ZERO, Expr, add, as_expr, mul
from .jetexpr.system import SystemDef


@dataclass(frozen=True)
class MultiplierSet:
    """Factors Lambda^s, one per equation of ``system``."""

    values: tuple
    system: SystemDef

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_expr(v) for v in self.values))
        if len(self.values) != len(self.system.equations):
            raise ValueError(f"{len(self.values)} multipliers for {len(self.system.equations)} equations")

    @classmethod
    def parse(cls, texts, system: SystemDef) -> "MultiplierSet":
        return cls(tuple(system.parse(t) for t in texts), system)

    def combination(self) -> Expr:
        """Lambda^s G_s."""
        return add(*(mul(l, G) for l, G in zip(self.values, self.system.equations)))

    def scaled(self, c) -> "MultiplierSet":
        return MultiplierSet(tuple(mul(c, v) for v in self.values), self.system)

    def on_solutions(self) -> tuple:
        return tuple(substitute(v, self.system.solved) for v in self.values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __str__(self):
        return "[" + ", ".join(str(v) for v in self.values) + "]"


@dataclass(frozen=True)
class ConservationLaw:
    """Densities Phi^i keyed by independent variable, with provenance."""

    densities: dict
    multipliers: MultiplierSet | None = None
    route: str = "supplied"
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "densities", {k: as_expr(v) for k, v in self.densities.items()})

    def component(self, x: str) -> Expr:
        return self.densities.get(x, ZERO)

    def divergence(self) -> Expr:
        return add(*(total_derivative(v, x) for x, v in self.densities.items()))

    def __str__(self):
        return ", ".join(f"Phi^{x} = {v}" for x, v in self.densities.items())
