"""Expression kernel over jet coordinates."""
from .calculus import (
    CyclicBindingError,
    NonPolynomialError,
    bind_function,
    collect_monomials,
    diff,
    expand,
    substitute,
    total_derivative,
    total_derivative_multi,
)
from .evaluate import DomainError, JetPoint, UnassignedSymbolError, eval_at
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
    normalize,
    pow_,
)
from .oracle import (
    DEFAULT,
    DegenerateError,
    OracleConfig,
    OracleDomainError,
    ProportionalVerdict,
    ZeroVerdict,
    is_proportional,
    is_zero,
)
from .parse import ParseError, Scope, parse_expr
from .printer import to_str
from .system import SystemDef

__all__ = [name for name in dir() if not name.startswith("_")]
