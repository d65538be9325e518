"""Seeded randomized identity testing over jet space.

An expression in jet coordinates is an identity iff it vanishes for all
values of the coordinates, so sampling at random points decides it up to a
measure-zero failure set.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .expr import Expr, as_expr, atoms
from .evaluate import DomainError, JetPoint, eval_at, magnitude


@dataclass(frozen=True)
class OracleConfig:
    seed: int = 24601
    samples: int = 64
    rel_tol: float = 1e-9
    sample_range: tuple = ((-2.0, -0.5), (0.5, 2.0))
    max_retries: int = 50

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")

    def as_dict(self) -> dict:
        return {"seed": self.seed, "samples": self.samples, "rel_tol": self.rel_tol}


DEFAULT = OracleConfig()


class OracleDomainError(RuntimeError):
    """Every attempt to place a sample point hit a domain error."""


class DegenerateError(ValueError):
    pass


@dataclass
class ZeroVerdict:
    zero: bool
    residuals: list = field(default_factory=list)
    witness: dict | None = None
    residual: float = 0.0

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def median_residual(self) -> float:
        return statistics.median(self.residuals) if self.residuals else 0.0

    def __bool__(self):
        return self.zero


@dataclass
class ProportionalVerdict:
    proportional: bool
    c: float | None = None
    max_residual: float = 0.0

    @property
    def c_rational(self) -> Fraction | None:
        if self.c is None:
            return None
        f = Fraction(self.c).limit_denominator(1000)
        return f if abs(float(f) - self.c) <= 1e-9 * max(1.0, abs(self.c)) else None

    def __bool__(self):
        return self.proportional


def sample_atoms(exprs: Sequence[Expr]) -> list:
    out = set()
    for e in exprs:
        out |= atoms(e)
    return sorted(out, key=lambda a: a.sort_key)


def _draw(rng: np.random.Generator, cfg: OracleConfig) -> float:
    lo, hi = cfg.sample_range[int(rng.integers(len(cfg.sample_range)))]
    return float(rng.uniform(lo, hi))


def sample_points(exprs: Sequence[Expr], cfg: OracleConfig = DEFAULT, stream: int = 0):
    """Yield (point, values) with every expression evaluated; resamples on domain errors."""
    syms = sample_atoms(exprs)
    for k in range(cfg.samples):
        for attempt in range(cfg.max_retries + 1):
            rng = np.random.default_rng([cfg.seed, stream, k, attempt])
            pt = JetPoint({a: _draw(rng, cfg) for a in syms}, seed=int(rng.integers(2**62)))
            try:
                vals = [eval_at(e, pt) for e in exprs]
            except DomainError:
                continue
            yield pt, vals
            break
        else:
            raise OracleDomainError(f"sample {k}: every retry hit a domain error")


def _relative(e: Expr, value: float, pt: JetPoint) -> float:
    try:
        scale = magnitude(e, pt)
    except DomainError:
        scale = abs(value)
    return abs(value) / max(1.0, scale)


def _describe(pt: JetPoint) -> dict:
    return {str(k): v for k, v in sorted(pt.values.items(), key=lambda kv: kv[0].sort_key)}


def is_zero(e, cfg: OracleConfig = DEFAULT, stream: int = 0) -> ZeroVerdict:
    """Decide whether ``e`` (an Expr or a list of Exprs) vanishes identically."""
    exprs = [as_expr(x) for x in (e if isinstance(e, (list, tuple)) else [e])]
    exprs = [x for x in exprs if not x.is_zero_literal]
    if not exprs:
        return ZeroVerdict(True, [0.0] * cfg.samples)
    residuals = []
    worst, witness = -1.0, None
    for pt, vals in sample_points(exprs, cfg, stream):
        r = max(_relative(x, v, pt) for x, v in zip(exprs, vals))
        residuals.append(r)
        if r > worst:
            worst, witness = r, pt
    ok = max(residuals) < cfg.rel_tol
    return ZeroVerdict(ok, residuals, None if ok else _describe(witness), max(residuals))


def is_proportional(a: Sequence[Expr], b: Sequence[Expr], cfg: OracleConfig = DEFAULT) -> ProportionalVerdict:
    """Is there one constant c with a - c*b identically zero (componentwise)?"""
    a = [as_expr(x) for x in a]
    b = [as_expr(x) for x in b]
    if len(a) != len(b):
        raise ValueError("lists must have the same length")
    exprs = a + b
    n = len(a)
    rows = [vals for _, vals in sample_points(exprs, cfg, stream=101)]
    A = np.array([v[:n] for v in rows])
    B = np.array([v[n:] for v in rows])
    bb = float((B * B).sum())
    c = float((A * B).sum() / bb) if bb > 0 else 0.0
    fit = _fit_residual(A, B, c)
    if fit >= cfg.rel_tol:
        if bb == 0 and not (A != 0).any():
            raise DegenerateError("both lists vanish identically")
        return ProportionalVerdict(False, None, fit)
    za = is_zero(a, cfg, stream=102).zero
    zb = is_zero(b, cfg, stream=103).zero
    if za and zb:
        raise DegenerateError("both lists vanish identically")
    if za or zb:
        return ProportionalVerdict(False, None, fit)
    # verify on fresh samples
    worst = 0.0
    for _, vals in sample_points(exprs, cfg, stream=104):
        worst = max(worst, _fit_residual(np.array([vals[:n]]), np.array([vals[n:]]), c))
    ok = worst < cfg.rel_tol
    return ProportionalVerdict(ok, c if ok else None, worst)


def _fit_residual(A, B, c) -> float:
    scale = np.maximum(1.0, np.maximum(np.abs(A), np.abs(c * B)))
    return float((np.abs(A - c * B) / scale).max())
