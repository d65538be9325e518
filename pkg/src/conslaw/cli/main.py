"""Command-line entry point: ``conslaw COMMAND [options]``.

Exit codes: 0 every verdict passes, 1 some verdict fails, 2 usage or
problem-file error, 3 internal error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import traceback
from dataclasses import dataclass, field

from ..jetexpr.oracle import OracleConfig
from ..verdict import Check, Verdict
from .problem import ProblemError, ProblemFile, load_fixtures, parse_problem_file

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class Report:
    command: str
    digest: str
    oracle: dict
    verdict: Verdict = field(default_factory=Verdict)
    derived: dict = field(default_factory=dict)
    error: str | None = None
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and self.verdict.passed

    @property
    def label(self) -> str:
        return "fail" if self.error else self.verdict.label

    def as_dict(self) -> dict:
        v = self.verdict
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "digest": self.digest,
            "verdict": self.label,
            "max_residual": v.max_residual,
            "median_residual": v.median_residual,
            "checks": [c.as_dict() for c in v.checks],
            "notes": list(v.notes),
            "derived": self.derived,
            "error": self.error,
            "oracle": self.oracle,
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, default=str)

    @classmethod
    def from_json(cls, text: str) -> dict:
        return json.loads(text)

    def to_text(self) -> str:
        lines = [f"{self.command}: {self.label}"]
        if self.error:
            lines.append(f"  error: {self.error}")
        for c in self.verdict.checks:
            mark = "ok " if c.passed else "BAD"
            extra = f"  ({c.note})" if c.note else ""
            lines.append(f"  [{mark}] {c.name}  max residual {c.max_residual:.3g}{extra}")
            if c.witness and not c.passed:
                lines.append(f"        witness: {c.witness}")
        for n in self.verdict.notes:
            lines.append(f"  note: {n}")
        for k, val in self.derived.items():
            if isinstance(val, (list, tuple)):
                lines.append(f"  {k}:")
                lines.extend(f"    {x}" for x in val)
            elif isinstance(val, dict):
                lines.append(f"  {k}:")
                lines.extend(f"    {a} = {b}" for a, b in val.items())
            else:
                lines.append(f"  {k}: {val}")
        lines.append(f"  oracle: seed {self.oracle['seed']}, samples {self.oracle['samples']}, "
                     f"tol {self.oracle['rel_tol']:g}; {self.wall_time:.2f} s")
        return "\n".join(lines)


def _digest(command: str, args: dict, problem: ProblemFile) -> str:
    h = hashlib.sha256()
    h.update(command.encode())
    h.update(json.dumps(args, sort_keys=True, default=str).encode())
    h.update(problem.text.encode())
    return h.hexdigest()[:16]


def build_parser() -> argparse.ArgumentParser:
    from .commands import COMMANDS

    p = argparse.ArgumentParser(prog="conslaw", description="Symbolic workbench for conservation laws of PDEs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", "-p", help="problem file (default: the shipped fixture library)")
    common.add_argument("--seed", type=int, default=24601)
    common.add_argument("--samples", type=int, default=64)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--json", action="store_true", help="emit the JSON report")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (fn, opts, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        for flag, kw in opts:
            sp.add_argument(flag, **kw)
    return p


def run(command: str, args: dict, problem: ProblemFile, cfg: OracleConfig) -> Report:
    from .commands import COMMANDS

    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    rep = Report(command, _digest(command, args, problem), cfg.as_dict())
    t0 = time.perf_counter()
    try:
        COMMANDS[command][0](problem, args, cfg, rep)
    except (ProblemError, UsageError):
        raise
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
        rep.verdict.add(Check("operation", False, note=rep.error))
    rep.wall_time = round(time.perf_counter() - t0, 4)
    return rep


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = OracleConfig(seed=ns.seed, samples=ns.samples, rel_tol=ns.tol)
        problem = parse_problem_file(ns.problem) if ns.problem else load_fixtures()
        args = {k: v for k, v in vars(ns).items()
                if k not in ("command", "problem", "seed", "samples", "tol", "json")}
        rep = run(ns.command, args, problem, cfg)
    except (ProblemError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:  # noqa: BLE001 - last-resort boundary
        traceback.print_exc()
        return EXIT_INTERNAL
    print(rep.to_json() if ns.json else rep.to_text())
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
