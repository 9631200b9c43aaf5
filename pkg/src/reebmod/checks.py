"""Verdicts for identity checks.

An identity ``lhs == rhs`` between tensors is first decided on canonical
forms.  Undecidable differences fall back on the numeric oracle and are
reported as ``NumericOnlyPass``, never folded into ``SymbolicPass``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import sympy as sp

from . import oracle
from .symkernel import Zeroness
from .tensor import AltTensor, Chart

__all__ = ["Verdict", "CheckResult", "CheckFailed", "compare_tensors", "compare_scalars", "compare_many", "combine"]


class Verdict(enum.Enum):
    SYMBOLIC_PASS = "SymbolicPass"
    NUMERIC_ONLY_PASS = "NumericOnlyPass"
    FAIL = "Fail"
    UNDECIDED = "Undecided"

    @property
    def ok(self) -> bool:
        return self in (Verdict.SYMBOLIC_PASS, Verdict.NUMERIC_ONLY_PASS)


@dataclass
class CheckResult:
    name: str
    tag: str
    verdict: Verdict
    residual: str = "0"
    details: dict[str, Any] = field(default_factory=dict)
    numeric: oracle.OracleReport | None = None

    @property
    def ok(self) -> bool:
        return self.verdict.ok

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "tag": self.tag,
            "verdict": self.verdict.value,
            "residual": self.residual,
        }
        if self.details:
            out["details"] = self.details
        if self.numeric is not None:
            out["numeric"] = self.numeric.to_dict()
        return out


class CheckFailed(AssertionError):
    """An identity that must hold on return did not; carries the result."""

    def __init__(self, result: CheckResult):
        self.result = result
        super().__init__(f"{result.name} [{result.tag}]: {result.verdict.value}, residual {result.residual}")


def compare_tensors(
    name: str,
    tag: str,
    lhs: AltTensor,
    rhs: AltTensor,
    *,
    confirm: bool = False,
    spec: oracle.SampleSpec | None = None,
    details: dict | None = None,
) -> CheckResult:
    """Decide ``lhs == rhs``; with ``confirm`` also run the numeric oracle on
    the two sides as given, even when the symbolic verdict is already Zero."""
    diff = lhs - rhs
    z = diff.is_zero()
    numeric = None
    if z is Zeroness.ZERO:
        verdict = Verdict.SYMBOLIC_PASS
    elif z is Zeroness.NONZERO:
        verdict = Verdict.FAIL
    else:
        numeric = oracle.check_identity(lhs, rhs, spec)
        verdict = Verdict.NUMERIC_ONLY_PASS if numeric.passed else Verdict.FAIL
    if confirm and numeric is None:
        numeric = oracle.check_identity(lhs, rhs, spec)
        if verdict is Verdict.SYMBOLIC_PASS and not numeric.passed:
            # canonical form and sampling disagree: never report a pass
            verdict = Verdict.FAIL
    return CheckResult(name, tag, verdict, diff.render(), dict(details or {}), numeric)


def compare_scalars(
    name: str, tag: str, chart: Chart, lhs: sp.Expr, rhs: sp.Expr, **kwargs
) -> CheckResult:
    return compare_tensors(
        name, tag, AltTensor.scalar(chart, lhs), AltTensor.scalar(chart, rhs), **kwargs
    )


def compare_many(
    name: str, tag: str, chart: Chart, lhs: list[sp.Expr], rhs: list[sp.Expr], **kwargs
) -> CheckResult:
    """Entrywise comparison of two equally long lists of functions."""
    if len(lhs) != len(rhs):
        raise ValueError("lists of different length")
    parts = [compare_scalars(f"{name}[{i}]", tag, chart, a, b, **kwargs) for i, (a, b) in enumerate(zip(lhs, rhs))]
    failing = [p for p in parts if not p.ok]
    result = combine(name, tag, parts or [CheckResult(name, tag, Verdict.SYMBOLIC_PASS)])
    result.details = {"entries": len(parts), "failing": [p.to_dict() for p in failing]} if failing else {}
    return result


def combine(name: str, tag: str, parts: list[CheckResult], details: dict | None = None) -> CheckResult:
    """Fold sub-checks: any Fail fails, any Undecided is Undecided, any
    numeric-only pass downgrades the whole to NumericOnlyPass."""
    verdicts = [p.verdict for p in parts]
    if Verdict.FAIL in verdicts:
        verdict = Verdict.FAIL
    elif Verdict.UNDECIDED in verdicts:
        verdict = Verdict.UNDECIDED
    elif Verdict.NUMERIC_ONLY_PASS in verdicts:
        verdict = Verdict.NUMERIC_ONLY_PASS
    else:
        verdict = Verdict.SYMBOLIC_PASS
    failing = [p for p in parts if not p.ok]
    residual = "; ".join(f"{p.name}: {p.residual}" for p in failing) if failing else "0"
    info = dict(details or {})
    info["steps"] = [p.to_dict() for p in parts]
    return CheckResult(name, tag, verdict, residual, info)
