"""Numeric cross-checks for symbolic identities.

Everything here works in IEEE doubles on seeded random points and is
deliberately independent of the canonical-form machinery: expressions are
compiled with ``lambdify`` exactly as handed over, without simplification.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from . import symkernel as sk
from .tensor import AltTensor, TensorError

__all__ = [
    "SampleSpec",
    "OracleReport",
    "SamplingError",
    "current_spec",
    "using_spec",
    "sample_points",
    "check_identity",
    "check_scalar_identity",
    "fd_derivative_check",
]

_MODULES = [{"exp": math.exp, "sin": math.sin, "cos": math.cos, "log": math.log, "sqrt": math.sqrt}, "math"]


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    count: int = 100
    box: tuple[float, float] = (-2.0, 2.0)
    bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    seed: int = 20240611
    tol_abs: float = 1e-9
    tol_rel: float = 1e-6
    fd_step: float = 1e-5
    pole_margin: float = 1e-3
    max_retries: int = 50

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sample count must be at least 1")
        for lo, hi in [self.box, *self.bounds.values()]:
            if not lo < hi:
                raise ValueError(f"degenerate sampling interval [{lo}, {hi}]")

    def interval(self, coord: str) -> tuple[float, float]:
        return tuple(self.bounds.get(coord, self.box))

    def with_(self, **changes) -> "SampleSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "box": list(self.box),
            "bounds": {k: list(v) for k, v in sorted(self.bounds.items())},
            "seed": self.seed,
            "tol_abs": self.tol_abs,
            "tol_rel": self.tol_rel,
        }


@dataclass
class OracleReport:
    passed: bool
    points: int
    worst_residual: float
    worst_point: dict[str, float] | None = None
    worst_component: tuple[int, ...] | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "points": self.points,
            "worst_residual": float(f"{self.worst_residual:.6e}"),
            "worst_component": list(self.worst_component) if self.worst_component is not None else None,
        }


_CURRENT: contextvars.ContextVar[SampleSpec] = contextvars.ContextVar("reebmod_sample_spec")


def current_spec() -> SampleSpec:
    """The sampling settings in effect (see :func:`using_spec`)."""
    try:
        return _CURRENT.get()
    except LookupError:
        return SampleSpec()


@contextlib.contextmanager
def using_spec(spec: SampleSpec):
    token = _CURRENT.set(spec)
    try:
        yield spec
    finally:
        _CURRENT.reset(token)


def _compile(coords: Sequence[str], e: sp.Expr):
    syms = [sk.symbol(c) for c in coords]
    return sp.lambdify(syms, e, modules=_MODULES)


def _denominators(exprs: Sequence[sp.Expr]) -> list[sp.Expr]:
    dens = []
    for e in exprs:
        for part in sp.preorder_traversal(e):
            if part.is_Pow and part.exp.is_Integer and part.exp < 0:
                dens.append(part.base)
            elif isinstance(part, sp.log):
                dens.append(part.args[0])
    return dens


def sample_points(coords: Sequence[str], exprs: Sequence[sp.Expr], spec: SampleSpec) -> list[tuple[float, ...]]:
    """Seeded points in the box, rejecting any within ``pole_margin`` of a zero
    of a denominator (or log argument) occurring in ``exprs``."""
    rng = np.random.default_rng(spec.seed)
    lows = np.array([spec.interval(c)[0] for c in coords])
    highs = np.array([spec.interval(c)[1] for c in coords])
    guards = [_compile(coords, d) for d in _denominators(exprs)]
    points: list[tuple[float, ...]] = []
    draws = 0
    limit = spec.count * spec.max_retries
    while len(points) < spec.count:
        if draws >= limit:
            raise SamplingError(f"only {len(points)} admissible points after {draws} draws")
        draws += 1
        pt = tuple(float(v) for v in rng.uniform(lows, highs))
        ok = True
        for g in guards:
            try:
                if abs(g(*pt)) < spec.pole_margin:
                    ok = False
                    break
            except (ZeroDivisionError, ValueError, OverflowError):
                ok = False
                break
        if ok:
            points.append(pt)
    return points


def _tensor_components(t: AltTensor) -> dict[tuple[int, ...], sp.Expr]:
    return {idx: t[idx] for idx in t.all_indices()}


def check_identity(lhs: AltTensor, rhs: AltTensor, spec: SampleSpec | None = None) -> OracleReport:
    """Componentwise |lhs - rhs| <= tol_abs at every sampled point."""
    spec = spec or current_spec()
    if lhs.chart != rhs.chart or lhs.degree != rhs.degree:
        raise TensorError("oracle needs tensors on the same chart and of equal degree")
    if lhs.degree and lhs.variance is not rhs.variance:
        raise TensorError("oracle needs tensors of equal variance")
    a, b = _tensor_components(lhs), _tensor_components(rhs)
    keys = sorted(a)
    return _compare(lhs.chart.coords, keys, a, b, spec)


def check_scalar_identity(
    coords: Sequence[str], lhs: sp.Expr, rhs: sp.Expr, spec: SampleSpec | None = None
) -> OracleReport:
    spec = spec or current_spec()
    return _compare(tuple(coords), [()], {(): sp.sympify(lhs)}, {(): sp.sympify(rhs)}, spec)


def _compare(coords, keys, a, b, spec: SampleSpec) -> OracleReport:
    exprs = [a[k] for k in keys] + [b[k] for k in keys]
    points = sample_points(coords, exprs, spec)
    fa = [_compile(coords, a[k]) for k in keys]
    fb = [_compile(coords, b[k]) for k in keys]
    worst, worst_pt, worst_key = 0.0, None, None
    for pt in points:
        for k, f, g in zip(keys, fa, fb):
            try:
                r = abs(float(f(*pt)) - float(g(*pt)))
            except (ZeroDivisionError, ValueError, OverflowError) as exc:
                raise SamplingError(f"evaluation failed at {pt}: {exc}") from exc
            if not math.isfinite(r):
                r = math.inf
            if r > worst:
                worst, worst_pt, worst_key = r, pt, k
    passed = worst <= spec.tol_abs
    return OracleReport(
        passed=passed,
        points=len(points),
        worst_residual=worst,
        worst_point=dict(zip(coords, worst_pt)) if worst_pt is not None else None,
        worst_component=worst_key,
        message="" if passed else f"residual {worst:.3e} exceeds {spec.tol_abs:.1e}",
    )


def fd_derivative_check(coords: Sequence[str], e: sp.Expr, v: str, spec: SampleSpec | None = None) -> OracleReport:
    """Central finite difference of ``e`` along ``v`` against ``diff(e, v)``.

    Passes when |fd - exact| <= tol_rel * max(1, |exact|) at every point.
    """
    spec = spec or current_spec()
    coords = tuple(coords)
    exact = sk.diff(e, v)
    f = _compile(coords, e)
    g = _compile(coords, exact)
    points = sample_points(coords, [e, exact], spec)
    h = spec.fd_step
    k = coords.index(v)
    worst, worst_pt = 0.0, None
    for pt in points:
        up = list(pt)
        dn = list(pt)
        up[k] += h
        dn[k] -= h
        fd = (f(*up) - f(*dn)) / (2 * h)
        ex = g(*pt)
        r = abs(fd - ex) / max(1.0, abs(ex))
        if r > worst:
            worst, worst_pt = r, pt
    passed = worst <= spec.tol_rel
    return OracleReport(
        passed=passed,
        points=len(points),
        worst_residual=worst,
        worst_point=dict(zip(coords, worst_pt)) if worst_pt is not None else None,
        message="" if passed else f"relative error {worst:.3e} exceeds {spec.tol_rel:.1e}",
    )
