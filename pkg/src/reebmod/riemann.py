"""Metrics on a foliated chart: Levi-Civita connection, orthogonal
splitting, tangent mean curvature of the normal distribution and the
orthogonal volume form.

Traces over the normal bundle use an un-normalized normal frame with the
inverse of its Gram matrix, which keeps everything rational; only the
orthogonal volume form needs a square root.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import sympy as sp

from . import linalg, oracle
from .checks import CheckResult, Verdict, combine, compare_many, compare_tensors
from .foliation import (
    FoliationFrame,
    LeafwiseForm,
    exactness_probe,
    leafwise_function_differential,
    reeb_form,
    spot_check_rank,
)
from .symkernel import Zeroness, canonical
from .symkernel import is_zero as sk_is_zero
from .tensor import AltTensor, Chart, TensorError, Variance, ext_d, lie_derivative, wedge

__all__ = [
    "Metric",
    "OrthogonalSplit",
    "PreconditionError",
    "MeanCurvature",
    "christoffel",
    "levi_civita_check",
    "orthogonal_complement",
    "mean_curvature",
    "eta_form",
    "normal_trace_check",
    "eta_reeb_check",
    "conformal_rescale_check",
    "closed_defining_form_check",
    "polynomial_basis",
]

MV, FORM = Variance.MULTIVECTOR, Variance.FORM


class PreconditionError(ValueError):
    def __init__(self, message: str, residual: str):
        self.residual = residual
        super().__init__(f"{message}: residual {residual}")


class Metric:
    """Symmetric, nondegenerate matrix of functions, declared positive definite."""

    def __init__(self, chart: Chart, g: Sequence[Sequence], *, spec: oracle.SampleSpec | None = None):
        n = chart.n
        rows = [[canonical(chart.parse(v) if isinstance(v, str) else v) for v in row] for row in g]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise TensorError(f"metric must be {n}x{n}")
        for i, j in itertools.combinations(range(n), 2):
            if sk_is_zero(rows[i][j] - rows[j][i]) is not Zeroness.ZERO:
                raise TensorError(f"metric is not symmetric at ({i + 1},{j + 1})")
        self.chart = chart
        self.g = rows
        if sk_is_zero(self.det) is Zeroness.ZERO:
            raise TensorError("metric is singular")
        self._spot_check_positive(spec or oracle.current_spec())

    def _spot_check_positive(self, spec: oracle.SampleSpec):
        flat = [e for row in self.g for e in row]
        fns = [oracle._compile(self.chart.coords, e) for e in flat]
        n = self.chart.n
        for pt in oracle.sample_points(self.chart.coords, flat, spec.with_(count=min(spec.count, 20))):
            m = np.array([f(*pt) for f in fns], dtype=float).reshape(n, n)
            if np.linalg.eigvalsh(m).min() <= 0:
                raise TensorError(f"metric is not positive definite at {dict(zip(self.chart.coords, pt))}")

    @cached_property
    def det(self) -> sp.Expr:
        return linalg.det(self.g)

    @cached_property
    def inverse(self) -> list[list[sp.Expr]]:
        return linalg.inverse(self.g)

    @cached_property
    def christoffel(self) -> list[list[list[sp.Expr]]]:
        """gamma[k][i][j] = Gamma^k_ij."""
        n, x, g, ginv = self.chart.n, self.chart.symbols, self.g, self.inverse
        dg = [[[sp.diff(g[i][j], x[k]) for k in range(n)] for j in range(n)] for i in range(n)]
        gamma = [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    v = sum(
                        (ginv[k][l] * (dg[j][l][i] + dg[i][l][j] - dg[i][j][l]) for l in range(n) if ginv[k][l] != 0),
                        sp.Integer(0),
                    )
                    gamma[k][i][j] = gamma[k][j][i] = canonical(v / 2)
        return gamma

    def inner(self, u: AltTensor, v: AltTensor) -> sp.Expr:
        a, b = u.components(), v.components()
        n = self.chart.n
        return canonical(sum((a[i] * self.g[i][j] * b[j] for i in range(n) for j in range(n) if a[i] != 0 and b[j] != 0), sp.Integer(0)))

    def covariant(self, x: AltTensor, y: AltTensor) -> AltTensor:
        """nabla_X Y."""
        n, sym, gamma = self.chart.n, self.chart.symbols, self.christoffel
        a, b = x.components(), y.components()
        out = []
        for k in range(n):
            v = sum((a[i] * sp.diff(b[k], sym[i]) for i in range(n) if a[i] != 0), sp.Integer(0))
            v += sum((gamma[k][i][j] * a[i] * b[j] for i in range(n) for j in range(n) if a[i] != 0 and b[j] != 0), sp.Integer(0))
            out.append(v)
        return AltTensor.vector(self.chart, out)

    def conformal(self, factor) -> "Metric":
        return Metric(self.chart, [[factor * v for v in row] for row in self.g])

    def render(self) -> list[list[str]]:
        return [[self.chart.render(v) for v in row] for row in self.g]


def christoffel(g: Metric) -> list[list[list[sp.Expr]]]:
    return g.christoffel


def levi_civita_check(g: Metric) -> CheckResult:
    """nabla g == 0 and Gamma^k_ij == Gamma^k_ji."""
    n, x, gamma = g.chart.n, g.chart.symbols, g.christoffel
    compat = []
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                v = sp.diff(g.g[i][j], x[k])
                v -= sum((gamma[l][k][i] * g.g[l][j] + gamma[l][k][j] * g.g[i][l] for l in range(n)), sp.Integer(0))
                compat.append(v)
    torsion = [gamma[k][i][j] - gamma[k][j][i] for k in range(n) for i, j in itertools.combinations(range(n), 2)]
    zero = sp.Integer(0)
    parts = [
        compare_many("metric-compatibility", "levi-civita", g.chart, compat, [zero] * len(compat)),
        compare_many("torsion-free", "levi-civita", g.chart, torsion, [zero] * len(torsion)),
    ]
    return combine("levi-civita", "levi-civita", parts)


@dataclass
class OrthogonalSplit:
    metric: Metric
    foliation: FoliationFrame
    normals: tuple[AltTensor, ...]

    @cached_property
    def _combined(self) -> list[list[sp.Expr]]:
        cols = [f.components() for f in (*self.foliation.fields, *self.normals)]
        return [list(r) for r in zip(*cols)]

    @cached_property
    def _combined_inverse(self) -> list[list[sp.Expr]]:
        return linalg.inverse(self._combined)

    def coefficients(self, v: AltTensor) -> list[sp.Expr]:
        """Coefficients of v in the frame (X_1..X_p, Y_1..Y_q)."""
        comps = v.components()
        inv, n = self._combined_inverse, len(comps)
        return [canonical(sum((inv[r][k] * comps[k] for k in range(n) if comps[k] != 0), sp.Integer(0))) for r in range(n)]

    def _combine(self, coeffs, fields) -> AltTensor:
        total = AltTensor.zero(self.metric.chart, 1, MV)
        for c, f in zip(coeffs, fields):
            if c != 0:
                total = total + f.scale(c)
        return total

    def tangential(self, v: AltTensor) -> AltTensor:
        c = self.coefficients(v)
        return self._combine(c[: self.foliation.p], self.foliation.fields)

    def normal(self, v: AltTensor) -> AltTensor:
        c = self.coefficients(v)
        return self._combine(c[self.foliation.p :], self.normals)

    def tangential_coefficients(self, v: AltTensor) -> list[sp.Expr]:
        return self.coefficients(v)[: self.foliation.p]

    @cached_property
    def normal_gram(self) -> list[list[sp.Expr]]:
        return [[self.metric.inner(a, b) for b in self.normals] for a in self.normals]

    @cached_property
    def normal_gram_inverse(self) -> list[list[sp.Expr]]:
        return linalg.inverse(self.normal_gram)

    @cached_property
    def coframe(self) -> list[AltTensor]:
        """1-forms dual to (X_1..X_p, Y_1..Y_q)."""
        chart = self.metric.chart
        return [AltTensor.one_form(chart, row) for row in self._combined_inverse]


def orthogonal_complement(g: Metric, F: FoliationFrame, *, spec: oracle.SampleSpec | None = None) -> OrthogonalSplit:
    if g.chart != F.chart:
        raise TensorError("metric and foliation live on different charts")
    rows = [[canonical(sum((X.components()[i] * g.g[i][j] for i in range(g.chart.n)), sp.Integer(0))) for j in range(g.chart.n)] for X in F.fields]
    basis = linalg.nullspace(rows) if F.q else []
    if len(basis) != F.q:
        raise TensorError("orthogonal complement has the wrong rank")
    normals = tuple(AltTensor.vector(g.chart, v) for v in basis)
    split = OrthogonalSplit(g, F, normals)
    if F.q:
        spot_check_rank(g.chart, split._combined, g.chart.n, "tangent plus normal frame", spec or oracle.current_spec())
    return split


@dataclass
class MeanCurvature:
    split: OrthogonalSplit
    H: AltTensor
    K: LeafwiseForm

    def is_zero(self) -> Zeroness:
        return self.H.is_zero()


def mean_curvature(g: Metric, F: FoliationFrame, split: OrthogonalSplit | None = None) -> MeanCurvature:
    """H = sum_ab G^ab (nabla_{Y_a} Y_b)^F and K(X) = g(X, H)."""
    split = split or orthogonal_complement(g, F)
    chart, q = g.chart, F.q
    coeffs = [sp.Integer(0)] * F.p
    for a in range(q):
        for b in range(q):
            w = split.normal_gram_inverse[a][b]
            if w == 0:
                continue
            t = split.tangential_coefficients(g.covariant(split.normals[a], split.normals[b]))
            coeffs = [c + w * s for c, s in zip(coeffs, t)]
    H = AltTensor.zero(chart, 1, MV)
    for c, X in zip(coeffs, F.fields):
        if c != 0:
            H = H + X.scale(c)
    K = LeafwiseForm(F, 1, {(i,): g.inner(X, H) for i, X in enumerate(F.fields)})
    return MeanCurvature(split, H, K)


def _square_root(e: sp.Expr) -> sp.Expr:
    """sqrt(e), taken as a signed root when e factors as a perfect square.

    That root is right up to a locally constant sign, which the log-derivative
    identities below do not see, and it avoids Abs terms that the canonical
    form cannot cancel.
    """
    coeff, factors = sp.factor_list(sp.together(e))
    if coeff > 0 and sp.sqrt(coeff).is_Rational and all(k % 2 == 0 for _, k in factors):
        return sp.sqrt(coeff) * sp.Mul(*(b ** (k // 2) for b, k in factors))
    return sp.sqrt(e)


def eta_form(g: Metric, F: FoliationFrame, orientation: AltTensor | None = None, split: OrthogonalSplit | None = None) -> AltTensor:
    """Orthogonal volume form: eta(Y) = 1 on oriented orthonormal normal frames,
    i_X eta = 0 for X tangent.

    ``orientation`` (a normal orientation of F) fixes the sign; by default the
    computed normal frame is declared positive.
    """
    split = split or orthogonal_complement(g, F)
    chart, p = g.chart, F.p
    if F.q == 0:
        return AltTensor.scalar(chart, 1)
    theta = split.coframe[p]
    for c in split.coframe[p + 1 :]:
        theta = wedge(theta, c)
    # theta(Y_1..Y_q) = 1, so eta = sqrt(det Gram_Y) * theta up to orientation.
    scale = _square_root(linalg.det(split.normal_gram))
    if orientation is not None:
        s = canonical(orientation(*split.normals) / scale)
        if s.free_symbols:
            pt = oracle.sample_points(chart.coords, [s], oracle.current_spec().with_(count=1))[0]
            s = s.subs(dict(zip(chart.symbols, pt)))
        sign = sp.sign(sp.N(s))
        if sign == 0:
            raise TensorError("orientation form vanishes on the normal frame")
        scale = sign * scale
    return theta.scale(canonical(scale))


def normal_trace_check(g: Metric, F: FoliationFrame, split: OrthogonalSplit | None = None) -> CheckResult:
    """sum g(nabla_{Y_a} X, Y_a) == -sum g(nabla_{Y_a} Y_a, X) over orthonormal
    normals (traced with the inverse normal Gram matrix), and both equal
    (L_X eta)(Y_1..Y_q) / eta(Y_1..Y_q)."""
    split = split or orthogonal_complement(g, F)
    gi = split.normal_gram_inverse
    eta = eta_form(g, F, split=split)
    lhs, mid, rhs = [], [], []
    for X in F.fields:
        s1 = s2 = sp.Integer(0)
        for a, b in itertools.product(range(F.q), repeat=2):
            if gi[a][b] == 0:
                continue
            Ya, Yb = split.normals[a], split.normals[b]
            s1 += gi[a][b] * g.inner(g.covariant(Ya, X), Yb)
            s2 -= gi[a][b] * g.inner(g.covariant(Ya, Yb), X)
        lhs.append(s1)
        mid.append(s2)
        rhs.append(lie_derivative(X, eta)(*split.normals) / eta(*split.normals))
    parts = [
        compare_many("normal-trace", "normal-trace", g.chart, lhs, mid),
        compare_many("normal-trace-lie", "normal-trace", g.chart, lhs, rhs),
    ]
    return combine("normal-trace", "normal-trace", parts)


def eta_reeb_check(g: Metric, F: FoliationFrame, *, confirm: bool = False) -> CheckResult:
    """reeb_form(F, eta) == -K, slot by slot."""
    split = orthogonal_complement(g, F)
    eta = eta_form(g, F, split=split)
    alpha = reeb_form(F, eta)
    K = mean_curvature(g, F, split).K
    return compare_tensors("reeb-of-eta", "reeb-mean-curvature", alpha.as_tensor(), (-K).as_tensor(), confirm=confirm)


def conformal_rescale_check(g: Metric, F: FoliationFrame, h, *, confirm: bool = False) -> CheckResult:
    """Given d_F h = K, the metric exp(2h/q) g has vanishing tangent mean curvature."""
    h = canonical(h)
    K = mean_curvature(g, F).K
    residual = leafwise_function_differential(F, h) - K
    pre = compare_tensors("rescale-precondition", "conformal-rescale", residual.as_tensor(), LeafwiseForm(F, 1).as_tensor())
    if not pre.ok:
        raise PreconditionError("d_F h differs from K", residual.render())
    if F.q == 0:
        return CheckResult("conformal-rescale", "conformal-rescale", Verdict.SYMBOLIC_PASS)
    g1 = g.conformal(sp.exp(2 * h / F.q))
    H1 = mean_curvature(g1, F).H
    return compare_tensors(
        "conformal-rescale", "conformal-rescale", H1, AltTensor.zero(g.chart, 1, MV), confirm=confirm,
        details={"h": g.chart.render(h)},
    )


def polynomial_basis(chart: Chart, degree: int = 2) -> list[sp.Expr]:
    """Monomials of total degree 1..degree in the chart coordinates."""
    out = []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(chart.symbols, d):
            out.append(sp.Mul(*combo))
    return out


def closed_defining_form_check(F: FoliationFrame, nu: AltTensor, basis: Sequence | None = None) -> CheckResult:
    """Codimension one: d nu = 0 forces a vanishing Reeb form; otherwise look
    for a = exp(-h) (h from the exactness ansatz) with d(a nu) = 0."""
    if F.q != 1:
        raise TensorError("closed defining form check needs codimension one")
    alpha = reeb_form(F, nu)
    zero2 = AltTensor.zero(F.chart, 2, FORM)
    closed = compare_tensors("d-nu", "closed-defining-form", ext_d(nu), zero2)
    if closed.ok:
        vanish = compare_tensors("reeb-vanishes", "closed-defining-form", alpha.as_tensor(), LeafwiseForm(F, 1).as_tensor())
        return combine("closed-defining-form", "closed-defining-form", [closed, vanish])
    h = exactness_probe(F, alpha, basis if basis is not None else polynomial_basis(F.chart))
    if h is None:
        return CheckResult(
            "closed-defining-form", "closed-defining-form", Verdict.UNDECIDED, closed.residual,
            {"note": "no certificate in the ansatz"},
        )
    a = canonical(sp.exp(-h))
    cert = compare_tensors("d(a nu)", "closed-defining-form", ext_d(nu.scale(a)), zero2)
    cert.details["certificate"] = F.chart.render(a)
    if not cert.ok:
        cert.verdict = Verdict.UNDECIDED
    return cert
