"""Poisson structures: anchor, Koszul bracket, Lichnerowicz differential,
modular vector fields.

Conventions (fixed, not configurable):

* ``anchor(alpha)`` is the vector field with ``beta(anchor(alpha)) = pi(alpha, beta)``;
  the Hamiltonian field of ``f`` is ``anchor(df)``.
* ``d_pi`` is defined by its evaluation on 1-forms with the Koszul bracket;
  with the Schouten convention of :mod:`reebmod.tensor` it coincides with
  ``schouten(pi, Q)`` in every degree, and :func:`d_pi` asserts this.
* ``modular_field(P, mu)`` sends ``f`` to ``div_mu(anchor(df))``.  Under these
  conventions rescaling the volume gives
  ``modular_field(P, a mu) = modular_field(P, mu) - anchor(d log a)``.
"""

from __future__ import annotations

import itertools
from functools import cached_property

import sympy as sp

from . import linalg, oracle
from .checks import CheckFailed, CheckResult, compare_tensors
from .symkernel import canonical
from .tensor import (
    AltTensor,
    Chart,
    TensorError,
    Variance,
    check_volume,
    divergence,
    ext_d,
    interior,
    lie_bracket,
    lie_derivative,
    schouten,
    wedge,
)

__all__ = [
    "JacobiError",
    "PoissonStructure",
    "anchor",
    "hamiltonian_field",
    "koszul_bracket",
    "anchor_morphism_check",
    "d_pi",
    "d_pi_schouten",
    "modular_field",
    "modular_identities",
    "modular_rescale_check",
    "liouville_volume",
]

MV, FORM = Variance.MULTIVECTOR, Variance.FORM


class JacobiError(ValueError):
    def __init__(self, result: CheckResult):
        self.result = result
        super().__init__(f"bivector fails the Jacobi identity: [pi, pi] = {result.residual}")


class PoissonStructure:
    """A bivector field whose Schouten square vanishes.

    Construction raises :class:`JacobiError` when ``[pi, pi]`` is not zero.
    ``jacobi`` keeps the verdict (symbolic or numeric-only).
    """

    def __init__(self, pi: AltTensor):
        if pi.variance is not MV or pi.degree != 2:
            raise TensorError("a Poisson structure is a bivector field")
        self.pi = pi
        self.chart: Chart = pi.chart
        zero = AltTensor.zero(pi.chart, min(3, pi.n), MV)
        sq = schouten(pi, pi) if pi.n >= 3 else zero
        self.jacobi = compare_tensors("jacobi", "jacobi", sq, zero)
        if not self.jacobi.ok:
            raise JacobiError(self.jacobi)

    @property
    def jacobi_verified(self) -> bool:
        return self.jacobi.ok

    @cached_property
    def matrix(self) -> list[list[sp.Expr]]:
        """Full antisymmetric component matrix pi^{ij}."""
        n = self.chart.n
        return [[self.pi[(i, j)] for j in range(n)] for i in range(n)]

    def bracket(self, f, g) -> sp.Expr:
        """Poisson bracket {f, g} = pi(df, dg)."""
        return self.pi(AltTensor.differential(self.chart, f), AltTensor.differential(self.chart, g))

    def coframe(self, i: int) -> AltTensor:
        return AltTensor.basis(self.chart, [i], FORM)

    @cached_property
    def coframe_anchors(self) -> list[AltTensor]:
        return [anchor(self, self.coframe(i)) for i in range(self.chart.n)]

    @cached_property
    def coframe_brackets(self) -> dict[tuple[int, int], AltTensor]:
        n = self.chart.n
        return {
            (i, j): koszul_bracket(self, self.coframe(i), self.coframe(j))
            for i, j in itertools.combinations(range(n), 2)
        }

    @cached_property
    def rank(self) -> int:
        return linalg.rank(self.matrix)

    def __repr__(self):
        return f"PoissonStructure({self.pi.render()})"


def _check_one_form(P: PoissonStructure, a: AltTensor):
    if a.chart != P.chart or a.degree != 1 or a.variance is not FORM:
        raise TensorError("expected a 1-form on the Poisson chart")


def anchor(P: PoissonStructure, alpha: AltTensor) -> AltTensor:
    """The vector field pi(alpha) with beta(pi(alpha)) = pi(alpha, beta)."""
    _check_one_form(P, alpha)
    a = alpha.components()
    n = P.chart.n
    comps = [canonical(sum((a[i] * P.matrix[i][j] for i in range(n)), sp.Integer(0))) for j in range(n)]
    return AltTensor.vector(P.chart, comps)


def hamiltonian_field(P: PoissonStructure, f) -> AltTensor:
    return anchor(P, AltTensor.differential(P.chart, f))


class KoszulInconsistency(RuntimeError):
    pass


def koszul_bracket(P: PoissonStructure, alpha: AltTensor, beta: AltTensor, *, check: bool = True) -> AltTensor:
    """[alpha, beta]_pi, computed from both the Lie-derivative expression and
    the interior/exterior-derivative expression; they must agree."""
    _check_one_form(P, alpha)
    _check_one_form(P, beta)
    pa, pb = anchor(P, alpha), anchor(P, beta)
    d_pab = ext_d(AltTensor.scalar(P.chart, P.pi(alpha, beta)))
    via_interior = interior(pa, ext_d(beta)) - interior(pb, ext_d(alpha)) + d_pab
    if check:
        via_lie = lie_derivative(pa, beta) - lie_derivative(pb, alpha) - d_pab
        result = compare_tensors("koszul-two-forms", "koszul", via_lie, via_interior)
        if not result.ok:
            raise KoszulInconsistency(f"Koszul bracket expressions disagree: {result.residual}")
    return via_interior


def anchor_morphism_check(P: PoissonStructure, alpha: AltTensor, beta: AltTensor, *, confirm: bool = False) -> CheckResult:
    """anchor([alpha, beta]_pi) == [anchor(alpha), anchor(beta)]."""
    lhs = anchor(P, koszul_bracket(P, alpha, beta))
    rhs = lie_bracket(anchor(P, alpha), anchor(P, beta))
    return compare_tensors("anchor-morphism", "anchor-morphism", lhs, rhs, confirm=confirm)


def _q(Q: AltTensor, first: AltTensor, rest: tuple[int, ...]) -> sp.Expr:
    """Q(first, dx_rest...) for a 1-form ``first``."""
    comps = first.components()
    total = sp.Integer(0)
    for m, c in enumerate(comps):
        if c != 0 and m not in rest:
            total += c * Q[(m,) + rest]
    return total


def d_pi(P: PoissonStructure, Q: AltTensor, *, cross_check: bool = True) -> AltTensor:
    """Lichnerowicz-Poisson differential, evaluated on the coordinate coframe.

    d_pi Q(a_0..a_p) = sum_j (-1)^j pi(a_j).Q(..^a_j..)
                     + sum_{i<j} (-1)^{i+j} Q([a_i, a_j]_pi, ..^a_i..^a_j..)

    With ``cross_check`` the result is compared against ``schouten(pi, Q)``.
    """
    if Q.chart != P.chart or (Q.degree and Q.variance is not MV):
        raise TensorError("d_pi acts on multivector fields of the Poisson chart")
    n, p = P.chart.n, Q.degree
    syms = P.chart.symbols
    if p == n:
        out = AltTensor.zero(P.chart, n, MV)
    else:
        coeffs: dict[tuple[int, ...], sp.Expr] = {}
        for K in itertools.combinations(range(n), p + 1):
            total = sp.Integer(0)
            for j in range(p + 1):
                rest = K[:j] + K[j + 1 :]
                X = P.coframe_anchors[K[j]]
                f = Q[rest]
                term = sum((c * sp.diff(f, syms[i[0]]) for i, c in X.items()), sp.Integer(0))
                total += term if j % 2 == 0 else -term
            for i, j in itertools.combinations(range(p + 1), 2):
                rest = tuple(k for t, k in enumerate(K) if t not in (i, j))
                term = _q(Q, P.coframe_brackets[(K[i], K[j])], rest)
                total += term if (i + j) % 2 == 0 else -term
            coeffs[K] = total
        out = AltTensor(P.chart, p + 1, MV, coeffs)
    if cross_check:
        result = compare_tensors("d_pi-vs-schouten", "dpi-schouten", out, d_pi_schouten(P, Q))
        if not result.ok:
            raise CheckFailed(result)
    return out


def d_pi_schouten(P: PoissonStructure, Q: AltTensor) -> AltTensor:
    if Q.degree == 0:
        Q = AltTensor(Q.chart, 0, MV, Q.coeffs)
    return schouten(P.pi, Q)


def modular_identities(P: PoissonStructure, mu: AltTensor, phi: AltTensor, *, confirm: bool = False) -> list[CheckResult]:
    """L_phi pi == 0 and L_phi mu == 0."""
    return [
        compare_tensors(
            "modular-preserves-pi", "modular-invariance", lie_derivative(phi, P.pi),
            AltTensor.zero(P.chart, 2, MV), confirm=confirm,
        ),
        compare_tensors(
            "modular-preserves-volume", "modular-invariance", lie_derivative(phi, mu),
            AltTensor.zero(P.chart, P.chart.n, FORM), confirm=confirm,
        ),
    ]


def modular_field(P: PoissonStructure, mu: AltTensor, *, check: bool = True) -> AltTensor:
    """Modular vector field: i-th component div_mu(anchor(dx_i))."""
    if mu.chart != P.chart:
        raise TensorError("volume form lives on another chart")
    check_volume(mu)
    phi = AltTensor.vector(P.chart, [divergence(X, mu) for X in P.coframe_anchors])
    if check:
        for result in modular_identities(P, mu, phi):
            if not result.ok:
                raise CheckFailed(result)
    return phi


def _spot_check_positive(chart: Chart, a: sp.Expr, spec: oracle.SampleSpec):
    f = oracle._compile(chart.coords, a)
    points = oracle.sample_points(chart.coords, [a], spec.with_(count=min(spec.count, 25)))
    bad = [pt for pt in points if not f(*pt) > 0]
    if bad:
        raise ValueError(f"declared positive function {a} is not positive at {bad[0]}")


def modular_rescale_check(
    P: PoissonStructure, mu: AltTensor, a, *, confirm: bool = False, spec: oracle.SampleSpec | None = None
) -> CheckResult:
    """modular_field(P, a mu) == modular_field(P, mu) - anchor(d log a)."""
    spec = spec or oracle.current_spec()
    a = canonical(a)
    _spot_check_positive(P.chart, a, spec)
    dlog = AltTensor.differential(P.chart, a).scale(1 / a)
    lhs = modular_field(P, mu.scale(a))
    rhs = modular_field(P, mu) - anchor(P, dlog)
    return compare_tensors(
        "modular-rescale", "modular-rescale", lhs, rhs, confirm=confirm, spec=spec,
        details={"a": P.chart.render(a)},
    )


def liouville_volume(P: PoissonStructure) -> AltTensor:
    """omega^(n/2) for a nondegenerate pi, omega the inverse 2-form."""
    n = P.chart.n
    if n % 2 or P.rank != n:
        raise TensorError("Liouville volume needs a nondegenerate Poisson structure")
    inv = linalg.inverse(P.matrix)
    omega = AltTensor(
        P.chart, 2, FORM, {(i, j): -inv[i][j] for i, j in itertools.combinations(range(n), 2)}
    )
    mu = omega
    for _ in range(n // 2 - 1):
        mu = wedge(mu, omega)
    return mu
