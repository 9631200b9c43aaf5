"""Regular Poisson structures and their symplectic foliations.

``pi_star`` sends a leafwise r-form to the r-vector field
``Q(a_1..a_r) = alpha(anchor(a_1), .., anchor(a_r))``.  On 1-forms this is
``-anchor(a)`` for any extension ``a`` of ``alpha``, and with this sign it
is a chain map from ``(leafwise forms, d_F)`` to ``(multivectors, d_pi)``
sending the leafwise symplectic form to pi.  The modular field of
``omega^p ^ nu`` is ``pi_star`` of the Reeb form of ``nu``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import sympy as sp

from . import linalg, oracle
from .checks import CheckResult, Verdict, combine, compare_tensors
from .foliation import (
    FoliationFrame,
    LeafwiseForm,
    d_F,
    exactness_probe,
    reeb_form,
    spot_check_rank,
)
from .poisson import PoissonStructure, anchor, d_pi, hamiltonian_field, modular_field
from .symkernel import Zeroness, canonical
from .tensor import AltTensor, TensorError, Variance, check_volume, interior, wedge, _det

__all__ = [
    "PresentationError",
    "RegularPoissonPresentation",
    "ModularReebReport",
    "leafwise_symplectic",
    "x0_membership",
    "pi_star",
    "pi_star_inverse",
    "chain_map_check",
    "extend_leafwise",
    "extend_symplectic",
    "reeb_volume",
    "modular_reeb_check",
    "gauge_coherence_check",
    "hamiltonian_certificate",
]

MV, FORM = Variance.MULTIVECTOR, Variance.FORM


class PresentationError(ValueError):
    pass


class RegularPoissonPresentation:
    """A Poisson structure together with a frame of its symplectic foliation.

    The frame must span exactly the image of the anchor: each X_i is
    ``anchor(beta_i)`` for some 1-form, and each ``anchor(dx_k)`` lies in the
    span of the frame.
    """

    def __init__(self, P: PoissonStructure, F: FoliationFrame, *, spec: oracle.SampleSpec | None = None):
        if P.chart != F.chart:
            raise PresentationError("Poisson structure and foliation on different charts")
        if P.rank != F.p:
            raise PresentationError(f"anchor has generic rank {P.rank}, frame has {F.p} fields")
        if F.p % 2:
            raise PresentationError("symplectic leaves have even dimension")
        spec = spec or oracle.current_spec()
        # constant rank: a rank drop at a sample point means the structure is not regular there
        spot_check_rank(P.chart, P.matrix, P.rank, "Poisson bivector", spec)
        self.poisson = P
        self.foliation = F
        self.chart = P.chart
        mt = linalg.transpose(P.matrix)
        self.betas: list[AltTensor] = []
        for i, X in enumerate(F.fields):
            b = linalg.solve(mt, X.components())
            if b is None:
                raise PresentationError(f"frame field X{i + 1} = {X.render()} is not in the image of the anchor")
            self.betas.append(AltTensor.one_form(self.chart, b))
        self.anchor_coefficients: list[list[sp.Expr]] = []
        for k, Z in enumerate(P.coframe_anchors):
            c = F.decompose(Z)
            if c is None:
                raise PresentationError(f"anchor(d{self.chart.coords[k]}) leaves the span of the frame")
            self.anchor_coefficients.append(c)
        self.kernel = [AltTensor.one_form(self.chart, v) for v in linalg.nullspace(mt)]
        if len(self.kernel) != F.q:
            raise PresentationError("kernel of pi has the wrong dimension")
        for kappa in self.kernel:
            if anchor(P, kappa).is_zero() is not Zeroness.ZERO:
                raise PresentationError("kernel coframe element not annihilated by the anchor")
        omega = self.omega
        if F.p:
            pf = sp.Matrix(F.p, F.p, lambda i, j: omega[(i, j)]).det()
            if canonical(pf) == 0:
                raise PresentationError("leafwise symplectic form is degenerate")

    @property
    def p(self) -> int:
        """Half the leaf dimension."""
        return self.foliation.p // 2

    @cached_property
    def omega(self) -> LeafwiseForm:
        F, P = self.foliation, self.poisson
        return LeafwiseForm(
            F, 2, {(i, j): P.pi(self.betas[i], self.betas[j]) for i, j in itertools.combinations(range(F.p), 2)}
        )

    def __repr__(self):
        return f"RegularPoissonPresentation({self.poisson.pi.render()}; {self.foliation!r})"


def leafwise_symplectic(R: RegularPoissonPresentation) -> LeafwiseForm:
    """omega(X_i, X_j) = pi(beta_i, beta_j), checked against a second choice
    of the beta's when pi has a kernel."""
    omega = R.omega
    if R.kernel:
        F, P = R.foliation, R.poisson
        shifted = [b + R.kernel[i % len(R.kernel)].scale(i + 1) for i, b in enumerate(R.betas)]
        other = LeafwiseForm(F, 2, {(i, j): P.pi(shifted[i], shifted[j]) for i, j in itertools.combinations(range(F.p), 2)})
        result = compare_tensors("omega-independent-of-beta", "leafwise-symplectic", omega.as_tensor(), other.as_tensor())
        if not result.ok:
            raise PresentationError(f"leafwise symplectic form depends on the choice of preimages: {result.residual}")
    return omega


def x0_membership(R: RegularPoissonPresentation, Q: AltTensor) -> CheckResult:
    """i_kappa Q == 0 for every kappa in the kernel of pi."""
    if Q.variance is not MV and Q.degree:
        raise TensorError("membership is a property of multivector fields")
    if Q.degree == 0 or not R.kernel:
        return CheckResult("x0-membership", "x0-membership", Verdict.SYMBOLIC_PASS)
    zero = AltTensor.zero(R.chart, Q.degree - 1, MV)
    parts = [
        compare_tensors(f"i_kernel{k + 1}", "x0-membership", interior(kappa, Q), zero)
        for k, kappa in enumerate(R.kernel)
    ]
    return combine("x0-membership", "x0-membership", parts)


def pi_star(R: RegularPoissonPresentation, alpha: LeafwiseForm) -> AltTensor:
    """Q^K = alpha(anchor(dx_k1), .., anchor(dx_kr)) on the coordinate coframe."""
    if alpha.foliation is not R.foliation:
        raise TensorError("leafwise form belongs to another foliation")
    r, n = alpha.degree, R.chart.n
    if r == 0:
        return AltTensor(R.chart, 0, MV, {(): alpha[()]})
    A = R.anchor_coefficients
    coeffs = {}
    for K in itertools.combinations(range(n), r):
        total = sp.Integer(0)
        for I, c in alpha.items():
            total += c * _det([[A[k][i] for i in I] for k in K])
        coeffs[K] = total
    return AltTensor(R.chart, r, MV, coeffs)


def pi_star_inverse(R: RegularPoissonPresentation, Q: AltTensor) -> LeafwiseForm:
    """alpha_I = Q(beta_I); inverts pi_star on its image."""
    F = R.foliation
    if Q.degree > F.p:
        raise TensorError("degree exceeds the leaf dimension")
    if Q.degree == 0:
        return LeafwiseForm(F, 0, {(): Q.value})
    return LeafwiseForm(
        F, Q.degree, {I: Q(*(R.betas[i] for i in I)) for I in itertools.combinations(range(F.p), Q.degree)}
    )


def chain_map_check(R: RegularPoissonPresentation, alpha: LeafwiseForm, *, confirm: bool = False) -> CheckResult:
    """pi_star(d_F alpha) == d_pi(pi_star(alpha)); in top degree the left side is 0."""
    if alpha.degree == R.chart.n:
        return CheckResult("chain-map", "chain-map", Verdict.SYMBOLIC_PASS, details={"note": "top degree"})
    rhs = d_pi(R.poisson, pi_star(R, alpha))
    if alpha.degree == R.foliation.p:
        lhs = AltTensor.zero(R.chart, alpha.degree + 1, MV)
    else:
        lhs = pi_star(R, d_F(R.foliation, alpha))
    return compare_tensors("chain-map", "chain-map", lhs, rhs, confirm=confirm)


def _complement(R: RegularPoissonPresentation, complement: Sequence[AltTensor] | None) -> list[AltTensor]:
    F, chart = R.foliation, R.chart
    if complement is not None:
        complement = list(complement)
        if len(complement) != F.q:
            raise PresentationError(f"complement needs {F.q} vector fields, got {len(complement)}")
        return complement
    # coordinate fields completing the frame; prefer a choice whose
    # determinant is constant, so the extension has no new poles
    cols = [X.components() for X in F.fields]
    fallback = None
    for combo in itertools.combinations(range(chart.n), F.q):
        fields = [AltTensor.basis(chart, [k], MV) for k in combo]
        M = [list(r) for r in zip(*(cols + [f.components() for f in fields]))]
        det = linalg.det(M)
        if det == 0:
            continue
        if not det.free_symbols:
            return fields
        fallback = fallback or fields
    if fallback is None:
        raise PresentationError("no coordinate complement to the frame")
    return fallback


def _dual_coframe(R: RegularPoissonPresentation, complement: list[AltTensor]) -> list[AltTensor]:
    cols = [v.components() for v in (*R.foliation.fields, *complement)]
    M = [list(r) for r in zip(*cols)]
    if canonical(linalg.det(M)) == 0:
        raise PresentationError("complement does not complete the frame to a basis")
    spot_check_rank(R.chart, M, R.chart.n, "frame plus complement", oracle.current_spec())
    return [AltTensor.one_form(R.chart, row) for row in linalg.inverse(M)]


def extend_leafwise(R: RegularPoissonPresentation, alpha: LeafwiseForm, complement: Sequence[AltTensor] | None = None) -> AltTensor:
    """Differential form agreeing with alpha on the frame and killed by the complement."""
    theta = _dual_coframe(R, _complement(R, complement))
    out = AltTensor.zero(R.chart, alpha.degree, FORM)
    for I, c in alpha.items():
        w = AltTensor.scalar(R.chart, c)
        for i in I:
            w = wedge(w, theta[i])
        out = out + w
    return out


def extend_symplectic(R: RegularPoissonPresentation, complement: Sequence[AltTensor] | None = None) -> AltTensor:
    return extend_leafwise(R, R.omega, complement)


def reeb_volume(R: RegularPoissonPresentation, nu: AltTensor, complement: Sequence[AltTensor] | None = None) -> AltTensor:
    """mu = omega~^p ^ nu."""
    omega = extend_symplectic(R, complement)
    mu = AltTensor.scalar(R.chart, 1)
    for _ in range(R.p):
        mu = wedge(mu, omega)
    mu = wedge(mu, nu)
    check_volume(mu)
    return mu


@dataclass
class ModularReebReport:
    result: CheckResult
    omega: LeafwiseForm
    mu: AltTensor
    phi: AltTensor
    alpha: LeafwiseForm
    primitive: sp.Expr | None = None
    certificate: CheckResult | None = None

    @property
    def ok(self) -> bool:
        return self.result.ok

    def to_dict(self) -> dict:
        chart = self.mu.chart
        out = {
            "omega": self.omega.render(),
            "mu": self.mu.render(),
            "phi": self.phi.render(),
            "alpha_F": self.alpha.render(),
            "check": self.result.to_dict(),
        }
        if self.primitive is not None:
            out["unimodular_certificate"] = {
                "h": chart.render(self.primitive),
                "phi_equals_hamiltonian_of": chart.render(canonical(-self.primitive)),
                "check": self.certificate.to_dict() if self.certificate else None,
            }
        return out


def modular_reeb_check(
    R: RegularPoissonPresentation,
    nu: AltTensor,
    complement: Sequence[AltTensor] | None = None,
    *,
    basis: Sequence | None = None,
    confirm: bool = False,
) -> ModularReebReport:
    """modular_field(omega~^p ^ nu) == pi_star(reeb_form(nu)) == -anchor(alpha~).

    The two sides come from independent routes: divergences of Hamiltonian
    fields versus Lie derivatives of nu along the frame.  With ``basis`` an
    exactness certificate h (d_F h = alpha_F) is searched; when found the
    modular field is checked to be the Hamiltonian field of -h.
    """
    mu = reeb_volume(R, nu, complement)
    phi = modular_field(R.poisson, mu)
    alpha = reeb_form(R.foliation, nu)
    extended = extend_leafwise(R, alpha, complement)
    parts = [
        compare_tensors("phi-vs-pi_star(alpha)", "modular-reeb", phi, pi_star(R, alpha), confirm=confirm),
        compare_tensors("phi-vs-minus-anchor", "modular-reeb", phi, -anchor(R.poisson, extended), confirm=confirm),
    ]
    report = ModularReebReport(combine("modular-reeb", "modular-reeb", parts), R.omega, mu, phi, alpha)
    if basis is not None:
        h = exactness_probe(R.foliation, alpha, basis)
        if h is not None:
            report.primitive = h
            report.certificate = compare_tensors(
                "phi-hamiltonian", "unimodular-certificate", phi, hamiltonian_field(R.poisson, -h)
            )
    return report


def gauge_coherence_check(
    R: RegularPoissonPresentation, nu: AltTensor, a, complement: Sequence[AltTensor] | None = None
) -> CheckResult:
    """Rescaling nu by a > 0 moves alpha_F by d_F log a and the modular field
    by -anchor(d log a); the modular/Reeb identity holds in both gauges."""
    a = canonical(a)
    F, P = R.foliation, R.poisson
    dlog = AltTensor.differential(R.chart, a).scale(1 / a)
    base = modular_reeb_check(R, nu, complement)
    moved = modular_reeb_check(R, nu.scale(a), complement)
    parts = [
        base.result,
        moved.result,
        compare_tensors("reeb-gauge", "gauge-coherence", moved.alpha.as_tensor(), (base.alpha + F.restrict(dlog)).as_tensor()),
        compare_tensors("modular-gauge", "gauge-coherence", moved.phi, base.phi - anchor(P, dlog)),
    ]
    return combine("gauge-coherence", "gauge-coherence", parts, {"a": R.chart.render(a)})


def hamiltonian_certificate(R: RegularPoissonPresentation, alpha: LeafwiseForm, h) -> CheckResult:
    """Given d_F h = alpha, pi_star(alpha) is the coboundary d_pi h."""
    h = canonical(h)
    F = R.foliation
    pre = compare_tensors(
        "primitive", "hamiltonian-certificate", d_F(F, LeafwiseForm.function(F, h)).as_tensor(), alpha.as_tensor()
    )
    if not pre.ok:
        return pre
    lhs = pi_star(R, alpha)
    rhs = d_pi(R.poisson, AltTensor(R.chart, 0, MV, {(): h}))
    return combine(
        "hamiltonian-certificate", "hamiltonian-certificate",
        [pre, compare_tensors("pi_star-is-d_pi", "hamiltonian-certificate", lhs, rhs)],
        {"h": R.chart.render(h)},
    )
