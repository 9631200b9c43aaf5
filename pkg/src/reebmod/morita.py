"""Full dual pairs P1 <- W -> P2 and the transfer of Poisson vector fields.

Conventions: the Poisson bivector of (W, omega) is ``-Omega^{-1}`` (so
``dx^dy`` gives ``d/dx ^ d/dy``), and the Hamiltonian field of F is
``anchor(dF)``.  Then ``anchor(i_V omega) = -V``, so a decomposition
``dF = rho1^* alpha + i_V omega`` with V vertical for rho1 is the same as
``rho1_* X_F = anchor_1(alpha)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import sympy as sp

from . import linalg, oracle
from .checks import CheckResult, Verdict, combine, compare_many, compare_scalars, compare_tensors
from .foliation import spot_check_rank
from .poisson import PoissonStructure, anchor, d_pi, hamiltonian_field
from .symkernel import Zeroness, canonical
from .tensor import AltTensor, Chart, TensorError, Variance, ext_d

__all__ = [
    "DualPairError",
    "ProjectabilityError",
    "DualPair",
    "TransferResult",
    "dual_pair_check",
    "pushforward",
    "pullback",
    "transfer",
    "tangency_check",
]

MV, FORM = Variance.MULTIVECTOR, Variance.FORM


class DualPairError(ValueError):
    pass


class ProjectabilityError(ValueError):
    """A vector field could not be shown to descend along a submersion."""

    def __init__(self, message: str, verdict: Verdict = Verdict.UNDECIDED):
        self.verdict = verdict
        super().__init__(message)


class DualPair:
    """Symplectic W with maps rho1: W -> P1 and rho2: W -> P2.

    ``complete`` is a declared property; it cannot be checked on a chart and
    is only echoed in reports.
    """

    def __init__(
        self,
        omega_w: AltTensor,
        P1: PoissonStructure,
        rho1: Sequence,
        P2: PoissonStructure,
        rho2: Sequence,
        *,
        complete: bool = False,
        spec: oracle.SampleSpec | None = None,
    ):
        W = omega_w.chart
        if omega_w.degree != 2 or omega_w.variance is not FORM:
            raise DualPairError("the form on W must be a 2-form")
        if W.n % 2:
            raise DualPairError("W must be even-dimensional")
        self.W = W
        self.omega = omega_w
        self.P1, self.P2 = P1, P2
        self.rho1 = [canonical(W.parse(r) if isinstance(r, str) else r) for r in rho1]
        self.rho2 = [canonical(W.parse(r) if isinstance(r, str) else r) for r in rho2]
        self.complete = complete
        if len(self.rho1) != P1.chart.n or len(self.rho2) != P2.chart.n:
            raise DualPairError("map components do not match the target dimension")
        if ext_d(omega_w).is_zero() is not Zeroness.ZERO:
            raise DualPairError(f"omega_W is not closed: d omega = {ext_d(omega_w).render()}")
        if canonical(linalg.det(self.omega_matrix)) == 0:
            raise DualPairError("omega_W is degenerate")
        spec = spec or oracle.current_spec()
        for name, rho, P in (("rho1", self.rho1, P1), ("rho2", self.rho2, P2)):
            jac = self.jacobian(rho)
            if linalg.rank(jac) != P.chart.n:
                raise DualPairError(f"{name} is not a submersion")
            spot_check_rank(W, linalg.transpose(jac), P.chart.n, f"differential of {name}", spec)

    @cached_property
    def omega_matrix(self) -> list[list[sp.Expr]]:
        n = self.W.n
        return [[self.omega[(i, j)] for j in range(n)] for i in range(n)]

    @cached_property
    def poisson(self) -> PoissonStructure:
        inv = linalg.inverse(self.omega_matrix)
        n = self.W.n
        pi = AltTensor(self.W, 2, MV, {(i, j): -inv[i][j] for i, j in itertools.combinations(range(n), 2)})
        return PoissonStructure(pi)

    def jacobian(self, rho: Sequence[sp.Expr]) -> list[list[sp.Expr]]:
        return [[canonical(sp.diff(r, x)) for x in self.W.symbols] for r in rho]

    def kernel_frame(self, which: int) -> list[AltTensor]:
        rho = self.rho1 if which == 1 else self.rho2
        return [AltTensor.vector(self.W, v) for v in linalg.nullspace(self.jacobian(rho))]

    def hamiltonian(self, F) -> AltTensor:
        return hamiltonian_field(self.poisson, F)

    def sharp_inverse(self, beta: AltTensor) -> AltTensor:
        """The vector field V with i_V omega = beta."""
        omt = linalg.transpose(self.omega_matrix)
        v = linalg.solve(omt, beta.components())
        return AltTensor.vector(self.W, v)

    def swap(self) -> "DualPair":
        """P2 <- W -> P1 with omega negated."""
        return DualPair(-self.omega, self.P2, self.rho2, self.P1, self.rho1, complete=self.complete)

    def map_for(self, which: int) -> tuple[list[sp.Expr], PoissonStructure]:
        return (self.rho1, self.P1) if which == 1 else (self.rho2, self.P2)


def _compose(expr: sp.Expr, target: Chart, rho: Sequence[sp.Expr]) -> sp.Expr:
    """expr(u) with u = rho(w)."""
    return canonical(sp.sympify(expr).xreplace(dict(zip(target.symbols, rho))))


def pullback(D: DualPair, which: int, alpha: AltTensor) -> AltTensor:
    """rho^* of a 1-form on P_which."""
    rho, P = D.map_for(which)
    if alpha.degree != 1 or alpha.chart != P.chart:
        raise TensorError("pullback takes a 1-form on the target")
    a = [_compose(c, P.chart, rho) for c in alpha.components()]
    jac = D.jacobian(rho)
    return AltTensor.one_form(D.W, [sum((a[k] * jac[k][i] for k in range(len(rho))), sp.Integer(0)) for i in range(D.W.n)])


def pushforward(D: DualPair, which: int, X: AltTensor) -> AltTensor:
    """rho_* X as a vector field on P_which.

    Projectability: the components X(rho^a) must be constant along the
    fibres (checked on a kernel frame of d rho), and then descend through a
    local section obtained by solving rho(w) = u.  ProjectabilityError with
    verdict Fail when fibre constancy fails, Undecided when the section
    cannot be found or does not reproduce the components.
    """
    rho, P = D.map_for(which)
    W, target = D.W, P.chart
    comps = [canonical(sum((c * sp.diff(r, W.symbols[i[0]]) for i, c in X.items()), sp.Integer(0))) for r in rho]
    for K in D.kernel_frame(which):
        for a, c in enumerate(comps):
            kc = canonical(sum((k * sp.diff(c, W.symbols[i[0]]) for i, k in K.items()), sp.Integer(0)))
            z = compare_scalars("fibre-constancy", "projectable", W, kc, sp.Integer(0))
            if not z.ok:
                raise ProjectabilityError(
                    f"component {a + 1} of d rho{which}(X) varies along the fibres ({z.residual})", Verdict.FAIL
                )
    section = _section(D, which)
    if section is None:
        raise ProjectabilityError(f"no explicit local section of rho{which}")
    u = [sp.Dummy(f"u{a}", real=True) for a in range(target.n)]
    out = []
    for c in comps:
        g = c.xreplace(dict(zip(W.symbols, [s.xreplace(dict(zip(target.symbols, u))) for s in section])))
        g = canonical(g.xreplace(dict(zip(u, target.symbols))))
        back = compare_scalars("descends", "projectable", W, _compose(g, target, rho), c)
        if not back.ok:
            raise ProjectabilityError(f"component {c} does not factor through rho{which}")
        out.append(g)
    return AltTensor.vector(target, out)


def _section(D: DualPair, which: int) -> list[sp.Expr] | None:
    """w(u) with rho(w(u)) = u, in target symbols; unsolved W coordinates set to 0."""
    rho, P = D.map_for(which)
    W, m = D.W, P.chart.n
    jac = D.jacobian(rho)
    u = [sp.Dummy(f"s{a}", real=True) for a in range(m)]
    for cols in itertools.combinations(range(W.n), m):
        minor = [[jac[a][c] for c in cols] for a in range(m)]
        if canonical(linalg.det(minor)) == 0:
            continue
        unknowns = [W.symbols[c] for c in cols]
        fixed = {W.symbols[c]: sp.Integer(0) for c in range(W.n) if c not in cols}
        eqs = [r.xreplace(fixed) - ua for r, ua in zip(rho, u)]
        try:
            sols = sp.solve(eqs, unknowns, dict=True)
        except NotImplementedError:
            continue
        if not sols:
            continue
        sol = sols[0]
        if any(s not in sol for s in unknowns):
            continue
        point = [sol.get(x, fixed.get(x)) for x in W.symbols]
        return [canonical(v.xreplace(dict(zip(u, P.chart.symbols)))) for v in point]
    return None


def dual_pair_check(D: DualPair) -> CheckResult:
    """rho1 Poisson, rho2 anti-Poisson, fibres symplectically orthogonal."""
    W, PW = D.W, D.poisson
    parts = []
    for which, sign, label in ((1, 1, "rho1-poisson"), (2, -1, "rho2-anti-poisson")):
        rho, P = D.map_for(which)
        lhs, rhs = [], []
        for a, b in itertools.combinations(range(P.chart.n), 2):
            lhs.append(PW.bracket(rho[a], rho[b]))
            rhs.append(sign * _compose(P.pi[(a, b)], P.chart, rho))
        steps = [compare_scalars(f"{label}[{a + 1},{b + 1}]", label, W, l, r) for (a, b), l, r in
                 zip(itertools.combinations(range(P.chart.n), 2), lhs, rhs)]
        parts.append(combine(label, label, steps or [CheckResult(label, label, Verdict.SYMBOLIC_PASS)]))
    orth = [
        compare_scalars("fibres-orthogonal", "fibres-orthogonal", W, _omega_pair(D, V1, V2), sp.Integer(0))
        for V1 in D.kernel_frame(1)
        for V2 in D.kernel_frame(2)
    ]
    parts.append(combine("fibres-orthogonal", "fibres-orthogonal", orth or [CheckResult("fibres-orthogonal", "fibres-orthogonal", Verdict.SYMBOLIC_PASS)]))
    return combine("dual-pair", "dual-pair", parts, {"complete (declared)": D.complete})


def _omega_pair(D: DualPair, U: AltTensor, V: AltTensor) -> sp.Expr:
    u, v, M = U.components(), V.components(), D.omega_matrix
    n = D.W.n
    return canonical(sum((u[i] * M[i][j] * v[j] for i in range(n) for j in range(n) if u[i] != 0 and v[j] != 0), sp.Integer(0)))


@dataclass
class TransferResult:
    xi2: AltTensor | None
    result: CheckResult
    X_F: AltTensor

    @property
    def ok(self) -> bool:
        return self.result.ok

    def to_dict(self) -> dict:
        return {
            "X_F": self.X_F.render(),
            "xi2": self.xi2.render() if self.xi2 is not None else None,
            "check": self.result.to_dict(),
        }


def _poisson_field(P: PoissonStructure, xi: AltTensor, name: str) -> CheckResult:
    return compare_tensors(name, "poisson-field", d_pi(P, xi), AltTensor.zero(P.chart, 2, MV))


def transfer(D: DualPair, xi1: AltTensor, F) -> TransferResult:
    """xi1 = rho1_* X_F gives xi2 = -rho2_* X_F; both must be Poisson fields."""
    F = canonical(D.W.parse(F) if isinstance(F, str) else F)
    X = D.hamiltonian(F)
    parts = [_poisson_field(D.P1, xi1, "xi1-poisson")]
    try:
        pushed1 = pushforward(D, 1, X)
    except ProjectabilityError as exc:
        parts.append(CheckResult("X_F-projects-to-xi1", "transfer", exc.verdict, str(exc)))
        return TransferResult(None, combine("transfer", "transfer", parts), X)
    parts.append(compare_tensors("X_F-projects-to-xi1", "transfer", pushed1, xi1))
    try:
        xi2 = -pushforward(D, 2, X)
    except ProjectabilityError as exc:
        parts.append(CheckResult("X_F-rho2-projectable", "transfer", exc.verdict, str(exc)))
        return TransferResult(None, combine("transfer", "transfer", parts), X)
    parts.append(_poisson_field(D.P2, xi2, "xi2-poisson"))
    return TransferResult(xi2, combine("transfer", "transfer", parts, {"F": D.W.render(F)}), X)


def tangency_check(D: DualPair, F, f, alpha: AltTensor) -> CheckResult:
    """For a Casimir f of P2 and xi1 = anchor_1(alpha) = rho1_* X_F, show
    df(xi2) = 0 step by step:

    -d(f o rho2)(X_F) = dF(X_g) = rho1^*alpha(X_g) + omega(V, X_g),  g = f o rho2,

    where i_V omega = dF - rho1^*alpha; V is rho1-vertical, X_g is vertical
    for both maps, so both terms vanish.
    """
    W = D.W
    F = canonical(W.parse(F) if isinstance(F, str) else F)
    f = canonical(D.P2.chart.parse(f) if isinstance(f, str) else f)
    P1, P2 = D.P1, D.P2
    zero_w = sp.Integer(0)
    steps = []

    df = AltTensor.differential(P2.chart, f)
    steps.append(compare_tensors("casimir", "tangency", anchor(P2, df), AltTensor.zero(P2.chart, 1, MV)))

    X_F = D.hamiltonian(F)
    xi1 = anchor(P1, alpha)
    try:
        steps.append(compare_tensors("rho1_*X_F = anchor(alpha)", "tangency", pushforward(D, 1, X_F), xi1))
    except ProjectabilityError as exc:
        steps.append(CheckResult("rho1_*X_F = anchor(alpha)", "tangency", exc.verdict, str(exc)))

    pulled = pullback(D, 1, alpha)
    V = D.sharp_inverse(AltTensor.differential(W, F) - pulled)
    jac1 = D.jacobian(D.rho1)
    jac2 = D.jacobian(D.rho2)

    def vertical(name, J, Y):
        y = Y.components()
        vals = [sum((row[i] * y[i] for i in range(W.n)), zero_w) for row in J]
        return compare_many(name, "tangency", W, vals, [zero_w] * len(vals))

    steps.append(vertical("V rho1-vertical", jac1, V))
    g = _compose(f, P2.chart, D.rho2)
    X_g = D.hamiltonian(g)
    steps.append(vertical("X_g rho2-vertical", jac2, X_g))
    steps.append(vertical("X_g rho1-vertical", jac1, X_g))
    term1 = pulled(X_g)
    term2 = _omega_pair(D, V, X_g)
    steps.append(compare_scalars("rho1^*alpha(X_g) = 0", "tangency", W, term1, zero_w))
    steps.append(compare_scalars("omega(V, X_g) = 0", "tangency", W, term2, zero_w))
    lhs = canonical(-sum((c * sp.diff(g, W.symbols[i[0]]) for i, c in X_F.items()), zero_w))
    steps.append(compare_scalars("chain", "tangency", W, lhs, term1 + term2))
    steps.append(compare_scalars("df(xi2) = 0", "tangency", W, lhs, zero_w))
    return combine("tangency", "tangency", steps, {"F": W.render(F), "f": P2.chart.render(f)})
