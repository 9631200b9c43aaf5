"""Acceptance criteria 1-9.

Each criterion is computed once (cached), reported as one PASS/FAIL line and
asserted by its test.  Every symbolic zero is replayed with canonicalization
disabled and sampled at 100 seeded points (tolerance 1e-9 absolute); the
replays and the negative controls feed criterion 8.

Run directly with ``python tests/test_acceptance.py`` to print the lines
without pytest.
"""

from __future__ import annotations

import functools
import random
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import sympy as sp

sys.path.insert(0, str(Path(__file__).parent))

from reebmod import generators as gen  # noqa: E402
from reebmod import manifest as mf  # noqa: E402
from reebmod import oracle  # noqa: E402
from reebmod.bridge import (  # noqa: E402
    RegularPoissonPresentation,
    extend_leafwise,
    gauge_coherence_check,
    pi_star,
    reeb_volume,
)
from reebmod.checks import Verdict  # noqa: E402
from reebmod.foliation import FoliationFrame, LeafwiseForm, d_F, exactness_probe, reeb_form  # noqa: E402
from reebmod.morita import DualPair, _compose, dual_pair_check, tangency_check  # noqa: E402
from reebmod.oracle import OracleReport, SampleSpec  # noqa: E402
from reebmod.poisson import PoissonStructure, anchor, d_pi, modular_field  # noqa: E402
from reebmod.riemann import Metric, eta_form, mean_curvature, orthogonal_complement  # noqa: E402
from reebmod.runner import Runner  # noqa: E402
from reebmod.symkernel import Zeroness, uncanonicalized  # noqa: E402
from reebmod.tensor import AltTensor, Variance, ext_d, interior, lie_bracket, lie_derivative, schouten  # noqa: E402

MV, FORM = Variance.MULTIVECTOR, Variance.FORM
CONFIRM = SampleSpec(count=100, tol_abs=1e-9)
TIME_LIMIT = 60.0
MIN_INPUTS = 50

try:
    from conftest import ACCEPTANCE
except ImportError:  # run as a script
    ACCEPTANCE = {}


@dataclass
class Outcome:
    ok: bool
    detail: str
    zeros: list[tuple[str, OracleReport]] = field(default_factory=list)
    controls: list[tuple[str, OracleReport]] = field(default_factory=list)


class Ledger:
    """Collects symbolic verdicts, their numeric replays and negative controls."""

    def __init__(self):
        self.failures: list[str] = []
        self.zeros: list[tuple[str, OracleReport]] = []
        self.controls: list[tuple[str, OracleReport]] = []
        self.count = 0

    def zero(self, name: str, build: Callable[[], tuple[AltTensor, AltTensor]], bounds=None) -> bool:
        """lhs == rhs symbolically (Zero), replayed raw for the oracle."""
        spec = SampleSpec(bounds=bounds or {})
        with oracle.using_spec(spec):
            lhs, rhs = build()
            verdict = (lhs - rhs).is_zero()
            with uncanonicalized():
                raw_l, raw_r = build()
        self.count += 1
        self.zeros.append((name, oracle.check_identity(raw_l, raw_r, CONFIRM.with_(bounds=bounds or {}))))
        if verdict is not Zeroness.ZERO:
            self.failures.append(f"{name}: {verdict.value}")
            return False
        return True

    def control(self, name: str, lhs: AltTensor, rhs: AltTensor, bounds=None):
        """A deliberately wrong identity: must be NonZero and exceed tolerance."""
        verdict = (lhs - rhs).is_zero()
        report = oracle.check_identity(lhs, rhs, CONFIRM.with_(bounds=bounds or {}))
        self.controls.append((name, report))
        if verdict is Zeroness.ZERO:
            self.failures.append(f"control {name} is symbolically zero")

    def check(self, name: str, ok: bool, why: str = ""):
        if not ok:
            self.failures.append(f"{name}{': ' + why if why else ''}")

    def outcome(self, detail: str) -> Outcome:
        if self.failures:
            detail += "; failures: " + "; ".join(self.failures[:5])
        return Outcome(not self.failures, detail, self.zeros, self.controls)


@functools.cache
def gallery() -> dict[str, mf.Manifest]:
    return {p.stem: mf.load(p) for p in mf.bundled()}


def rng(*salt) -> random.Random:
    return random.Random(":".join(map(str, salt)))


def poisson_examples():
    for name, m in gallery().items():
        if m.poisson is not None:
            yield name, m, PoissonStructure(m.poisson)


def presentations():
    for name, m, P in poisson_examples():
        if m.foliation is not None:
            with oracle.using_spec(SampleSpec(bounds=m.bounds)):
                yield name, m, RegularPoissonPresentation(P, FoliationFrame(m.foliation.frame))


def record(k: int, out: Outcome) -> Outcome:
    ACCEPTANCE[k] = (out.ok, out.detail)
    print(f"criterion {k}: {'PASS' if out.ok else 'FAIL'}  {out.detail}")
    return out


# -- 1: d, d_F, d_pi square to zero ------------------------------------------


@functools.cache
def criterion_1() -> Outcome:
    L = Ledger()
    timings = {}
    counts = {}

    start, before = time.perf_counter(), L.count
    for name, m in gallery().items():
        for deg in range(m.chart.n - 1):
            for k in range(3):
                w = gen.form(m.chart, deg, rng(1, "d", name, deg, k))
                L.zero(f"dd {name}", lambda w=w, m=m, deg=deg: (ext_d(ext_d(w)), AltTensor.zero(m.chart, deg + 2, FORM)), m.bounds)
    timings["d"], counts["d"] = time.perf_counter() - start, L.count - before

    start, before = time.perf_counter(), L.count
    for name, m in gallery().items():
        if m.foliation is None:
            continue
        with oracle.using_spec(SampleSpec(bounds=m.bounds)):
            F = FoliationFrame(m.foliation.frame)
        for deg in range(F.p - 1):
            for k in range(7):
                a = gen.leafwise(F, deg, rng(1, "dF", name, deg, k))
                L.zero(
                    f"dFdF {name}",
                    lambda a=a, F=F, deg=deg: (d_F(F, d_F(F, a)).as_tensor(), LeafwiseForm(F, deg + 2).as_tensor()),
                    m.bounds,
                )
    timings["d_F"], counts["d_F"] = time.perf_counter() - start, L.count - before

    start, before = time.perf_counter(), L.count
    for name, m, P in poisson_examples():
        for deg in range(m.chart.n - 1):
            for k in range(3):
                Q = gen.multivector(m.chart, deg, rng(1, "dpi", name, deg, k))
                L.zero(
                    f"dpidpi {name}",
                    lambda Q=Q, P=P, deg=deg, m=m: (
                        d_pi(P, d_pi(P, Q, cross_check=False), cross_check=False),
                        AltTensor.zero(m.chart, deg + 2, MV),
                    ),
                    m.bounds,
                )
    timings["d_pi"], counts["d_pi"] = time.perf_counter() - start, L.count - before

    for op in counts:
        L.check(f"{op} inputs", counts[op] >= MIN_INPUTS, f"{counts[op]} < {MIN_INPUTS}")
        L.check(f"{op} time", timings[op] < TIME_LIMIT, f"{timings[op]:.1f}s")
    detail = ", ".join(f"{op}: {counts[op]} inputs in {timings[op]:.1f}s" for op in counts)
    return L.outcome(detail)


# -- 2: anchor morphism and the two Koszul expressions ------------------------


@functools.cache
def criterion_2() -> Outcome:
    L = Ledger()
    names = ("trivial", "scaled", "aff1")
    for name in names:
        m = gallery()[name]
        P = PoissonStructure(m.poisson)
        for k in range(5):
            r = rng(2, name, k)
            a, b = gen.form(m.chart, 1, r), gen.form(m.chart, 1, r)

            def koszul(P=P, a=a, b=b):
                pa, pb = anchor(P, a), anchor(P, b)
                dpab = ext_d(AltTensor.scalar(P.chart, P.pi(a, b)))
                via_lie = lie_derivative(pa, b) - lie_derivative(pb, a) - dpab
                via_interior = interior(pa, ext_d(b)) - interior(pb, ext_d(a)) + dpab
                return via_lie, via_interior

            def morphism(P=P, koszul=koszul, a=a, b=b):
                return anchor(P, koszul()[1]), lie_bracket(anchor(P, a), anchor(P, b))

            L.zero(f"koszul {name}", koszul, m.bounds)
            L.zero(f"morphism {name}", morphism, m.bounds)
    return L.outcome(f"{L.count} identities on {', '.join(names)}")


# -- 3: modular field invariance and rescale law ------------------------------


@functools.cache
def criterion_3() -> Outcome:
    L = Ledger()
    pairs = rescales = 0
    for name, m, P in poisson_examples():
        with oracle.using_spec(SampleSpec(bounds=m.bounds)):
            mu = Runner(m, SampleSpec()).volume(P)
        n = m.chart.n

        def phi_of(mu, P=P):
            return modular_field(P, mu, check=False)

        L.zero(f"L_phi pi {name}", lambda mu=mu, P=P: (lie_derivative(phi_of(mu, P), P.pi), AltTensor.zero(P.chart, 2, MV)), m.bounds)
        L.zero(f"L_phi mu {name}", lambda mu=mu, P=P, n=n: (lie_derivative(phi_of(mu, P), mu), AltTensor.zero(P.chart, n, FORM)), m.bounds)
        pairs += 1
        if not {"x", "y"} <= set(m.chart.coords):
            continue
        for text in ("exp(x)", "exp(x^2 + y)"):
            a = m.chart.parse(text)
            dlog = AltTensor.differential(m.chart, a).scale(1 / a)

            def law(mu=mu, P=P, a=a, dlog=dlog):
                return phi_of(mu.scale(a), P), phi_of(mu, P) - anchor(P, dlog)

            if L.zero(f"rescale {name} {text}", law, m.bounds):
                rescales += 1
            if P.rank and name in ("scaled", "aff1"):
                L.control(
                    f"rescale with + sign {name} {text}",
                    modular_field(P, mu.scale(a), check=False),
                    modular_field(P, mu, check=False) + anchor(P, dlog),
                    m.bounds,
                )
    L.check("rescale count", rescales >= 6, str(rescales))
    return L.outcome(f"{pairs} (pi, mu) pairs invariant; rescale law on {rescales} (example, a) cases")


# -- 4: Reeb form of eta and the conformal rescaling ---------------------------


@functools.cache
def criterion_4() -> Outcome:
    L = Ledger()
    metrics = nonzero = rescaled = 0
    for name, m in gallery().items():
        if m.metric is None or m.foliation is None:
            continue
        with oracle.using_spec(SampleSpec(bounds=m.bounds)):
            F = FoliationFrame(m.foliation.frame)
            g = Metric(m.chart, m.metric)
            split = orthogonal_complement(g, F)
            mc = mean_curvature(g, F, split)
            eta = eta_form(g, F, split=split)
        metrics += 1
        if mc.K.is_zero() is Zeroness.NONZERO:
            nonzero += 1
        L.zero(
            f"reeb(eta) = -K {name}",
            lambda F=F, eta=eta, K=mc.K: (reeb_form(F, eta, check=False).as_tensor(), (-K).as_tensor()),
            m.bounds,
        )
        h = exactness_probe(F, mc.K, m.ansatz)
        if h is None:
            continue
        g1 = g.conformal(sp.exp(2 * h / F.q))
        with oracle.using_spec(SampleSpec(bounds=m.bounds)):
            H1 = mean_curvature(g1, F).H
        if L.zero(f"conformal H = 0 {name}", lambda H1=H1, m=m: (H1, AltTensor.zero(m.chart, 1, MV)), m.bounds):
            rescaled += 1
        if mc.K.is_zero() is Zeroness.NONZERO:
            with oracle.using_spec(SampleSpec(bounds=m.bounds)):
                wrong = mean_curvature(g.conformal(sp.exp(-2 * h / F.q)), F).H
            L.control(f"conformal with exp(-2h/q) {name}", wrong, AltTensor.zero(m.chart, 1, MV), m.bounds)
    L.check("metrics", metrics >= 3, str(metrics))
    L.check("nonzero K", nonzero >= 1, str(nonzero))
    L.check("rescaled", rescaled >= 1, str(rescaled))
    return L.outcome(f"{metrics} metrics ({nonzero} with K != 0); H = 0 after rescaling on {rescaled}")


# -- 5: modular field against the Reeb class -----------------------------------


@functools.cache
def criterion_5() -> Outcome:
    L = Ledger()
    used = 0
    for name, m, R in presentations():
        nu = m.foliation.normal
        if nu is None or not m.foliation.complements:
            continue
        used += 1
        with oracle.using_spec(SampleSpec(bounds=m.bounds)):
            alpha = reeb_form(R.foliation, nu)
        for k, comp in enumerate([None, *m.foliation.complements]):
            def divergence_route(R=R, nu=nu, comp=comp):
                return modular_field(R.poisson, reeb_volume(R, nu, comp), check=False)

            def lie_route(R=R, nu=nu):
                return pi_star(R, reeb_form(R.foliation, nu, check=False))

            L.zero(f"phi = pi_star(alpha) {name}[{k}]", lambda d=divergence_route, lr=lie_route: (d(), lr()), m.bounds)
            L.zero(
                f"phi = -anchor(alpha~) {name}[{k}]",
                lambda d=divergence_route, R=R, comp=comp, alpha=alpha: (d(), -anchor(R.poisson, extend_leafwise(R, alpha, comp))),
                m.bounds,
            )
            if alpha.is_zero() is Zeroness.NONZERO:
                with oracle.using_spec(SampleSpec(bounds=m.bounds)):
                    phi = divergence_route()
                L.control(f"phi = -pi_star(alpha) {name}[{k}]", phi, -pi_star(R, alpha), m.bounds)
        for a in m.foliation.gauges:
            with oracle.using_spec(SampleSpec(bounds=m.bounds)):
                r = gauge_coherence_check(R, nu, a)
            L.check(f"gauge coherence {name}", r.verdict is Verdict.SYMBOLIC_PASS, r.residual)
    L.check("presentations", used >= 3, str(used))
    return L.outcome(f"{used} presentations, default plus bundled complements, with gauge coherence")


# -- 6: chain map ---------------------------------------------------------------


@functools.cache
def criterion_6() -> Outcome:
    L = Ledger()
    used = 0
    for name, m, R in presentations():
        used += 1
        F = R.foliation
        for deg in range(F.p + 1):
            for k in range(2):
                a = gen.leafwise(F, deg, rng(6, name, deg, k))

                def sides(R=R, F=F, a=a, deg=deg):
                    rhs = d_pi(R.poisson, pi_star(R, a), cross_check=False)
                    if deg == F.p:
                        return AltTensor.zero(R.chart, deg + 1, MV), rhs
                    return pi_star(R, d_F(F, a)), rhs

                if deg < R.chart.n:
                    L.zero(f"chain {name} deg {deg}", sides, m.bounds)
    return L.outcome(f"{L.count} leafwise forms over {used} presentations, every degree")


# -- 7: dual pairs ---------------------------------------------------------------


def _dual_pair(name: str, omega=None) -> DualPair:
    spec = gallery()[name].dual_pair
    return DualPair(
        omega if omega is not None else spec.omega,
        PoissonStructure(spec.p1_pi), spec.rho1, PoissonStructure(spec.p2_pi), spec.rho2,
        complete=spec.complete,
    )


@functools.cache
def criterion_7() -> Outcome:
    L = Ledger()
    D = _dual_pair("pair_groupoid")
    L.check("pair groupoid", dual_pair_check(D).verdict is Verdict.SYMBOLIC_PASS)
    W = D.W
    L.zero(
        "rho2 anti-Poisson",
        lambda: (
            AltTensor.scalar(W, D.poisson.bracket(D.rho2[0], D.rho2[1])),
            AltTensor.scalar(W, -_compose(D.P2.pi[(0, 1)], D.P2.chart, D.rho2)),
        ),
    )
    broken = _dual_pair("pair_groupoid", AltTensor(W, 2, FORM, {(0, 1): 1, (2, 3): 1}))
    r = dual_pair_check(broken)
    L.check("sign-broken pair fails", r.verdict is Verdict.FAIL)
    L.control(
        "sign-broken pair",
        AltTensor.scalar(W, broken.poisson.bracket(broken.rho2[0], broken.rho2[1])),
        AltTensor.scalar(W, -_compose(broken.P2.pi[(0, 1)], broken.P2.chart, broken.rho2)),
    )

    C = _dual_pair("casimir")
    steps = 0
    for F, f, alpha in gallery()["casimir"].dual_pair.casimirs:
        r = tangency_check(C, F, f, alpha)
        L.check(f"tangency {C.W.render(F)}", r.verdict is Verdict.SYMBOLIC_PASS, r.residual)
        steps += len(r.details["steps"])
        g = _compose(f, C.P2.chart, C.rho2)
        L.zero(
            "df(xi2) = 0",
            lambda F=F, g=g: (
                AltTensor.scalar(C.W, -sum((c * sp.diff(g, C.W.symbols[i[0]]) for i, c in C.hamiltonian(F).items()), sp.Integer(0))),
                AltTensor.scalar(C.W, 0),
            ),
        )
    P1 = C.P1.chart
    bad = tangency_check(C, "-t", "z", AltTensor.one_form(P1, [0, 0, 0]))
    L.check("transverse control fails", bad.verdict is Verdict.FAIL)
    g = _compose(sp.Symbol("z", real=True), C.P2.chart, C.rho2)
    X = C.hamiltonian(C.W.parse("-t"))
    L.control(
        "tangency with transverse xi1",
        AltTensor.scalar(C.W, -sum((c * sp.diff(g, C.W.symbols[i[0]]) for i, c in X.items()), sp.Integer(0))),
        AltTensor.scalar(C.W, 0),
    )
    return L.outcome(f"pair groupoid passes, sign-broken fails; {steps} tangency steps pass; transverse control fails")


# -- 8: oracle concordance ---------------------------------------------------------


NEGATIVE_EXTRA = ("jacobi failure", "non-involutive frame", "coarse finite difference")


def _extra_controls() -> list[tuple[str, OracleReport]]:
    from reebmod.tensor import Chart

    R3 = Chart("R3", ("x", "y", "z"))
    pi = AltTensor(R3, 2, MV, {(0, 1): 1, (0, 2): R3.parse("x")})
    out = [("jacobi failure", oracle.check_identity(schouten(pi, pi), AltTensor.zero(R3, 3, MV), CONFIRM))]
    X = AltTensor.vector(R3, [1, 0, 0])
    Y = AltTensor.vector(R3, [0, 1, R3.parse("x")])
    nu = AltTensor.one_form(R3, [0, R3.parse("-x"), 1])  # annihilates X and Y
    out.append((
        "non-involutive frame",
        oracle.check_identity(AltTensor.scalar(R3, nu(lie_bracket(X, Y))), AltTensor.scalar(R3, 0), CONFIRM),
    ))
    out.append((
        "coarse finite difference",
        oracle.fd_derivative_check(R3.coords, R3.parse("exp(10*x)"), "x", CONFIRM.with_(fd_step=0.1, box=(-1.0, 1.0))),
    ))
    return out


@functools.cache
def criterion_8() -> Outcome:
    zeros, controls = [], []
    for crit in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7):
        out = crit()
        zeros += out.zeros
        controls += out.controls
    controls += _extra_controls()
    bad_zeros = [(n, r.worst_residual) for n, r in zeros if not (r.passed and r.points == 100)]
    weak_controls = [n for n, r in controls if r.passed]
    ok = not bad_zeros and not weak_controls and len(controls) >= 8
    worst = max((r.worst_residual for _, r in zeros), default=0.0)
    detail = (
        f"{len(zeros)} symbolic zeros confirmed at 100 points (worst {worst:.1e} <= 1e-9); "
        f"{len(controls)} negative controls all exceed tolerance"
    )
    if bad_zeros:
        detail += f"; unconfirmed: {bad_zeros[:3]}"
    if weak_controls:
        detail += f"; controls within tolerance: {weak_controls[:3]}"
    return Outcome(ok, detail)


# -- 9: reproducible gallery --------------------------------------------------------


@functools.cache
def criterion_9() -> Outcome:
    cmd = [sys.executable, "-m", "reebmod.cli", "gallery", "--format", "json"]
    runs = [subprocess.run(cmd, capture_output=True) for _ in range(2)]
    same = runs[0].stdout == runs[1].stdout
    ok = same and runs[0].returncode == 0 and len(runs[0].stdout) > 0
    detail = f"two gallery runs, {len(runs[0].stdout)} bytes, {'identical' if same else 'different'}, exit {runs[0].returncode}"
    return Outcome(ok, detail)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


def _assert(k: int):
    out = record(k, CRITERIA[k]())
    assert out.ok, out.detail


def test_criterion_1_complexes():
    _assert(1)


def test_criterion_2_anchor_morphism_and_koszul():
    _assert(2)


def test_criterion_3_modular_field():
    _assert(3)


def test_criterion_4_mean_curvature():
    _assert(4)


def test_criterion_5_modular_reeb():
    _assert(5)


def test_criterion_6_chain_map():
    _assert(6)


def test_criterion_7_dual_pairs():
    _assert(7)


def test_criterion_8_oracle_concordance():
    _assert(8)


def test_criterion_9_reproducible_gallery():
    _assert(9)


if __name__ == "__main__":
    results = [record(k, fn()) for k, fn in CRITERIA.items()]
    sys.exit(0 if all(r.ok for r in results) else 1)
