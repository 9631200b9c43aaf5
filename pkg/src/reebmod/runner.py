"""Runs the checks a manifest supports and collects them into a report."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable


from . import generators as gen
from . import oracle
from .bridge import (
    PresentationError,
    RegularPoissonPresentation,
    chain_map_check,
    gauge_coherence_check,
    leafwise_symplectic,
    modular_reeb_check,
    pi_star,
    x0_membership,
)
from .checks import CheckFailed, CheckResult, Verdict, combine, compare_tensors
from .foliation import (
    FoliationFrame,
    IntegrabilityError,
    LeafwiseForm,
    NonProportionalError,
    d_F,
    exactness_probe,
    reeb_form,
)
from .manifest import Manifest
from .morita import DualPair, DualPairError, dual_pair_check, tangency_check, transfer
from .poisson import (
    JacobiError,
    KoszulInconsistency,
    PoissonStructure,
    anchor_morphism_check,
    d_pi,
    liouville_volume,
    modular_field,
    modular_identities,
    modular_rescale_check,
)
from .riemann import (
    Metric,
    PreconditionError,
    closed_defining_form_check,
    conformal_rescale_check,
    eta_form,
    eta_reeb_check,
    levi_civita_check,
    mean_curvature,
    normal_trace_check,
    orthogonal_complement,
)
from .tensor import AltTensor, TensorError, Variance, ext_d, volume_form

__all__ = ["Report", "Runner", "COMMANDS"]

MV, FORM = Variance.MULTIVECTOR, Variance.FORM

COMMANDS = (
    "check-jacobi", "modular", "reeb", "mean-curvature", "dpi",
    "bridge-check", "morita-check", "morita-transfer", "suite",
)

_DOMAIN_ERRORS = (
    TensorError, PresentationError, NonProportionalError, PreconditionError, DualPairError,
    KoszulInconsistency, oracle.SamplingError, ZeroDivisionError,
)


@dataclass
class Report:
    manifest: str
    command: str
    spec: oracle.SampleSpec
    checks: list[CheckResult] = field(default_factory=list)
    outputs: dict[str, object] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.verdict is not Verdict.FAIL for c in self.checks)

    def summary(self) -> dict[str, int]:
        counts = Counter(c.verdict.value for c in self.checks)
        return {v.value: counts.get(v.value, 0) for v in Verdict}

    def to_dict(self) -> dict:
        return {
            "manifest": self.manifest,
            "command": self.command,
            "sampling": self.spec.to_dict(),
            "notes": self.notes,
            "outputs": self.outputs,
            "checks": [c.to_dict() for c in self.checks],
            "summary": self.summary(),
            "ok": self.ok,
        }

    def to_text(self) -> str:
        lines = [f"== {self.manifest} :: {self.command}"]
        for note in self.notes:
            lines.append(f"   note: {note}")
        for key, value in self.outputs.items():
            lines.append(f"   {key}: {value}")
        for c in self.checks:
            line = f"   [{c.verdict.value}] {c.name} ({c.tag})"
            if not c.ok:
                line += f": {c.residual}"
            lines.append(line)
        summary = ", ".join(f"{k} {v}" for k, v in self.summary().items() if v)
        lines.append(f"   -> {summary or 'no checks'}; {'OK' if self.ok else 'FAILED'}")
        return "\n".join(lines)


class Runner:
    """Builds the objects a manifest describes and runs checks on them.

    Every check lands in the report exactly once; errors raised by the
    library become Fail records, never escape.
    """

    def __init__(self, manifest: Manifest, spec: oracle.SampleSpec, *, random_inputs: int = 3, confirm: bool = True):
        self.m = manifest
        self.spec = spec.with_(bounds={**manifest.bounds, **dict(spec.bounds)})
        self.random_inputs = random_inputs
        self.confirm = confirm
        self.report: Report | None = None
        self._cache: dict[str, object] = {}

    # -- plumbing ----------------------------------------------------------

    def _add(self, result: CheckResult):
        self.report.checks.append(result)

    def _guard(self, name: str, tag: str, fn: Callable[[], object]):
        """Run fn; record library failures under (name, tag) and return None."""
        try:
            return fn()
        except CheckFailed as exc:
            self._add(exc.result)
        except JacobiError as exc:
            self._add(exc.result)
        except IntegrabilityError as exc:
            self._add(exc.result)
        except _DOMAIN_ERRORS as exc:
            self._add(CheckResult(name, tag, Verdict.FAIL, str(exc)))
        return None

    def _rng(self, salt: str) -> random.Random:
        return random.Random(f"{self.spec.seed}:{self.m.name}:{salt}")

    def _render(self, e) -> str:
        return self.m.chart.render(e)

    # -- cached objects ----------------------------------------------------

    def _get(self, key: str, build: Callable[[], object], name: str, tag: str):
        if key not in self._cache:
            self._cache[key] = self._guard(name, tag, build)
        return self._cache[key]

    def poisson(self) -> PoissonStructure | None:
        if self.m.poisson is None:
            return None
        return self._get("poisson", lambda: PoissonStructure(self.m.poisson), "jacobi", "jacobi")

    def foliation(self) -> FoliationFrame | None:
        if self.m.foliation is None:
            return None
        return self._get("foliation", lambda: FoliationFrame(self.m.foliation.frame), "frobenius", "frobenius")

    def metric(self) -> Metric | None:
        if self.m.metric is None:
            return None
        return self._get("metric", lambda: Metric(self.m.chart, self.m.metric), "metric", "metric")

    def presentation(self) -> RegularPoissonPresentation | None:
        P, F = self.poisson(), self.foliation()
        if P is None or F is None:
            return None
        return self._get("presentation", lambda: RegularPoissonPresentation(P, F), "presentation", "presentation")

    def volume(self, P: PoissonStructure) -> AltTensor:
        if self.m.volume is not None:
            return self.m.volume
        if P.rank == self.m.chart.n:
            return liouville_volume(P)
        return volume_form(self.m.chart, 1)

    # -- sections ----------------------------------------------------------

    def run(self, command: str, **options) -> Report:
        self.report = Report(self.m.name, command, self.spec, notes=list(self.m.notes))
        with oracle.using_spec(self.spec):
            if command == "check-jacobi":
                self.check_jacobi()
            elif command == "modular":
                self.modular()
            elif command == "reeb":
                self.reeb()
            elif command == "mean-curvature":
                self.mean_curvature()
            elif command == "dpi":
                self.dpi()
            elif command == "bridge-check":
                self.bridge(**options)
            elif command == "morita-check":
                self.morita()
            elif command == "morita-transfer":
                self.morita_transfer(**options)
            elif command == "suite":
                self.suite()
            else:
                raise ValueError(f"unknown command {command}")
        return self.report

    def _missing(self, what: str, tag: str):
        self._add(CheckResult(what, tag, Verdict.UNDECIDED, f"manifest has no {what}"))

    def check_jacobi(self):
        if self.m.poisson is None:
            return self._missing("poisson", "jacobi")
        P = self.poisson()
        if P is not None:
            self.report.outputs["pi"] = P.pi.render()
            self.report.outputs["rank"] = P.rank
            self._add(P.jacobi)

    def d_squared(self):
        chart = self.m.chart
        rng = self._rng("d")
        parts = []
        for deg in range(chart.n - 1):
            for _ in range(self.random_inputs):
                w = gen.form(chart, deg, rng)
                parts.append(
                    compare_tensors(f"dd[deg {deg}]", "d-squared", ext_d(ext_d(w)), AltTensor.zero(chart, deg + 2, FORM), confirm=self.confirm)
                )
        if parts:
            self._add(combine("d-squared", "d-squared", parts))

    def modular(self):
        if self.m.poisson is None:
            return self._missing("poisson", "modular-invariance")
        P = self.poisson()
        if P is None:
            return
        mu = self._guard("volume", "modular-invariance", lambda: self.volume(P))
        if mu is None:
            return
        phi = self._guard("modular-field", "modular-invariance", lambda: modular_field(P, mu, check=False))
        if phi is None:
            return
        self.report.outputs["mu"] = mu.render()
        self.report.outputs["phi"] = phi.render()
        self._add(combine("modular-invariance", "modular-invariance", modular_identities(P, mu, phi, confirm=self.confirm)))
        for a in self.m.rescale:
            r = self._guard("modular-rescale", "modular-rescale", lambda: modular_rescale_check(P, mu, a, confirm=self.confirm))
            if r is not None:
                self._add(r)

    def dpi(self):
        if self.m.poisson is None:
            return self._missing("poisson", "dpi-squared")
        P = self.poisson()
        if P is None:
            return
        chart = self.m.chart
        rng = self._rng("dpi")

        def squares():
            parts = []
            for deg in range(chart.n - 1):
                for _ in range(self.random_inputs):
                    Q = gen.multivector(chart, deg, rng)
                    parts.append(
                        compare_tensors(f"dpi dpi[deg {deg}]", "dpi-squared", d_pi(P, d_pi(P, Q)), AltTensor.zero(chart, deg + 2, MV), confirm=self.confirm)
                    )
            return combine("dpi-squared", "dpi-squared", parts)

        r = self._guard("dpi-squared", "dpi-squared", squares)
        if r is not None:
            self._add(r)

        def morphism():
            parts = []
            for _ in range(self.random_inputs):
                a, b = gen.form(chart, 1, rng), gen.form(chart, 1, rng)
                parts.append(anchor_morphism_check(P, a, b, confirm=self.confirm))
            return combine("anchor-morphism", "anchor-morphism", parts)

        r = self._guard("anchor-morphism", "anchor-morphism", morphism)
        if r is not None:
            self._add(r)

    def reeb(self):
        F = self.foliation()
        if self.m.foliation is None:
            return self._missing("foliation", "reeb-closed")
        if F is None:
            return
        self._add(F.frobenius.check)
        rng = self._rng("dF")
        parts = []
        for deg in range(F.p - 1):
            for _ in range(self.random_inputs):
                a = gen.leafwise(F, deg, rng)
                parts.append(
                    compare_tensors(f"dF dF[deg {deg}]", "leafwise-d-squared", d_F(F, d_F(F, a)).as_tensor(), LeafwiseForm(F, deg + 2).as_tensor(), confirm=self.confirm)
                )
        if parts:
            self._add(combine("leafwise-d-squared", "leafwise-d-squared", parts))
        nu = self.m.foliation.normal
        if nu is None:
            return
        alpha = self._guard("reeb-closed", "reeb-closed", lambda: reeb_form(F, nu))
        if alpha is None:
            return
        self.report.outputs["nu"] = nu.render()
        self.report.outputs["alpha_F"] = alpha.render()
        # reeb_form raises unless d_F alpha = 0
        self._add(CheckResult("reeb-closed", "reeb-closed", Verdict.SYMBOLIC_PASS))
        h = exactness_probe(F, alpha, self.m.ansatz)
        if h is None:
            self.report.outputs["reeb_primitive"] = "NotFound"
            self._add(CheckResult("reeb-exactness", "reeb-exactness", Verdict.UNDECIDED, "no primitive in the ansatz"))
        else:
            self.report.outputs["reeb_primitive"] = self._render(h)
            self._add(
                compare_tensors("reeb-exactness", "reeb-exactness", d_F(F, LeafwiseForm.function(F, h)).as_tensor(), alpha.as_tensor(), confirm=self.confirm)
            )
        for a in self.m.foliation.gauges:
            def gauge(a=a):
                moved = reeb_form(F, nu.scale(a))
                dlog = F.restrict(AltTensor.differential(self.m.chart, a).scale(1 / a))
                return compare_tensors("reeb-gauge", "reeb-gauge", moved.as_tensor(), (alpha + dlog).as_tensor(), confirm=self.confirm)

            r = self._guard("reeb-gauge", "reeb-gauge", gauge)
            if r is not None:
                self._add(r)
        if F.q == 1:
            r = self._guard("closed-defining-form", "closed-defining-form", lambda: closed_defining_form_check(F, nu, self.m.ansatz))
            if r is not None:
                self._add(r)

    def mean_curvature(self):
        if self.m.metric is None or self.m.foliation is None:
            return self._missing("metric and foliation", "mean-curvature")
        g, F = self.metric(), self.foliation()
        if g is None or F is None:
            return
        self._add(levi_civita_check(g))

        def body():
            split = orthogonal_complement(g, F)
            mc = mean_curvature(g, F, split)
            self.report.outputs["normals"] = [Y.render() for Y in split.normals]
            self.report.outputs["H_perp"] = mc.H.render()
            self.report.outputs["K_perp"] = mc.K.render()
            self.report.outputs["eta"] = eta_form(g, F, split=split).render()
            self._add(normal_trace_check(g, F, split))
            self._add(eta_reeb_check(g, F, confirm=self.confirm))
            h = exactness_probe(F, mc.K, self.m.ansatz)
            if h is None:
                self._add(CheckResult("conformal-rescale", "conformal-rescale", Verdict.UNDECIDED, "no primitive of K_perp in the ansatz"))
            else:
                self.report.outputs["K_primitive"] = self._render(h)
                self._add(conformal_rescale_check(g, F, h, confirm=self.confirm))

        self._guard("mean-curvature", "mean-curvature", body)

    def bridge(self, normal: AltTensor | None = None, complement: list[AltTensor] | None = None):
        if self.m.poisson is None or self.m.foliation is None:
            return self._missing("poisson and foliation", "modular-reeb")
        R = self.presentation()
        if R is None:
            return
        nu = normal if normal is not None else self.m.foliation.normal
        omega = self._guard("leafwise-symplectic", "leafwise-symplectic", lambda: leafwise_symplectic(R))
        if omega is None:
            return
        self.report.outputs["omega"] = omega.render()
        self.report.outputs["kernel"] = [k.render() for k in R.kernel]
        self._add(compare_tensors("pi_star(omega) = pi", "pi-star-omega", pi_star(R, omega), R.poisson.pi, confirm=self.confirm))
        self._add(x0_membership(R, R.poisson.pi))
        rng = self._rng("chain")

        def chain():
            parts = []
            for deg in range(R.foliation.p + 1):
                for _ in range(self.random_inputs):
                    a = gen.leafwise(R.foliation, deg, rng)
                    parts.append(chain_map_check(R, a, confirm=self.confirm))
                    parts.append(x0_membership(R, pi_star(R, a)))
            return combine("chain-map", "chain-map", parts)

        r = self._guard("chain-map", "chain-map", chain)
        if r is not None:
            self._add(r)
        if nu is None:
            return
        complements = [complement] if complement is not None else [None, *self.m.foliation.complements]
        for k, comp in enumerate(complements):
            label = "default" if comp is None else f"complement {k}"
            rep = self._guard("modular-reeb", "modular-reeb", lambda: modular_reeb_check(R, nu, comp, basis=self.m.ansatz, confirm=self.confirm))
            if rep is None:
                continue
            out = rep.to_dict()
            out.pop("check")
            self.report.outputs[f"bridge[{label}]"] = out
            rep.result.name = f"modular-reeb[{label}]"
            self._add(rep.result)
            if rep.certificate is not None:
                self._add(rep.certificate)
        if complement is None:
            for a in self.m.foliation.gauges:
                r = self._guard("gauge-coherence", "gauge-coherence", lambda: gauge_coherence_check(R, nu, a))
                if r is not None:
                    self._add(r)

    def dual_pair(self) -> DualPair | None:
        spec = self.m.dual_pair
        if spec is None:
            return None

        def build():
            P1 = PoissonStructure(spec.p1_pi)
            P2 = PoissonStructure(spec.p2_pi)
            return DualPair(spec.omega, P1, spec.rho1, P2, spec.rho2, complete=spec.complete)

        return self._get("dual_pair", build, "dual-pair", "dual-pair")

    def morita(self):
        if self.m.dual_pair is None:
            return self._missing("dual_pair", "dual-pair")
        D = self.dual_pair()
        if D is None:
            return
        self.report.outputs["complete (declared)"] = D.complete
        self.report.outputs["pi_W"] = D.poisson.pi.render()
        self._add(dual_pair_check(D))
        for xi1, F in self.m.dual_pair.transfers:
            self._transfer(D, xi1, F)
        for F, f, alpha in self.m.dual_pair.casimirs:
            r = self._guard("tangency", "tangency", lambda: tangency_check(D, F, f, alpha))
            if r is not None:
                self._add(r)

    def _transfer(self, D: DualPair, xi1: AltTensor, F):
        t = self._guard("transfer", "transfer", lambda: transfer(D, xi1, F))
        if t is None:
            return
        key = f"transfer[{xi1.render()} ; F = {D.W.render(F)}]"
        self.report.outputs[key] = t.xi2.render() if t.xi2 is not None else None
        self._add(t.result)
        if t.xi2 is not None:
            back = self._guard("transfer-roundtrip", "transfer", lambda: transfer(D.swap(), t.xi2, F))
            if back is not None and back.xi2 is not None:
                self._add(compare_tensors("transfer-roundtrip", "transfer", back.xi2, xi1))

    def morita_transfer(self, xi1: AltTensor, F):
        if self.m.dual_pair is None:
            return self._missing("dual_pair", "transfer")
        D = self.dual_pair()
        if D is not None:
            self._transfer(D, xi1, F)

    def suite(self):
        self.d_squared()
        if self.m.poisson is not None:
            self.check_jacobi()
            if self.poisson() is not None:
                self.dpi()
                self.modular()
        if self.m.foliation is not None:
            self.reeb()
        if self.m.metric is not None and self.m.foliation is not None:
            self.mean_curvature()
        if self.m.poisson is not None and self.m.foliation is not None and self.poisson() is not None:
            self.bridge()
        if self.m.dual_pair is not None:
            self.morita()
