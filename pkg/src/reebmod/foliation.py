"""Regular foliations given by tangent frames.

A foliation is presented by p pointwise independent vector fields whose
brackets close up: ``[X_i, X_j] = sum_k c_ij^k X_k`` with function
coefficients.  Leafwise forms are stored by their values on increasing
tuples of frame fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from . import linalg, oracle
from . import symkernel as sk
from .checks import CheckFailed, CheckResult, Verdict, combine, compare_tensors
from .symkernel import Zeroness, canonical
from .tensor import AltTensor, Chart, TensorError, Variance, interior, lie_bracket, lie_derivative, sort_indices

__all__ = [
    "IntegrabilityError",
    "NonProportionalError",
    "FrobeniusResult",
    "FoliationFrame",
    "LeafwiseForm",
    "frobenius_check",
    "d_F",
    "leafwise_function_differential",
    "check_normal_orientation",
    "reeb_form",
    "exactness_probe",
]

MV, FORM = Variance.MULTIVECTOR, Variance.FORM


class IntegrabilityError(ValueError):
    def __init__(self, result: CheckResult):
        self.result = result
        super().__init__(f"frame is not involutive: {result.residual}")


class NonProportionalError(ValueError):
    """L_X nu is not a multiple of nu: nu is not a normal orientation."""


@dataclass
class FrobeniusResult:
    check: CheckResult
    structure: dict[tuple[int, int], list[sp.Expr]]

    @property
    def integrable(self) -> bool:
        return self.check.ok


def _component_matrix(fields: Sequence[AltTensor]) -> list[list[sp.Expr]]:
    """n x p matrix whose columns are the fields."""
    comps = [f.components() for f in fields]
    n = fields[0].n
    return [[comps[j][i] for j in range(len(fields))] for i in range(n)]


def spot_check_rank(chart: Chart, columns: list[list[sp.Expr]], p: int, what: str, spec: oracle.SampleSpec):
    flat = [e for row in columns for e in row]
    fns = [oracle._compile(chart.coords, e) for e in flat]
    points = oracle.sample_points(chart.coords, flat, spec.with_(count=min(spec.count, 20)))
    ncols = len(columns[0])
    for pt in points:
        m = np.array([f(*pt) for f in fns], dtype=float).reshape(len(columns), ncols)
        if np.linalg.matrix_rank(m, tol=1e-10) < p:
            raise TensorError(f"{what} loses rank at sample point {dict(zip(chart.coords, pt))}")


def frobenius_check(fields: Sequence[AltTensor]) -> FrobeniusResult:
    """Solve [X_i, X_j] = sum_k c_ij^k X_k; Fail if some bracket leaves the span."""
    if not fields:
        raise TensorError("empty frame")
    chart = fields[0].chart
    for f in fields:
        if f.chart != chart or f.degree != 1 or f.variance is not MV:
            raise TensorError("frame fields must be vector fields on one chart")
    cols = _component_matrix(fields)
    p = len(fields)
    if linalg.rank(cols) < p:
        raise TensorError("frame fields are linearly dependent")
    structure: dict[tuple[int, int], list[sp.Expr]] = {}
    parts = []
    for i, j in itertools.combinations(range(p), 2):
        br = lie_bracket(fields[i], fields[j])
        c = linalg.solve(cols, br.components())
        if c is None:
            parts.append(
                CheckResult(f"bracket[{i + 1},{j + 1}]", "frobenius", Verdict.FAIL, br.render(),
                            {"bracket": br.render()})
            )
            continue
        structure[(i, j)] = c
        recon = AltTensor.vector(chart, [sum((c[k] * cols[r][k] for k in range(p)), sp.Integer(0)) for r in range(chart.n)])
        parts.append(compare_tensors(f"bracket[{i + 1},{j + 1}]", "frobenius", br, recon))
    check = combine("frobenius", "frobenius", parts) if parts else CheckResult("frobenius", "frobenius", Verdict.SYMBOLIC_PASS)
    return FrobeniusResult(check, structure)


class FoliationFrame:
    """Tangent frame X_1..X_p of a regular foliation on a chart."""

    def __init__(self, fields: Sequence[AltTensor], *, spec: oracle.SampleSpec | None = None):
        fields = tuple(fields)
        result = frobenius_check(fields)
        if not result.integrable:
            raise IntegrabilityError(result.check)
        self.fields = fields
        self.chart: Chart = fields[0].chart
        self.frobenius = result
        self.structure = result.structure
        self.columns = _component_matrix(fields)
        spot_check_rank(self.chart, self.columns, self.p, "frame", spec or oracle.current_spec())

    @classmethod
    def from_pfaffian(cls, forms: Sequence[AltTensor], **kwargs) -> "FoliationFrame":
        """Frame spanning the common kernel of the given 1-forms."""
        chart = forms[0].chart
        rows = [f.components() for f in forms]
        basis = linalg.nullspace(rows)
        if not basis:
            raise TensorError("the forms have no common kernel")
        return cls([AltTensor.vector(chart, v) for v in basis], **kwargs)

    @property
    def p(self) -> int:
        return len(self.fields)

    @property
    def q(self) -> int:
        return self.chart.n - self.p

    def bracket_coefficients(self, i: int, j: int) -> list[sp.Expr]:
        """c_ij^k for any i, j (antisymmetric)."""
        if i == j:
            return [sp.Integer(0)] * self.p
        if i < j:
            return self.structure[(i, j)]
        return [canonical(-c) for c in self.structure[(j, i)]]

    def decompose(self, v: AltTensor) -> list[sp.Expr] | None:
        """Coefficients of a vector field in the frame, None if not tangent."""
        return linalg.solve(self.columns, v.components())

    def apply(self, i: int, f: sp.Expr) -> sp.Expr:
        """X_i(f)."""
        x = self.fields[i]
        return canonical(sum((c * sp.diff(f, self.chart.symbols[k[0]]) for k, c in x.items()), sp.Integer(0)))

    def restrict(self, form: AltTensor) -> "LeafwiseForm":
        """Restriction of a differential form to the leaves."""
        if form.variance is not FORM and form.degree:
            raise TensorError("only differential forms restrict to leaves")
        coeffs = {I: form(*(self.fields[i] for i in I)) for I in itertools.combinations(range(self.p), form.degree)}
        return LeafwiseForm(self, form.degree, coeffs)

    def __repr__(self):
        return "FoliationFrame(" + ", ".join(f.render() for f in self.fields) + ")"


class LeafwiseForm:
    """Tangential r-form: values alpha(X_I) on increasing frame tuples I."""

    __slots__ = ("foliation", "degree", "_coeffs")

    def __init__(self, foliation: FoliationFrame, degree: int, coeffs: Mapping[tuple[int, ...], object] | None = None):
        if not 0 <= degree <= foliation.p:
            raise TensorError(f"leafwise degree {degree} out of range (p = {foliation.p})")
        raw: dict[tuple[int, ...], sp.Expr] = {}
        for idx, c in (coeffs or {}).items():
            sign, key = sort_indices(tuple(idx))
            if len(key) != degree:
                raise TensorError(f"index {idx} does not have length {degree}")
            if sign:
                raw[key] = raw.get(key, 0) + sign * sp.sympify(c)
        self.foliation = foliation
        self.degree = degree
        self._coeffs = {k: v for k, v in sorted((k, canonical(v)) for k, v in raw.items()) if v != 0}

    @classmethod
    def function(cls, foliation: FoliationFrame, f) -> "LeafwiseForm":
        return cls(foliation, 0, {(): f})

    def __getitem__(self, idx) -> sp.Expr:
        if isinstance(idx, int):
            idx = (idx,)
        sign, key = sort_indices(tuple(idx))
        if sign == 0:
            return sp.Integer(0)
        c = self._coeffs.get(key, sp.Integer(0))
        return c if sign > 0 else -c

    def items(self):
        return self._coeffs.items()

    @property
    def coeffs(self):
        return dict(self._coeffs)

    def all_indices(self):
        return itertools.combinations(range(self.foliation.p), self.degree)

    def _same(self, other):
        if other.foliation is not self.foliation or other.degree != self.degree:
            raise TensorError("leafwise forms of different foliations or degrees")

    def __add__(self, other: "LeafwiseForm") -> "LeafwiseForm":
        self._same(other)
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0) + v
        return LeafwiseForm(self.foliation, self.degree, out)

    def __neg__(self):
        return LeafwiseForm(self.foliation, self.degree, {k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "LeafwiseForm":
        return LeafwiseForm(self.foliation, self.degree, {k: f * v for k, v in self._coeffs.items()})

    def is_zero(self) -> Zeroness:
        return self.as_tensor().is_zero()

    def as_tensor(self) -> AltTensor:
        """Coefficients packed into a form on the base chart, slot i standing
        for X_i (p <= n), so the tensor comparison machinery applies."""
        return AltTensor(self.foliation.chart, self.degree, FORM, self._coeffs)

    def render(self) -> str:
        if not self._coeffs:
            return "0"
        chart = self.foliation.chart
        parts = []
        for idx, c in self._coeffs.items():
            slot = ",".join(f"X{i + 1}" for i in idx)
            parts.append(f"[{slot}]: {chart.render(c)}" if idx else chart.render(c))
        return "; ".join(parts)

    def __repr__(self):
        return f"LeafwiseForm<deg {self.degree}: {self.render()}>"


def d_F(F: FoliationFrame, alpha: LeafwiseForm) -> LeafwiseForm:
    """Leafwise exterior derivative on frame fields, bracket terms from c_ij^k."""
    if alpha.foliation is not F:
        raise TensorError("leafwise form belongs to another foliation")
    r = alpha.degree
    if r == F.p:
        raise TensorError("d_F of a top-degree leafwise form lands in the zero space")
    coeffs = {}
    for K in itertools.combinations(range(F.p), r + 1):
        total = sp.Integer(0)
        for i in range(r + 1):
            term = F.apply(K[i], alpha[K[:i] + K[i + 1 :]])
            total += term if i % 2 == 0 else -term
        for i, j in itertools.combinations(range(r + 1), 2):
            rest = tuple(k for t, k in enumerate(K) if t not in (i, j))
            c = F.bracket_coefficients(K[i], K[j])
            term = sum((c[m] * alpha[(m,) + rest] for m in range(F.p) if c[m] != 0), sp.Integer(0))
            total += term if (i + j) % 2 == 0 else -term
        coeffs[K] = total
    return LeafwiseForm(F, r + 1, coeffs)


def leafwise_function_differential(F: FoliationFrame, f) -> LeafwiseForm:
    return d_F(F, LeafwiseForm.function(F, f))


def check_normal_orientation(F: FoliationFrame, nu: AltTensor) -> CheckResult:
    """nu is a q-form, not identically zero, annihilated by every frame field."""
    if nu.chart != F.chart or (nu.degree and nu.variance is not FORM):
        raise TensorError("normal orientation must be a differential form on the foliated chart")
    if nu.degree != F.q:
        raise TensorError(f"normal orientation has degree {nu.degree}, codimension is {F.q}")
    if nu.is_zero() is Zeroness.ZERO:
        raise TensorError("normal orientation is identically zero")
    if nu.degree == 0:
        return CheckResult("normal-orientation", "normal-orientation", Verdict.SYMBOLIC_PASS)
    parts = [
        compare_tensors(f"i_X{k + 1} nu", "normal-orientation", interior(X, nu), AltTensor.zero(F.chart, nu.degree - 1, FORM))
        for k, X in enumerate(F.fields)
    ]
    return combine("normal-orientation", "normal-orientation", parts)


def _proportionality(lx: AltTensor, nu: AltTensor) -> sp.Expr:
    pivot = None
    for idx, c in nu.items():
        if sk.is_zero(c) is Zeroness.NONZERO:
            pivot = idx
            break
    if pivot is None:
        pivot = next(iter(nu.coeffs))
    lam = canonical(lx[pivot] / nu[pivot])
    residual = lx - nu.scale(lam)
    if residual.is_zero() is Zeroness.NONZERO:
        raise NonProportionalError(f"L_X nu is not proportional to nu (residual {residual.render()})")
    if residual.is_zero() is Zeroness.UNKNOWN:
        numeric = oracle.check_identity(lx, nu.scale(lam))
        if not numeric.passed:
            raise NonProportionalError(f"L_X nu is not proportional to nu ({numeric.message})")
    return lam


def reeb_form(F: FoliationFrame, nu: AltTensor, *, check: bool = True) -> LeafwiseForm:
    """The tangential 1-form with L_{X_i} nu = alpha(X_i) nu.

    Raises :class:`NonProportionalError` if ``nu`` is not a normal
    orientation, :class:`CheckFailed` if the result is not d_F-closed.
    """
    adm = check_normal_orientation(F, nu)
    if not adm.ok:
        raise NonProportionalError(f"not a normal orientation: {adm.residual}")
    coeffs = {(i,): _proportionality(lie_derivative(X, nu), nu) for i, X in enumerate(F.fields)}
    alpha = LeafwiseForm(F, 1, coeffs)
    if check and F.p >= 2:
        closed = compare_tensors("reeb-closed", "reeb-closed", d_F(F, alpha).as_tensor(), LeafwiseForm(F, 2).as_tensor())
        if not closed.ok:
            raise CheckFailed(closed)
    return alpha


def exactness_probe(F: FoliationFrame, alpha: LeafwiseForm, basis: Sequence) -> sp.Expr | None:
    """Search h = sum lambda_m b_m with d_F h = alpha over a finite basis.

    Returns h, or None when the ansatz has no solution.  None says nothing
    about exactness in general.
    """
    if alpha.degree != 1:
        raise TensorError("exactness probe takes a leafwise 1-form")
    basis = [canonical(b) for b in basis]
    if not basis:
        return sp.Integer(0) if alpha.is_zero() is Zeroness.ZERO else None
    lams = sp.symbols(f"lam0:{len(basis)}")
    coords = set(F.chart.symbols)
    equations = []
    for i in range(F.p):
        resid = sum((lam * F.apply(i, b) for lam, b in zip(lams, basis)), sp.Integer(0)) - alpha[(i,)]
        num = sp.numer(sp.together(sp.expand(resid)))
        num = sp.expand(num)
        gens = sorted(
            (g for g in (num.free_symbols & coords) | sk.transcendental_atoms(num)),
            key=sp.default_sort_key,
        )
        if gens:
            poly = sp.Poly(num, *gens)
            equations.extend(poly.coeffs())
        elif num != 0:
            equations.append(num)
    if not equations:
        return sp.Integer(0)
    sol = sp.linsolve(equations, lams)
    if not sol:
        return None
    values = next(iter(sol))
    values = [v.subs({lam: 0 for lam in lams}) for v in values]
    h = canonical(sum((v * b for v, b in zip(values, basis)), sp.Integer(0)))
    check = (leafwise_function_differential(F, h) - alpha).is_zero()
    return h if check is Zeroness.ZERO else None
