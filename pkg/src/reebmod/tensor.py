"""Alternating tensors on a coordinate chart.

Forms and multivector fields share one container, :class:`AltTensor`,
storing coefficients on strictly increasing 0-based index tuples.  The
pairing convention is the determinant one: ``(dx^dy)(d/dx, d/dy) = 1`` and
``(a^b)(u, v) = a(u) b(v) - a(v) b(u)``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import sympy as sp

from . import symkernel as sk
from .symkernel import Zeroness, canonical

__all__ = [
    "Chart",
    "Variance",
    "AltTensor",
    "TensorError",
    "wedge",
    "interior",
    "ext_d",
    "lie_derivative",
    "lie_bracket",
    "schouten",
    "divergence",
    "volume_form",
    "perm_sign",
    "sort_indices",
]


class TensorError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    name: str
    coords: tuple[str, ...]

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if not coords:
            raise TensorError("a chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise TensorError(f"duplicate coordinate names in {coords}")

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(sk.symbol(c) for c in self.coords)

    def index(self, name: str) -> int:
        return self.coords.index(name)

    def parse(self, text) -> sp.Expr:
        return sk.parse(text, self.coords)

    def render(self, e: sp.Expr) -> str:
        return sk.render(e, self.symbols)


class Variance(enum.Enum):
    MULTIVECTOR = "multivector"
    FORM = "form"

    @property
    def dual(self) -> "Variance":
        return Variance.FORM if self is Variance.MULTIVECTOR else Variance.MULTIVECTOR


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (0 if an index repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def sort_indices(seq: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    return perm_sign(seq), tuple(sorted(seq))


def _det(rows: Sequence[Sequence[sp.Expr]]) -> sp.Expr:
    k = len(rows)
    if k == 0:
        return sp.Integer(1)
    if k == 1:
        return rows[0][0]
    if k == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = sp.Integer(0)
    for perm in itertools.permutations(range(k)):
        term = sp.Integer(perm_sign(perm))
        for i, j in enumerate(perm):
            term = term * rows[i][j]
            if term == 0:
                break
        total += term
    return total


class AltTensor:
    """Antisymmetric tensor field of degree ``degree`` on ``chart``.

    ``coeffs`` maps strictly increasing 0-based index tuples to canonical
    expressions; missing tuples are zero.  Instances are immutable.
    """

    __slots__ = ("chart", "degree", "variance", "_coeffs", "_hash")

    def __init__(
        self,
        chart: Chart,
        degree: int,
        variance: Variance,
        coeffs: Mapping[tuple[int, ...], object] | None = None,
    ):
        if not 0 <= degree <= chart.n:
            raise TensorError(f"degree {degree} out of range for dimension {chart.n}")
        raw: dict[tuple[int, ...], sp.Expr] = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != degree:
                raise TensorError(f"index {idx} does not have length {degree}")
            if any(not 0 <= i < chart.n for i in idx):
                raise TensorError(f"index {idx} out of range for {chart.coords}")
            sign, key = sort_indices(idx)
            if sign == 0:
                continue
            term = sign * sp.sympify(c)
            raw[key] = raw[key] + term if key in raw else term
        clean = {k: canonical(v) for k, v in raw.items()}
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "variance", variance)
        object.__setattr__(
            self, "_coeffs", {k: v for k, v in sorted(clean.items()) if v != 0}
        )
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("AltTensor is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, chart: Chart, degree: int, variance: Variance) -> "AltTensor":
        return cls(chart, degree, variance, {})

    @classmethod
    def scalar(cls, chart: Chart, f, variance: Variance = Variance.FORM) -> "AltTensor":
        return cls(chart, 0, variance, {(): f})

    @classmethod
    def vector(cls, chart: Chart, components: Sequence) -> "AltTensor":
        if len(components) != chart.n:
            raise TensorError(f"expected {chart.n} components, got {len(components)}")
        return cls(chart, 1, Variance.MULTIVECTOR, {(i,): c for i, c in enumerate(components)})

    @classmethod
    def one_form(cls, chart: Chart, components: Sequence) -> "AltTensor":
        if len(components) != chart.n:
            raise TensorError(f"expected {chart.n} components, got {len(components)}")
        return cls(chart, 1, Variance.FORM, {(i,): c for i, c in enumerate(components)})

    @classmethod
    def differential(cls, chart: Chart, f) -> "AltTensor":
        """The exact 1-form df."""
        return cls.one_form(chart, [sk.diff(f, s) for s in chart.symbols])

    @classmethod
    def basis(cls, chart: Chart, indices: Sequence[int], variance: Variance) -> "AltTensor":
        return cls(chart, len(indices), variance, {tuple(indices): 1})

    # -- access ------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def coeffs(self) -> dict[tuple[int, ...], sp.Expr]:
        return dict(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def __getitem__(self, idx) -> sp.Expr:
        """Component on an arbitrary index tuple (antisymmetrized)."""
        if isinstance(idx, int):
            idx = (idx,)
        sign, key = sort_indices(idx)
        if sign == 0:
            return sp.Integer(0)
        c = self._coeffs.get(key, sp.Integer(0))
        return c if sign > 0 else -c

    @property
    def value(self) -> sp.Expr:
        """The function of a degree-0 tensor."""
        if self.degree != 0:
            raise TensorError("value is only defined in degree 0")
        return self._coeffs.get((), sp.Integer(0))

    def components(self) -> list[sp.Expr]:
        """Component list of a degree-1 tensor."""
        if self.degree != 1:
            raise TensorError("components() needs degree 1")
        return [self[(i,)] for i in range(self.n)]

    def all_indices(self) -> Iterable[tuple[int, ...]]:
        return itertools.combinations(range(self.n), self.degree)

    # -- algebra -----------------------------------------------------------

    def _check_compatible(self, other: "AltTensor"):
        if not isinstance(other, AltTensor):
            raise TypeError(f"expected AltTensor, got {type(other).__name__}")
        if other.chart != self.chart:
            raise TensorError("chart mismatch")
        if other.variance is not self.variance and not (self.degree == other.degree == 0):
            raise TensorError("variance mismatch")

    def __add__(self, other: "AltTensor") -> "AltTensor":
        self._check_compatible(other)
        if other.degree != self.degree:
            raise TensorError("cannot add tensors of different degree")
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = canonical(out.get(k, 0) + v)
        return AltTensor(self.chart, self.degree, self.variance, out)

    def __neg__(self) -> "AltTensor":
        return AltTensor(self.chart, self.degree, self.variance, {k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other: "AltTensor") -> "AltTensor":
        return self + (-other)

    def scale(self, f) -> "AltTensor":
        f = sp.sympify(f)
        return AltTensor(
            self.chart, self.degree, self.variance, {k: canonical(f * v) for k, v in self._coeffs.items()}
        )

    def __mul__(self, f) -> "AltTensor":
        if isinstance(f, AltTensor):
            return NotImplemented
        return self.scale(f)

    __rmul__ = __mul__

    def map_coeffs(self, fn) -> "AltTensor":
        return AltTensor(self.chart, self.degree, self.variance, {k: fn(v) for k, v in self._coeffs.items()})

    def is_zero(self) -> Zeroness:
        """Symbolic zero test over all coefficients."""
        verdicts = [sk.is_zero(c) for c in self._coeffs.values()]
        if any(v is Zeroness.NONZERO for v in verdicts):
            return Zeroness.NONZERO
        if any(v is Zeroness.UNKNOWN for v in verdicts):
            return Zeroness.UNKNOWN
        return Zeroness.ZERO

    def equals(self, other: "AltTensor") -> Zeroness:
        return (self - other).is_zero()

    def __eq__(self, other):
        if not isinstance(other, AltTensor):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.degree == other.degree
            and (self.variance is other.variance or self.degree == 0)
            and self._coeffs == other._coeffs
        )

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.chart, self.degree, self.variance, tuple(self._coeffs.items())))
            object.__setattr__(self, "_hash", h)
        return h

    # -- evaluation --------------------------------------------------------

    def __call__(self, *args: "AltTensor") -> sp.Expr:
        """Pair with ``degree`` arguments of the dual variance."""
        if len(args) != self.degree:
            raise TensorError(f"expected {self.degree} arguments, got {len(args)}")
        for a in args:
            if a.degree != 1 or a.variance is not self.variance.dual or a.chart != self.chart:
                raise TensorError("arguments must be degree-1 tensors of the dual variance")
        if self.degree == 0:
            return self.value
        comps = [a.components() for a in args]
        total = sp.Integer(0)
        for idx, c in self._coeffs.items():
            total += c * _det([[comp[i] for i in idx] for comp in comps])
        return canonical(total)

    # -- display -----------------------------------------------------------

    def render(self) -> str:
        if not self._coeffs:
            return "0"
        coords = self.chart.coords
        if self.variance is Variance.FORM:
            names = [f"d{c}" for c in coords]
        else:
            names = [f"d/d{c}" for c in coords]
        parts = []
        for idx, c in self._coeffs.items():
            basis = "^".join(names[i] for i in idx)
            coeff = self.chart.render(c)
            if not idx:
                parts.append(coeff)
            elif coeff == "1":
                parts.append(basis)
            else:
                parts.append(f"({coeff})*{basis}")
        return " + ".join(parts)

    def __repr__(self):
        return f"AltTensor<{self.variance.value} deg {self.degree} on {self.chart.name}: {self.render()}>"

    def to_literal(self) -> dict:
        """Manifest literal form (1-based indices)."""
        return {
            "variance": self.variance.value,
            "degree": self.degree,
            "components": [
                {"indices": [i + 1 for i in idx], "coeff": self.chart.render(c)}
                for idx, c in self._coeffs.items()
            ],
        }

    @classmethod
    def from_literal(cls, chart: Chart, literal: Mapping) -> "AltTensor":
        try:
            variance = Variance(literal["variance"])
            degree = int(literal["degree"])
            records = literal.get("components", [])
        except (KeyError, ValueError, TypeError) as exc:
            raise TensorError(f"bad tensor literal {literal!r}: {exc}") from exc
        coeffs: dict[tuple[int, ...], sp.Expr] = {}
        for rec in records:
            idx = tuple(int(i) - 1 for i in rec["indices"])
            if list(idx) != sorted(set(idx)):
                raise TensorError(f"indices {rec['indices']} must be strictly increasing")
            if idx in coeffs:
                raise TensorError(f"indices {rec['indices']} given twice")
            coeffs[idx] = chart.parse(rec["coeff"])
        return cls(chart, degree, variance, coeffs)


def _same_chart(*ts: AltTensor):
    chart = ts[0].chart
    for t in ts[1:]:
        if t.chart != chart:
            raise TensorError("chart mismatch")
    return chart


def wedge(a: AltTensor, b: AltTensor) -> AltTensor:
    chart = _same_chart(a, b)
    if a.variance is not b.variance and a.degree and b.degree:
        raise TensorError("cannot wedge a form with a multivector")
    variance = a.variance if a.degree else b.variance
    deg = a.degree + b.degree
    if deg > chart.n:
        raise TensorError(f"wedge degree {deg} exceeds dimension {chart.n}")
    out: dict[tuple[int, ...], sp.Expr] = {}
    for ia, ca in a.items():
        for ib, cb in b.items():
            sign, key = sort_indices(ia + ib)
            if sign == 0:
                continue
            out[key] = out.get(key, 0) + sign * ca * cb
    return AltTensor(chart, deg, variance, {k: canonical(v) for k, v in out.items()})


def interior(arg: AltTensor, t: AltTensor) -> AltTensor:
    """Contraction of ``t`` with a degree-1 tensor of the dual variance, first slot."""
    chart = _same_chart(arg, t)
    if arg.degree != 1 or arg.variance is not t.variance.dual:
        raise TensorError("interior product needs a degree-1 argument of the dual variance")
    if t.degree == 0:
        raise TensorError("interior product of a degree-0 tensor")
    comps = arg.components()
    out: dict[tuple[int, ...], sp.Expr] = {}
    for rest in itertools.combinations(range(chart.n), t.degree - 1):
        total = sp.Integer(0)
        for m in range(chart.n):
            if comps[m] != 0 and m not in rest:
                total += comps[m] * t[(m,) + rest]
        out[rest] = canonical(total)
    return AltTensor(chart, t.degree - 1, t.variance, out)


def ext_d(w: AltTensor) -> AltTensor:
    if w.variance is not Variance.FORM and w.degree:
        raise TensorError("exterior derivative of a multivector")
    chart = w.chart
    if w.degree == chart.n:
        return AltTensor.zero(chart, chart.n, Variance.FORM)
    syms = chart.symbols
    out: dict[tuple[int, ...], sp.Expr] = {}
    for idx, c in w.items():
        for m in range(chart.n):
            if m in idx:
                continue
            sign, key = sort_indices((m,) + idx)
            out[key] = out.get(key, 0) + sign * sp.diff(c, syms[m])
    return AltTensor(chart, w.degree + 1, Variance.FORM, {k: canonical(v) for k, v in out.items()})


def _apply(x: AltTensor, f: sp.Expr) -> sp.Expr:
    """Directional derivative X(f)."""
    return canonical(sum((c * sp.diff(f, x.chart.symbols[i[0]]) for i, c in x.items()), sp.Integer(0)))


def lie_bracket(x: AltTensor, y: AltTensor) -> AltTensor:
    _same_chart(x, y)
    xs, ys = x.components(), y.components()
    comps = [_apply(x, ys[k]) - _apply(y, xs[k]) for k in range(x.n)]
    return AltTensor.vector(x.chart, comps)


# -- Schouten bracket via odd coordinates -------------------------------------
# A multivector is a polynomial in odd variables theta_i <-> d/dx_i.
# [P, Q] = sum_i  dP/dtheta_i (right) * dQ/dx_i
#          - (-1)^{(p-1)(q-1)} dQ/dtheta_i (right) * dP/dx_i


def _odd_right_derivative(t: AltTensor, i: int) -> dict[tuple[int, ...], sp.Expr]:
    out = {}
    for idx, c in t.items():
        if i in idx:
            k = idx.index(i)
            sign = -1 if (t.degree - 1 - k) % 2 else 1
            out[idx[:k] + idx[k + 1 :]] = sign * c
    return out


def _super_product(a: dict, b: dict) -> dict:
    out: dict[tuple[int, ...], sp.Expr] = {}
    for ia, ca in a.items():
        for ib, cb in b.items():
            sign, key = sort_indices(ia + ib)
            if sign:
                out[key] = out.get(key, 0) + sign * ca * cb
    return out


def schouten(a: AltTensor, b: AltTensor) -> AltTensor:
    """Schouten-Nijenhuis bracket, degree deg a + deg b - 1.

    Restricts to the Lie bracket on vector fields and to X(f) on (X, f).
    """
    chart = _same_chart(a, b)
    for t in (a, b):
        if t.variance is not Variance.MULTIVECTOR and t.degree:
            raise TensorError("schouten bracket needs multivector fields")
    deg = a.degree + b.degree - 1
    if deg < 0:
        return AltTensor.zero(chart, 0, Variance.MULTIVECTOR)
    if deg > chart.n:
        return AltTensor.zero(chart, chart.n, Variance.MULTIVECTOR)
    syms = chart.symbols
    eps = -1 if ((a.degree - 1) * (b.degree - 1)) % 2 else 1
    total: dict[tuple[int, ...], sp.Expr] = {}
    for i in range(chart.n):
        da = _odd_right_derivative(a, i)
        db = _odd_right_derivative(b, i)
        bx = {k: sp.diff(c, syms[i]) for k, c in b.items()}
        ax = {k: sp.diff(c, syms[i]) for k, c in a.items()}
        for k, v in _super_product(da, bx).items():
            total[k] = total.get(k, 0) + v
        for k, v in _super_product(db, ax).items():
            total[k] = total.get(k, 0) - eps * v
    return AltTensor(chart, deg, Variance.MULTIVECTOR, {k: canonical(v) for k, v in total.items()})


def lie_derivative(x: AltTensor, t: AltTensor) -> AltTensor:
    """L_X T: Cartan's formula on forms, the Schouten bracket [X, T] on multivectors."""
    _same_chart(x, t)
    if x.degree != 1 or x.variance is not Variance.MULTIVECTOR:
        raise TensorError("lie_derivative needs a vector field")
    if t.degree == 0:
        return AltTensor(t.chart, 0, t.variance, {(): _apply(x, t.value)})
    if t.variance is Variance.FORM:
        if t.degree == t.n:
            return ext_d(interior(x, t))
        return interior(x, ext_d(t)) + ext_d(interior(x, t))
    return schouten(x, t)


def volume_form(chart: Chart, density) -> AltTensor:
    """density * dx_1 ^ ... ^ dx_n, rejected when the density is identically zero."""
    mu = AltTensor(chart, chart.n, Variance.FORM, {tuple(range(chart.n)): density})
    check_volume(mu)
    return mu


def check_volume(mu: AltTensor) -> sp.Expr:
    if mu.variance is not Variance.FORM or mu.degree != mu.n:
        raise TensorError("a volume form is a top-degree differential form")
    density = mu[tuple(range(mu.n))]
    if sk.is_zero(density) is Zeroness.ZERO:
        raise TensorError("volume form density is identically zero")
    return density


def divergence(x: AltTensor, mu: AltTensor) -> sp.Expr:
    """The scalar with L_X mu = div(X) mu."""
    _same_chart(x, mu)
    m = check_volume(mu)
    syms = x.chart.symbols
    total = sum((sp.diff(m * c, syms[i[0]]) for i, c in x.items()), sp.Integer(0))
    return canonical(total / m)
