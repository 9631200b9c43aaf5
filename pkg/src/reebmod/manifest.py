"""YAML scenario files.

A manifest names a chart and any of: a Poisson bivector, a volume density,
a foliation frame with normal orientation, a metric, an ansatz for
exactness probes and a dual pair.  Expressions are strings in the
symkernel grammar.  Tensors are written either as the literal form
``{variance, degree, components: [{indices, coeff}]}`` (1-based indices,
``variance``/``degree`` optional where the context fixes them), as a list of
n strings (vector field or 1-form) or as one string (function, or the
density of a top-degree form).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import sympy as sp
import yaml

from .symkernel import ParseError
from .tensor import AltTensor, Chart, TensorError, Variance

__all__ = ["ManifestError", "Manifest", "FoliationSpec", "DualPairSpec", "load", "parse", "bundled", "resolve"]

MV, FORM = Variance.MULTIVECTOR, Variance.FORM


class ManifestError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class FoliationSpec:
    frame: list[AltTensor]
    normal: AltTensor | None
    complements: list[list[AltTensor]] = field(default_factory=list)
    gauges: list[sp.Expr] = field(default_factory=list)


@dataclass
class DualPairSpec:
    omega: AltTensor
    p1_pi: AltTensor
    p2_pi: AltTensor
    rho1: list[sp.Expr]
    rho2: list[sp.Expr]
    complete: bool
    transfers: list[tuple[AltTensor, sp.Expr]]
    casimirs: list[tuple[sp.Expr, sp.Expr, AltTensor]]


@dataclass
class Manifest:
    name: str
    chart: Chart
    description: str = ""
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    poisson: AltTensor | None = None
    volume: AltTensor | None = None
    rescale: list[sp.Expr] = field(default_factory=list)
    foliation: FoliationSpec | None = None
    metric: list[list[sp.Expr]] | None = None
    ansatz: list[sp.Expr] = field(default_factory=list)
    dual_pair: DualPairSpec | None = None
    notes: list[str] = field(default_factory=list)


def _require(node: dict, key: str, path: str):
    if key not in node:
        raise ManifestError(path, f"missing key '{key}'")
    return node[key]


def _mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ManifestError(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _list(node, path: str) -> list:
    if not isinstance(node, list):
        raise ManifestError(path, f"expected a list, got {type(node).__name__}")
    return node


def _expr(chart: Chart, text, path: str) -> sp.Expr:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise ManifestError(path, f"expected an expression string, got {text!r}")
    try:
        return chart.parse(str(text))
    except ParseError as exc:
        raise ManifestError(path, str(exc)) from exc


def _chart(node, path: str) -> Chart:
    node = _mapping(node, path)
    coords = _list(_require(node, "coords", path), f"{path}.coords")
    if not all(isinstance(c, str) and c.isidentifier() for c in coords):
        raise ManifestError(f"{path}.coords", "coordinates must be identifiers")
    try:
        return Chart(str(node.get("name", "chart")), tuple(coords))
    except TensorError as exc:
        raise ManifestError(path, str(exc)) from exc


def tensor(node, chart: Chart, variance: Variance, degree: int, path: str) -> AltTensor:
    """Parse any of the accepted tensor spellings for the given slot."""
    try:
        if isinstance(node, (str, int)) and not isinstance(node, bool):
            e = _expr(chart, node, path)
            if degree == 0:
                return AltTensor(chart, 0, variance, {(): e})
            if degree == chart.n:
                return AltTensor(chart, degree, variance, {tuple(range(chart.n)): e})
            raise ManifestError(path, f"a single expression cannot describe a degree-{degree} tensor")
        if isinstance(node, list):
            if degree != 1:
                raise ManifestError(path, f"a component list describes a degree-1 tensor, expected degree {degree}")
            if len(node) != chart.n:
                raise ManifestError(path, f"expected {chart.n} components, got {len(node)}")
            return AltTensor(chart, 1, variance, {(i,): _expr(chart, c, f"{path}[{i}]") for i, c in enumerate(node)})
        node = _mapping(node, path)
        if "variance" in node and node["variance"] != variance.value:
            raise ManifestError(f"{path}.variance", f"expected '{variance.value}'")
        if "degree" in node and node["degree"] != degree:
            raise ManifestError(f"{path}.degree", f"expected {degree}")
        coeffs = {}
        for k, rec in enumerate(_list(_require(node, "components", path), f"{path}.components")):
            rpath = f"{path}.components[{k}]"
            rec = _mapping(rec, rpath)
            idx = _list(_require(rec, "indices", rpath), f"{rpath}.indices")
            if len(idx) != degree or not all(isinstance(i, int) and 1 <= i <= chart.n for i in idx):
                raise ManifestError(f"{rpath}.indices", f"need {degree} indices in 1..{chart.n}")
            if list(idx) != sorted(set(idx)):
                raise ManifestError(f"{rpath}.indices", "indices must be strictly increasing")
            key = tuple(i - 1 for i in idx)
            if key in coeffs:
                raise ManifestError(f"{rpath}.indices", "component given twice")
            coeffs[key] = _expr(chart, _require(rec, "coeff", rpath), f"{rpath}.coeff")
        return AltTensor(chart, degree, variance, coeffs)
    except TensorError as exc:
        raise ManifestError(path, str(exc)) from exc


def _fields(node, chart: Chart, path: str) -> list[AltTensor]:
    return [tensor(f, chart, MV, 1, f"{path}[{i}]") for i, f in enumerate(_list(node, path))]


def _bounds(node, chart: Chart, path: str) -> dict[str, tuple[float, float]]:
    out = {}
    for c, iv in _mapping(node, path).items():
        if c not in chart.coords:
            raise ManifestError(f"{path}.{c}", "unknown coordinate")
        iv = _list(iv, f"{path}.{c}")
        if len(iv) != 2 or not all(isinstance(v, (int, float)) for v in iv) or not iv[0] < iv[1]:
            raise ManifestError(f"{path}.{c}", "expected [low, high] with low < high")
        out[c] = (float(iv[0]), float(iv[1]))
    return out


def _foliation(node, chart: Chart, path: str) -> FoliationSpec:
    node = _mapping(node, path)
    frame = _fields(_require(node, "frame", path), chart, f"{path}.frame")
    if not 1 <= len(frame) <= chart.n:
        raise ManifestError(f"{path}.frame", "frame needs between 1 and n fields")
    q = chart.n - len(frame)
    normal = None
    if "normal" in node:
        normal = tensor(node["normal"], chart, FORM, q, f"{path}.normal")
    complements = []
    for k, comp in enumerate(_list(node.get("complements", []), f"{path}.complements")):
        fields = _fields(comp, chart, f"{path}.complements[{k}]")
        if len(fields) != q:
            raise ManifestError(f"{path}.complements[{k}]", f"complement needs {q} fields")
        complements.append(fields)
    gauges = [_expr(chart, g, f"{path}.gauges[{k}]") for k, g in enumerate(_list(node.get("gauges", []), f"{path}.gauges"))]
    return FoliationSpec(frame, normal, complements, gauges)


def _ansatz(node, chart: Chart, path: str) -> list[sp.Expr]:
    node = _mapping(node, path)
    degree = node.get("degree", 2)
    if not isinstance(degree, int) or degree < 0:
        raise ManifestError(f"{path}.degree", "expected a non-negative integer")
    basis = []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(chart.symbols, d):
            basis.append(sp.Mul(*combo))
    basis += [_expr(chart, e, f"{path}.extra[{k}]") for k, e in enumerate(_list(node.get("extra", []), f"{path}.extra"))]
    return basis


def _dual_pair(node, path: str) -> DualPairSpec:
    node = _mapping(node, path)
    W = _chart(_require(node, "w", path), f"{path}.w")
    omega = tensor(_require(node, "omega", path), W, FORM, 2, f"{path}.omega")
    sides = []
    for side in ("p1", "p2"):
        spath = f"{path}.{side}"
        s = _mapping(_require(node, side, path), spath)
        chart = _chart(_require(s, "chart", spath), f"{spath}.chart")
        pi = tensor(_require(s, "poisson", spath), chart, MV, 2, f"{spath}.poisson") if chart.n >= 2 else None
        if pi is None:
            raise ManifestError(spath, "Poisson manifold of dimension < 2")
        sides.append(pi)
    rhos = []
    for key, pi in (("rho1", sides[0]), ("rho2", sides[1])):
        comps = _list(_require(node, key, path), f"{path}.{key}")
        if len(comps) != pi.chart.n:
            raise ManifestError(f"{path}.{key}", f"expected {pi.chart.n} components")
        rhos.append([_expr(W, c, f"{path}.{key}[{i}]") for i, c in enumerate(comps)])
    complete = node.get("complete", False)
    if not isinstance(complete, bool):
        raise ManifestError(f"{path}.complete", "expected true or false")
    transfers = []
    for k, t in enumerate(_list(node.get("transfers", []), f"{path}.transfers")):
        tpath = f"{path}.transfers[{k}]"
        t = _mapping(t, tpath)
        transfers.append(
            (tensor(_require(t, "xi1", tpath), sides[0].chart, MV, 1, f"{tpath}.xi1"), _expr(W, _require(t, "F", tpath), f"{tpath}.F"))
        )
    casimirs = []
    for k, c in enumerate(_list(node.get("casimirs", []), f"{path}.casimirs")):
        cpath = f"{path}.casimirs[{k}]"
        c = _mapping(c, cpath)
        casimirs.append(
            (
                _expr(W, _require(c, "F", cpath), f"{cpath}.F"),
                _expr(sides[1].chart, _require(c, "f", cpath), f"{cpath}.f"),
                tensor(_require(c, "alpha", cpath), sides[0].chart, FORM, 1, f"{cpath}.alpha"),
            )
        )
    return DualPairSpec(omega, sides[0], sides[1], rhos[0], rhos[1], complete, transfers, casimirs)


_KEYS = {
    "name", "description", "chart", "sampling", "poisson", "volume", "rescale",
    "foliation", "metric", "ansatz", "dual_pair", "notes",
}


def parse(data: Any, source: str = "<manifest>") -> Manifest:
    data = _mapping(data, source)
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise ManifestError(source, f"unknown keys {unknown}")
    name = str(_require(data, "name", source))
    dp = _dual_pair(data["dual_pair"], "dual_pair") if "dual_pair" in data else None
    if "chart" in data:
        chart = _chart(data["chart"], "chart")
    elif dp is not None:
        chart = dp.omega.chart
    else:
        raise ManifestError(source, "missing key 'chart'")
    m = Manifest(name=name, chart=chart, description=str(data.get("description", "")), dual_pair=dp)
    m.notes = [str(s) for s in _list(data.get("notes", []), "notes")]
    if "sampling" in data:
        m.bounds = _bounds(_mapping(data["sampling"], "sampling").get("bounds", {}), chart, "sampling.bounds")
    if "poisson" in data:
        if chart.n < 2:
            raise ManifestError("poisson", "needs dimension >= 2")
        m.poisson = tensor(data["poisson"], chart, MV, 2, "poisson")
    if "volume" in data:
        m.volume = tensor(data["volume"], chart, FORM, chart.n, "volume")
    m.rescale = [_expr(chart, a, f"rescale[{k}]") for k, a in enumerate(_list(data.get("rescale", []), "rescale"))]
    if "foliation" in data:
        m.foliation = _foliation(data["foliation"], chart, "foliation")
    if "metric" in data:
        rows = _list(data["metric"], "metric")
        if len(rows) != chart.n or any(not isinstance(r, list) or len(r) != chart.n for r in rows):
            raise ManifestError("metric", f"expected a {chart.n}x{chart.n} matrix")
        m.metric = [[_expr(chart, v, f"metric[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
    m.ansatz = _ansatz(data.get("ansatz", {}), chart, "ansatz")
    return m


def load(path: str | Path) -> Manifest:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ManifestError(str(path), f"cannot read: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ManifestError(str(path), f"invalid YAML: {exc}") from exc
    return parse(data, str(path))


def bundled() -> list[Path]:
    """The gallery manifests shipped with the package, sorted by file name."""
    root = resources.files("reebmod") / "gallery"
    return sorted((Path(str(p)) for p in root.iterdir() if p.name.endswith(".yaml")), key=lambda p: p.name)


def resolve(name_or_path: str) -> Path:
    """A path on disk, or the stem of a bundled manifest."""
    p = Path(name_or_path)
    if p.exists():
        return p
    for b in bundled():
        if b.stem == name_or_path:
            return b
    raise ManifestError(name_or_path, "no such file or bundled manifest")
