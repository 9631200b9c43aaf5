"""Numeric reference implementations used as independent oracles.

Each routine evaluates coefficient functions with lambdify and takes
derivatives by central differences, using the textbook coordinate formulas;
none of them goes through the symbolic operators under test.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from reebmod.oracle import SampleSpec, sample_points
from reebmod.tensor import AltTensor, perm_sign

H = 1e-5


def compile_scalar(coords: Sequence[str], e) -> Callable[..., float]:
    syms = sp.symbols(list(coords), real=True)
    f = sp.lambdify(syms, sp.sympify(e), modules=["math"])
    return lambda pt: float(f(*pt))


class NumField:
    """Full antisymmetric component array of an AltTensor as a function of the point."""

    def __init__(self, t: AltTensor):
        self.n, self.degree = t.chart.n, t.degree
        self.coords = t.chart.coords
        self.parts = [(idx, compile_scalar(self.coords, c)) for idx, c in t.items()]

    def __call__(self, pt) -> np.ndarray:
        out = np.zeros((self.n,) * self.degree)
        for idx, f in self.parts:
            v = f(pt)
            for perm in itertools.permutations(range(self.degree)):
                out[tuple(idx[p] for p in perm)] = perm_sign(perm) * v
        return out

    def partial(self, pt, k: int) -> np.ndarray:
        up, dn = list(pt), list(pt)
        up[k] += H
        dn[k] -= H
        return (self(up) - self(dn)) / (2 * H)


def ext_d(t: AltTensor, pt) -> np.ndarray:
    """(d w)_{i0..ik} = sum_r (-1)^r d_{ir} w_{i0..^ir..ik}."""
    w = NumField(t)
    n, k = w.n, w.degree
    grads = [w.partial(pt, m) for m in range(n)]
    out = np.zeros((n,) * (k + 1))
    for I in itertools.permutations(range(n), k + 1):
        out[I] = sum((-1) ** r * grads[I[r]][I[:r] + I[r + 1 :]] for r in range(k + 1))
    return out


def lie_derivative_form(X: AltTensor, t: AltTensor, pt) -> np.ndarray:
    """(L_X w)_I = X^m d_m w_I + sum_r w_{i1..m..ik} d_{ir} X^m."""
    x, w = NumField(X), NumField(t)
    n, k = w.n, w.degree
    xv, wv = x(pt), w(pt)
    dw = [w.partial(pt, m) for m in range(n)]
    dx = np.array([x.partial(pt, m) for m in range(n)])  # dx[i, m] = d_i X^m
    out = np.einsum("m,m...->...", xv, np.array(dw))
    for r in range(k):
        moved = np.moveaxis(wv, r, 0)  # slot r first
        term = np.tensordot(dx, moved, axes=([1], [0]))  # index i_r first
        out = out + np.moveaxis(term, 0, r)
    return out


def bracket(X: AltTensor, Y: AltTensor, pt) -> np.ndarray:
    x, y = NumField(X), NumField(Y)
    xv, yv = x(pt), y(pt)
    n = x.n
    dx = np.array([x.partial(pt, m) for m in range(n)])
    dy = np.array([y.partial(pt, m) for m in range(n)])
    return xv @ dy - yv @ dx


def d_pi(pi: AltTensor, Q: AltTensor, pt) -> np.ndarray:
    """(d_pi Q)^K from the coordinate formula with [dx_i, dx_j]_pi = d pi^{ij}
    and anchor(dx_k)^m = pi^{km}."""
    P, q = NumField(pi), NumField(Q)
    n, k = P.n, q.degree
    Pv = P(pt)
    dQ = [q.partial(pt, m) for m in range(n)]
    dP = [P.partial(pt, m) for m in range(n)]
    qv = q(pt)
    out = np.zeros((n,) * (k + 1))
    for K in itertools.permutations(range(n), k + 1):
        total = 0.0
        for j in range(k + 1):
            rest = K[:j] + K[j + 1 :]
            total += (-1) ** j * sum(Pv[K[j], m] * dQ[m][rest] for m in range(n))
        for i, j in itertools.combinations(range(k + 1), 2):
            rest = tuple(v for t, v in enumerate(K) if t not in (i, j))
            total += (-1) ** (i + j) * sum(dP[m][K[i], K[j]] * qv[(m,) + rest] for m in range(n))
        out[K] = total
    return out


def divergence(X: AltTensor, density, pt) -> float:
    """div X for the volume density * dx_1..dx_n: (1/m) d_i (m X^i)."""
    coords = X.chart.coords
    m = compile_scalar(coords, density)
    x = NumField(X)
    total = 0.0
    for i in range(X.chart.n):
        up, dn = list(pt), list(pt)
        up[i] += H
        dn[i] -= H
        total += (m(up) * x(up)[i] - m(dn) * x(dn)[i]) / (2 * H)
    return total / m(pt)


def modular_field(pi: AltTensor, density, pt) -> np.ndarray:
    """phi^i = div(anchor(dx_i)), anchor(dx_i)^j = pi^{ij}."""
    n = pi.chart.n
    out = np.zeros(n)
    for i in range(n):
        comps = [pi[(i, j)] if i != j else 0 for j in range(n)]
        out[i] = divergence(AltTensor.vector(pi.chart, comps), density, pt)
    return out


def points(chart_coords: Sequence[str], exprs: Sequence, spec: SampleSpec, count: int = 20):
    return sample_points(tuple(chart_coords), [sp.sympify(e) for e in exprs], spec.with_(count=count))


def close(a, b, tol: float = 1e-5) -> bool:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b))))
