"""Seeded random polynomial inputs for property checks."""

from __future__ import annotations

import itertools
import random

import sympy as sp

from .foliation import FoliationFrame, LeafwiseForm
from .tensor import AltTensor, Chart, Variance


def polynomial(chart: Chart, rng: random.Random, *, degree: int = 2, terms: int = 3) -> sp.Expr:
    """Sum of ``terms`` monomials of total degree <= degree with small integer coefficients."""
    syms = chart.symbols
    out = sp.Integer(0)
    for _ in range(terms):
        c = rng.choice([-3, -2, -1, 1, 2, 3])
        mono = sp.Integer(1)
        for _ in range(rng.randint(0, degree)):
            mono *= rng.choice(syms)
        out += c * mono
    return out


def alt_tensor(chart: Chart, degree: int, variance: Variance, rng: random.Random, **kw) -> AltTensor:
    coeffs = {
        idx: polynomial(chart, rng, **kw)
        for idx in itertools.combinations(range(chart.n), degree)
        if rng.random() < 0.7 or degree == 0
    }
    return AltTensor(chart, degree, variance, coeffs)


def form(chart: Chart, degree: int, rng: random.Random, **kw) -> AltTensor:
    return alt_tensor(chart, degree, Variance.FORM, rng, **kw)


def multivector(chart: Chart, degree: int, rng: random.Random, **kw) -> AltTensor:
    return alt_tensor(chart, degree, Variance.MULTIVECTOR, rng, **kw)


def leafwise(F: FoliationFrame, degree: int, rng: random.Random, **kw) -> LeafwiseForm:
    return LeafwiseForm(
        F, degree, {idx: polynomial(F.chart, rng, **kw) for idx in itertools.combinations(range(F.p), degree)}
    )
