"""Exact linear algebra over the field of chart functions.

Thin wrappers around sympy's ``DomainMatrix``; ranks and solutions are
generic ones (over the function field), which is what a chart-level
computation needs.  Results come back as canonical sympy expressions.
"""

from __future__ import annotations

from typing import Sequence

import sympy as sp
from sympy.polys.matrices import DomainMatrix

from .symkernel import canonical

Rows = Sequence[Sequence[sp.Expr]]


def _dm(rows: Rows) -> DomainMatrix:
    m = sp.Matrix([[sp.sympify(v) for v in row] for row in rows])
    return DomainMatrix.from_Matrix(m).to_field()


def _exprs(dm: DomainMatrix) -> list[list[sp.Expr]]:
    return [[canonical(v) for v in row] for row in dm.to_Matrix().tolist()]


def rank(rows: Rows) -> int:
    if not rows or not rows[0]:
        return 0
    return _dm(rows).rank()


def det(rows: Rows) -> sp.Expr:
    dm = _dm(rows)
    return canonical(dm.domain.to_sympy(dm.det()))


def inverse(rows: Rows) -> list[list[sp.Expr]]:
    dm = _dm(rows)
    return _exprs(dm.inv())


def nullspace(rows: Rows) -> list[list[sp.Expr]]:
    """Basis of {v : M v = 0}, each vector scaled to clear denominators."""
    dm = _dm(rows)
    basis = []
    for vec in dm.nullspace().to_Matrix().tolist():
        lead = next(v for v in reversed(vec) if v != 0)
        vec = [canonical(v / lead) for v in vec]
        den = sp.Integer(1)
        for v in vec:
            d = sp.fraction(v)[1]
            if d.is_polynomial(*d.free_symbols):
                den = sp.lcm(den, d)
        basis.append([canonical(v * den) for v in vec])
    return basis


def solve(rows: Rows, rhs: Sequence[sp.Expr]) -> list[sp.Expr] | None:
    """A particular solution of M v = rhs (free variables set to 0), or None."""
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    aug = [list(rows[i]) + [rhs[i]] for i in range(n_rows)]
    red, pivots = _dm(aug).rref()
    if n_cols in pivots:
        return None
    red_rows = red.to_Matrix().tolist()
    sol = [sp.Integer(0)] * n_cols
    for r, c in enumerate(pivots):
        sol[c] = canonical(red_rows[r][n_cols])
    return sol


def matmul(a: Rows, b: Rows) -> list[list[sp.Expr]]:
    n, k, m = len(a), len(b), len(b[0])
    return [[canonical(sum((a[i][t] * b[t][j] for t in range(k)), sp.Integer(0))) for j in range(m)] for i in range(n)]


def transpose(a: Rows) -> list[list[sp.Expr]]:
    return [list(col) for col in zip(*a)]
