"""Exact scalar arithmetic on a coordinate chart.

Scalars are plain sympy expressions over real coordinate symbols.  Every
operation in the package passes its results through :func:`canonical`,
which puts rational functions in coprime ``p/q`` form and applies a small
fixed rewrite set to the transcendental atoms.  Zero testing is tri-state:
``Zero`` and ``NonZero`` are never wrong, ``Unknown`` means the canonical
form could not decide and the caller has to fall back on sampling.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import functools
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import mpmath
import sympy as sp

__all__ = [
    "ParseError",
    "PoleError",
    "Zeroness",
    "symbol",
    "parse",
    "canonical",
    "diff",
    "is_zero",
    "evaluate",
    "render",
    "is_rational_function",
    "transcendental_atoms",
    "uncanonicalized",
]

_FUNCTIONS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "log": sp.log, "sqrt": sp.sqrt}
_TRANSCENDENTAL = (sp.exp, sp.sin, sp.cos, sp.log)

_canonicalize_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "reebmod_canonicalize", default=True
)


class ParseError(ValueError):
    """Malformed expression text; ``position`` is a 0-based column."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


class PoleError(ZeroDivisionError):
    pass


class Zeroness(enum.Enum):
    ZERO = "Zero"
    NONZERO = "NonZero"
    UNKNOWN = "Unknown"


@functools.lru_cache(maxsize=None)
def symbol(name: str) -> sp.Symbol:
    """The real coordinate symbol called ``name``."""
    return sp.Symbol(name, real=True)


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), m.start(2)))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", text, m.start(3))
            tokens.append(("op", ch, m.start(3)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := ('+'|'-') unary | power
    # power  := atom ('^' unary)?        exponent must reduce to an integer
    # atom   := num | name | func '(' expr ')' | '(' expr ')'

    def __init__(self, text: str, variables: Mapping[str, sp.Symbol]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", self.text, pos)

    def parse(self) -> sp.Expr:
        if self.peek()[0] == "end":
            raise ParseError("empty expression", self.text, 0)
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", self.text, pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            e = self.unary()
            return -e if val == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = sp.nsimplify(self.unary())
            if not exponent.is_Integer:
                raise ParseError("exponent must be an integer", self.text, exp_pos)
            return base**exponent
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return sp.Integer(int(val))
        if kind == "name":
            if val in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCTIONS[val](arg)
            if val not in self.variables:
                raise ParseError(f"unknown variable {val!r}", self.text, pos)
            return self.variables[val]
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", self.text, pos)


def parse(text: str, coords: Iterable[str]) -> sp.Expr:
    """Parse ``text`` over the coordinate names ``coords`` and canonicalize."""
    variables = {name: symbol(name) for name in coords}
    try:
        e = _Parser(str(text), variables).parse()
    except ZeroDivisionError as exc:
        raise ParseError("division by zero", str(text), 0) from exc
    return canonical(e)


# --------------------------------------------------------------------------
# canonical form


def transcendental_atoms(e: sp.Expr) -> set[sp.Expr]:
    return set(e.atoms(*_TRANSCENDENTAL)) | {
        p for p in e.atoms(sp.Pow) if not p.exp.is_Integer
    }


def is_rational_function(e: sp.Expr) -> bool:
    return not transcendental_atoms(e) and not e.has(sp.E, sp.pi)


def _rewrite(e: sp.Expr) -> sp.Expr:
    """Fixed transcendental rewrites: log(exp(a)) -> a, exp(log(a)) -> a,
    merged exponentials, and sin(u)^2 -> 1 - cos(u)^2."""
    if e.is_Atom:
        return e
    args = [_rewrite(a) for a in e.args]
    if isinstance(e, sp.log) and isinstance(args[0], sp.exp):
        return args[0].args[0]
    if isinstance(e, sp.exp):
        inner = sp.cancel(args[0])
        if isinstance(inner, sp.log):
            return inner.args[0]
        return sp.exp(inner)
    if isinstance(e, (sp.sin, sp.cos, sp.log)):
        return e.func(sp.cancel(args[0]))
    if isinstance(e, sp.Pow) and isinstance(args[0], sp.sin) and args[1].is_Integer and args[1] >= 2:
        k = int(args[1])
        return args[0] ** (k % 2) * (1 - sp.cos(args[0].args[0]) ** 2) ** (k // 2)
    if isinstance(e, sp.Pow) and isinstance(args[0], sp.exp) and args[1].is_Integer:
        return sp.exp(sp.cancel(args[1] * args[0].args[0]))
    return e.func(*args)


@functools.lru_cache(maxsize=200_000)
def _canonical(e: sp.Expr) -> sp.Expr:
    if e.is_Number or e.is_Symbol:
        return e
    if is_rational_function(e):
        return sp.cancel(e)
    e = _rewrite(e)
    out = sp.cancel(e)
    if transcendental_atoms(out):
        # cancel splits exp(a+b) into exp(a)*exp(b); merge back for display
        out = sp.powsimp(out, combine="exp")
        out = _rewrite(out)
        out = sp.cancel(out)
    return out


def canonical(e) -> sp.Expr:
    """Canonical form (coprime numerator/denominator, rewrites applied).

    Inside :func:`uncanonicalized` this is the identity, so identity checks
    can be replayed on raw expression trees for the numeric oracle.
    """
    e = sp.sympify(e)
    if not _canonicalize_enabled.get():
        return e
    return _canonical(e)


@contextlib.contextmanager
def uncanonicalized():
    """Disable canonicalization of results within the block."""
    token = _canonicalize_enabled.set(False)
    try:
        yield
    finally:
        _canonicalize_enabled.reset(token)


def diff(e: sp.Expr, v: sp.Symbol | str) -> sp.Expr:
    if isinstance(v, str):
        v = symbol(v)
    return canonical(sp.diff(e, v))


# --------------------------------------------------------------------------
# zero testing

_PROBE_POINTS = (
    (Fraction(3, 7), Fraction(-5, 11), Fraction(2, 13), Fraction(7, 9)),
    (Fraction(-4, 9), Fraction(6, 5), Fraction(-3, 8), Fraction(5, 17)),
    (Fraction(11, 10), Fraction(1, 3), Fraction(-7, 6), Fraction(-2, 19)),
)


def _interval(e: sp.Expr, pt: Mapping[sp.Symbol, Fraction]):
    iv = mpmath.iv
    if e.is_Symbol:
        q = pt[e]
        return iv.mpf(q.numerator) / q.denominator
    if e.is_Rational:
        return iv.mpf(int(e.p)) / int(e.q)
    if e is sp.E:
        return iv.e
    if e is sp.pi:
        return iv.pi
    args = [_interval(a, pt) for a in e.args]
    if e.is_Add:
        out = args[0]
        for a in args[1:]:
            out = out + a
        return out
    if e.is_Mul:
        out = args[0]
        for a in args[1:]:
            out = out * a
        return out
    if e.is_Pow:
        base, ex = args[0], e.args[1]
        if ex.is_Integer:
            return base ** int(ex)
        if ex == sp.Rational(1, 2):
            return iv.sqrt(base)
        if ex == sp.Rational(-1, 2):
            return 1 / iv.sqrt(base)
        raise ValueError("unsupported power")
    if isinstance(e, sp.exp):
        return iv.exp(args[0])
    if isinstance(e, sp.sin):
        return iv.sin(args[0])
    if isinstance(e, sp.cos):
        return iv.cos(args[0])
    if isinstance(e, sp.log):
        return iv.log(args[0])
    raise ValueError(f"no interval rule for {e.func}")


def _certainly_nonzero(e: sp.Expr) -> bool:
    """Interval evaluation at fixed rational points; sound proof of e != 0."""
    syms = sorted(e.free_symbols, key=lambda s: s.name)
    for point in _PROBE_POINTS:
        pt = {s: point[i % len(point)] * (1 + i // len(point)) for i, s in enumerate(syms)}
        old = mpmath.iv.prec
        try:
            mpmath.iv.prec = 120
            val = _interval(e, pt)
        except (ValueError, ZeroDivisionError, TypeError):
            continue
        finally:
            mpmath.iv.prec = old
        if val.a > 0 or val.b < 0:
            return True
    return False


def is_zero(e) -> Zeroness:
    e = _canonical(sp.sympify(e))
    if e == 0:
        return Zeroness.ZERO
    if is_rational_function(e):
        return Zeroness.NONZERO
    num, _ = sp.fraction(e)
    if _certainly_nonzero(num):
        return Zeroness.NONZERO
    return Zeroness.UNKNOWN


# --------------------------------------------------------------------------
# evaluation and rendering


def evaluate(e: sp.Expr, pt: Mapping[str | sp.Symbol, object]) -> float:
    """Value of ``e`` at the point ``pt`` (coordinate -> rational)."""
    subs = {}
    for k, v in pt.items():
        key = symbol(k) if isinstance(k, str) else k
        subs[key] = sp.Rational(str(v)) if isinstance(v, (str, Fraction)) else sp.nsimplify(v, rational=True)
    e = canonical(e)
    missing = e.free_symbols - set(subs)
    if missing:
        raise ValueError(f"point does not assign {sorted(s.name for s in missing)}")
    num, den = sp.fraction(sp.together(e))
    dval = den.xreplace(subs)
    if dval == 0 or (not dval.is_Rational and abs(complex(dval.evalf(30))) < 1e-25):
        raise PoleError(f"pole of {e} at {dict((str(k), str(v)) for k, v in subs.items())}")
    val = (num.xreplace(subs) / dval).evalf(30)
    if val.has(sp.zoo, sp.nan) or not val.is_number:
        raise PoleError(f"{e} undefined at point")
    return float(val)


def render(e: sp.Expr, order: Sequence[sp.Symbol] | None = None) -> str:
    """Deterministic text rendering in the expression grammar.

    Monomials are printed in graded-lexicographic order over ``order``.
    """
    e = canonical(e)
    printer = _GrammarPrinter(order)
    return printer.doprint(e)


class _GrammarPrinter(sp.printing.str.StrPrinter):
    def __init__(self, order):
        super().__init__({"order": "none"})
        self._gens = list(order) if order else None

    def _sorted_terms(self, expr):
        terms = list(expr.args)
        gens = self._gens or sorted(expr.free_symbols, key=lambda s: s.name)

        def key(t):
            degs = [sp.degree(t, g) if t.is_polynomial(g) else 0 for g in gens]
            return (-sum(degs), [-d for d in degs], sp.default_sort_key(t))

        return sorted(terms, key=key)

    def _print_Add(self, expr, order=None):
        terms = self._sorted_terms(expr)
        out = []
        for i, t in enumerate(terms):
            s = self._print(t)
            if i == 0:
                out.append(s)
            elif s.startswith("-"):
                out.append(" - " + s[1:])
            else:
                out.append(" + " + s)
        return "".join(out)

    def _print_Pow(self, expr, rational=False):
        base, ex = expr.args
        if ex == sp.Rational(1, 2):
            return f"sqrt({self._print(base)})"
        if ex == -sp.Rational(1, 2):
            return f"1/sqrt({self._print(base)})"
        if ex.is_Integer and ex < 0:
            return f"1/{self.parenthesize(base ** (-ex), sp.printing.precedence.PRECEDENCE['Mul'] + 1)}"
        b = self.parenthesize(base, sp.printing.precedence.PRECEDENCE["Pow"] + 1)
        return f"{b}^{ex}" if ex >= 0 else f"{b}^({ex})"

    def _print_Exp1(self, expr):
        return "exp(1)"
