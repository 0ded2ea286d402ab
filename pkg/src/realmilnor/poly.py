"""Exact multivariate polynomials over Q.

Coefficients are ``fractions.Fraction``; floats only appear when a polynomial
is evaluated.  Text input follows a small grammar (see ``docs/grammar.md``)::

    expr   := [sign] term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' uint)?
    base   := rational | ident | '(' expr ')'

Implicit multiplication ("2x") is rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "PolyVector",
    "PolyMatrix",
    "PolynomialSyntaxError",
    "NumericPolynomial",
    "parse",
    "evaluate",
    "gradient",
    "hessian",
    "perturb",
    "to_fraction",
]

Exponent = tuple[int, ...]


class PolynomialSyntaxError(ValueError):
    """Raised by :func:`parse`; ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


def to_fraction(value) -> Fraction:
    """Exact conversion; floats go through their decimal repr so 0.1 -> 1/10."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


@dataclass(frozen=True)
class Polynomial:
    variables: tuple[str, ...]
    _terms: tuple[tuple[Exponent, Fraction], ...]

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponent, object] | None = None):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variable names in {variables}")
        acc: dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != len(variables):
                raise ValueError(f"exponent {exp} does not match {len(variables)} variables")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            acc[exp] = acc.get(exp, Fraction(0)) + to_fraction(coeff)
        items = tuple(sorted(((e, c) for e, c in acc.items() if c != 0), key=_term_order))
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "_terms", items)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, variables: Sequence[str], value) -> "Polynomial":
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> "Polynomial":
        variables = tuple(variables)
        exp = tuple(int(v == name) for v in variables)
        if sum(exp) != 1:
            raise ValueError(f"unknown variable {name!r}")
        return cls(variables, {exp: 1})

    # -- data access ----------------------------------------------------------

    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e, _ in self._terms)

    def coefficient_scale(self) -> float:
        """Largest absolute coefficient, as a float (0 for the zero polynomial)."""
        return float(max((abs(c) for _, c in self._terms), default=0))

    # -- arithmetic -----------------------------------------------------------

    def _check(self, other: "Polynomial"):
        if other.variables != self.variables:
            raise ValueError(f"variable mismatch: {self.variables} vs {other.variables}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.variables, other)

    def __add__(self, other):
        other = self._coerce(other)
        acc = self.terms
        for e, c in other._terms:
            acc[e] = acc.get(e, Fraction(0)) + c
        return Polynomial(self.variables, acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.variables, {e: -c for e, c in self._terms})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        acc: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms:
            for e2, c2 in other._terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.variables, acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def diff(self, i: int) -> "Polynomial":
        acc = {}
        for e, c in self._terms:
            if e[i]:
                e2 = e[:i] + (e[i] - 1,) + e[i + 1:]
                acc[e2] = c * e[i]
        return Polynomial(self.variables, acc)

    # -- numerics -------------------------------------------------------------

    def __call__(self, point) -> float:
        return evaluate(self, point)

    def compile(self) -> "NumericPolynomial":
        return NumericPolynomial(self)

    # -- text -----------------------------------------------------------------

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"Polynomial({to_text(self)!r}, variables={list(self.variables)})"


def _term_order(item):
    exp, _ = item
    # graded, then lexicographic, highest first
    return (-sum(exp), tuple(-e for e in exp))


def _monomial_text(variables, exp) -> str:
    parts = []
    for name, e in zip(variables, exp):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def _coeff_text(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def to_text(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    out = []
    for idx, (exp, c) in enumerate(p._terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        mono = _monomial_text(p.variables, exp)
        if not mono:
            body = _coeff_text(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_coeff_text(mag)}*{mono}"
        if idx == 0:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+/\d+|\d+\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise PolynomialSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.variables = variables
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return PolynomialSyntaxError(message, tok[2], self.text)

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return p

    def expr(self) -> Polynomial:
        negate = False
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            negate = self.take()[1] == "-"
        p = self.term()
        if negate:
            p = -p
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            p = p * self.factor()
        return p

    def factor(self) -> Polynomial:
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "-":
                raise self.error("negative exponent", tok)
            if tok[0] != "num":
                raise self.error("expected non-negative integer exponent", tok)
            if not tok[1].isdigit():
                raise self.error("fractional exponent", tok)
            self.take()
            b = b ** int(tok[1])
        return b

    def base(self) -> Polynomial:
        tok = self.peek()
        kind, value, _ = tok
        if kind == "num":
            self.take()
            try:
                value = Fraction(value)
            except ZeroDivisionError:
                raise self.error("zero denominator", tok) from None
            return Polynomial.constant(self.variables, value)
        if kind == "ident":
            self.take()
            if value not in self.variables:
                raise self.error(f"unknown identifier {value!r}", tok)
            result = Polynomial.variable(self.variables, value)
            nxt = self.peek()
            if nxt[0] in ("num", "ident") or (nxt[0] == "op" and nxt[1] == "("):
                raise self.error("implicit multiplication is not allowed", nxt)
            return result
        if kind == "op" and value == "(":
            self.take()
            p = self.expr()
            if not (self.peek()[0] == "op" and self.peek()[1] == ")"):
                raise self.error("expected ')'")
            self.take()
            return p
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {value!r}", tok)


def parse(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``text`` into a canonical :class:`Polynomial` over ``variables``.

    >>> parse("x^3 - y^2", ["x", "y"]).terms == {(3, 0): 1, (0, 2): -1}
    True
    """
    variables = tuple(variables)
    if not variables:
        raise ValueError("at least one variable is required")
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# evaluation and calculus


def evaluate(p: Polynomial, point) -> float:
    point = [float(v) for v in point]
    if len(point) != p.nvars:
        raise ValueError(f"point has {len(point)} coordinates, polynomial has {p.nvars} variables")
    total = 0.0
    for exp, c in p._terms:
        term = float(c)
        for v, e in zip(point, exp):
            if e:
                term *= v ** e
        total += term
    return total


@dataclass(frozen=True)
class PolyVector:
    entries: tuple[Polynomial, ...]

    def __post_init__(self):
        names = {e.variables for e in self.entries}
        if len(names) > 1:
            raise ValueError("entries must share a variable list")

    def __getitem__(self, i):
        return self.entries[i]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class PolyMatrix:
    entries: tuple[tuple[Polynomial, ...], ...]

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def shape(self):
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    def is_symmetric(self) -> bool:
        n = len(self.entries)
        return all(self.entries[i][j] == self.entries[j][i] for i in range(n) for j in range(n))


def gradient(p: Polynomial) -> PolyVector:
    return PolyVector(tuple(p.diff(i) for i in range(p.nvars)))


def hessian(p: Polynomial) -> PolyMatrix:
    g = gradient(p)
    n = p.nvars
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            # d2/dxi dxj built from the lower index so the matrix is symmetric as data
            a, b = min(i, j), max(i, j)
            row.append(g[a].diff(b))
        rows.append(tuple(row))
    return PolyMatrix(tuple(rows))


def perturb(f: Polynomial, t: Iterable) -> Polynomial:
    """Return ``f - sum_i t_i x_i``."""
    t = [to_fraction(v) for v in t]
    if len(t) != f.nvars:
        raise ValueError(f"perturbation has {len(t)} entries, polynomial has {f.nvars} variables")
    acc = f.terms
    for i, ti in enumerate(t):
        e = tuple(int(j == i) for j in range(f.nvars))
        acc[e] = acc.get(e, Fraction(0)) - ti
    return Polynomial(f.variables, acc)


# ---------------------------------------------------------------------------
# vectorised float evaluation


class NumericPolynomial:
    """Float view of a polynomial with its gradient and Hessian, evaluated on
    batches of points of shape ``(N, d)``."""

    _CHUNK = 1 << 16

    def __init__(self, p: Polynomial):
        self.poly = p
        self.dim = p.nvars
        self._f = _pack(p)
        self._g = [_pack(q) for q in gradient(p)]
        H = hessian(p)
        self._h = [[_pack(H[i, j]) for j in range(self.dim)] for i in range(self.dim)]

    def value(self, X) -> np.ndarray:
        return _eval_packed(self._f, np.atleast_2d(np.asarray(X, dtype=float)))

    def grad(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([_eval_packed(g, X) for g in self._g], axis=-1)

    def hess(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((X.shape[0], self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i, self.dim):
                out[:, i, j] = out[:, j, i] = _eval_packed(self._h[i][j], X)
        return out

    __call__ = value


def _pack(p: Polynomial):
    if p.is_zero():
        return np.zeros((0, p.nvars), dtype=np.int64), np.zeros(0)
    exps = np.array([e for e, _ in p._terms], dtype=np.int64)
    coeffs = np.array([float(c) for _, c in p._terms])
    return exps, coeffs


def _eval_packed(packed, X: np.ndarray) -> np.ndarray:
    exps, coeffs = packed
    if X.shape[1] != exps.shape[1]:
        raise ValueError(f"points have {X.shape[1]} coordinates, expected {exps.shape[1]}")
    if len(coeffs) == 0:
        return np.zeros(X.shape[0])
    out = np.empty(X.shape[0])
    step = NumericPolynomial._CHUNK
    for s in range(0, X.shape[0], step):
        block = X[s:s + step]
        mono = np.prod(block[:, None, :] ** exps[None, :, :], axis=2)
        out[s:s + step] = mono @ coeffs
    return out
