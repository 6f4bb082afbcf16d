"""Exact sparse multivariate polynomials over the rationals.

A :class:`MultiPoly` maps exponent tuples (monomials) to :class:`fractions.Fraction`
coefficients.  Symbolic operations stay exact; floats only appear when a
polynomial is evaluated numerically.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple  # tuple[int, ...] of length n

MAX_DEGREE = 64
MAX_VARS = 8


class PolySyntaxError(ValueError):
    """Raised when a polynomial string does not follow the grammar."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownVariableError(PolySyntaxError):
    pass


class DimensionError(ValueError):
    pass


def grlex_key(mon: Monomial):
    return (sum(mon), mon)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        # exact binary value; callers wanting decimals should pass strings
        return Fraction(c)
    return Fraction(c)


class MultiPoly:
    """Immutable sparse polynomial in ``n`` variables with rational coefficients."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Monomial, object] | None = None):
        if n < 0:
            raise DimensionError("dimension must be non-negative")
        self.n = n
        clean: dict[Monomial, Fraction] = {}
        for mon, c in (terms or {}).items():
            mon = tuple(int(e) for e in mon)
            if len(mon) != n:
                raise DimensionError(f"monomial {mon} has length {len(mon)}, expected {n}")
            if any(e < 0 for e in mon):
                raise ValueError(f"negative exponent in {mon}")
            c = _as_fraction(c)
            if c:
                clean[mon] = clean.get(mon, Fraction(0)) + c
                if not clean[mon]:
                    del clean[mon]
        self._terms = clean
        self._hash = None

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "MultiPoly":
        return cls(n)

    @classmethod
    def const(cls, n: int, c) -> "MultiPoly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def var(cls, n: int, i: int) -> "MultiPoly":
        if not 0 <= i < n:
            raise IndexError(f"variable index {i} out of range for n={n}")
        mon = [0] * n
        mon[i] = 1
        return cls(n, {tuple(mon): 1})

    # basic properties -----------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.n, Fraction(0))

    def leading_term(self) -> tuple[Monomial, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        mon = max(self._terms, key=grlex_key)
        return mon, self._terms[mon]

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.n == other.n and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == MultiPoly.const(self.n, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"MultiPoly({self.n}, {self.to_string()!r})"

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = ["x"] if self.n == 1 else [f"x{i + 1}" for i in range(self.n)]
        if not self._terms:
            return "0"
        parts = []
        for mon in sorted(self._terms, key=grlex_key, reverse=True):
            c = self._terms[mon]
            sign = "-" if c < 0 else "+"
            c = abs(c)
            factors = [
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(mon) if e
            ]
            if not factors:
                body = str(c)
            elif c == 1:
                body = "*".join(factors)
            else:
                body = f"{c}*" + "*".join(factors)
            parts.append((sign, body))
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    # ring operations ------------------------------------------------------

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.n != self.n:
                raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")
            return other
        if isinstance(other, (int, Fraction)):
            return MultiPoly.const(self.n, other)
        raise TypeError(f"cannot combine MultiPoly with {type(other).__name__}")

    def __add__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        out = dict(self._terms)
        for mon, c in other._terms.items():
            out[mon] = out.get(mon, 0) + c
        return MultiPoly(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.n, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                mon = tuple(a + b for a, b in zip(ma, mb))
                out[mon] = out.get(mon, 0) + ca * cb
        return MultiPoly(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = MultiPoly.const(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, c) -> "MultiPoly":
        c = _as_fraction(c)
        return MultiPoly(self.n, {m: c * v for m, v in self._terms.items()})

    # calculus -------------------------------------------------------------

    def partial(self, i: int) -> "MultiPoly":
        """Partial derivative with respect to variable ``i`` (0-based)."""
        if not 0 <= i < self.n:
            raise IndexError(f"variable index {i} out of range for n={self.n}")
        out = {}
        for mon, c in self._terms.items():
            e = mon[i]
            if e:
                new = mon[:i] + (e - 1,) + mon[i + 1:]
                out[new] = c * e
        return MultiPoly(self.n, out)

    def higher_partial(self, alpha: Sequence[int]) -> "MultiPoly":
        if len(alpha) != self.n:
            raise DimensionError(f"multi-index length {len(alpha)} != {self.n}")
        if any(a < 0 for a in alpha):
            raise ValueError("multi-index entries must be non-negative")
        out = {}
        for mon, c in self._terms.items():
            if all(e >= a for e, a in zip(mon, alpha)):
                coef = c
                for e, a in zip(mon, alpha):
                    coef *= math.perm(e, a)
                out[tuple(e - a for e, a in zip(mon, alpha))] = coef
        return MultiPoly(self.n, out)

    def gradient(self) -> list["MultiPoly"]:
        return [self.partial(i) for i in range(self.n)]

    # evaluation -----------------------------------------------------------

    def _check_point(self, point) -> None:
        if len(point) != self.n:
            raise DimensionError(f"point has length {len(point)}, expected {self.n}")

    def eval(self, point: Sequence[float]) -> float:
        """Double-precision value, summed with :func:`math.fsum`."""
        self._check_point(point)
        x = [float(v) for v in point]
        vals = []
        for mon, c in self._terms.items():
            t = float(c)
            for xi, e in zip(x, mon):
                if e:
                    t *= xi**e
            vals.append(t)
        return math.fsum(vals)

    def eval_exact(self, point: Sequence) -> Fraction:
        self._check_point(point)
        x = [_as_fraction(v) for v in point]
        total = Fraction(0)
        for mon, c in self._terms.items():
            t = c
            for xi, e in zip(x, mon):
                if e:
                    t *= xi**e
            total += t
        return total

    def __call__(self, point):
        return self.eval(point)


# functional aliases, mirroring the operator methods ------------------------

def add(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    return p + q


def sub(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    return p - q


def mul(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    return p * q


def pow(p: MultiPoly, k: int) -> MultiPoly:  # noqa: A001
    return p**k


def scale(p: MultiPoly, c) -> MultiPoly:
    return p.scale(c)


def partial(p: MultiPoly, i: int) -> MultiPoly:
    return p.partial(i)


def higher_partial(p: MultiPoly, alpha: Sequence[int]) -> MultiPoly:
    return p.higher_partial(alpha)


def eval(p: MultiPoly, point: Sequence[float]) -> float:  # noqa: A001
    return p.eval(point)


def eval_exact(p: MultiPoly, point: Sequence) -> Fraction:
    return p.eval_exact(point)


def divide(p: MultiPoly, q: MultiPoly) -> tuple[MultiPoly, MultiPoly]:
    """Multivariate division of ``p`` by a single divisor ``q`` under grlex.

    Returns ``(quotient, remainder)`` with ``p == q*quotient + remainder`` and no
    term of the remainder divisible by the leading monomial of ``q``.
    """
    if q.n != p.n:
        raise DimensionError(f"dimension mismatch: {p.n} vs {q.n}")
    if q.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    lead_mon, lead_c = q.leading_term()
    q_terms = list(q.items())
    work = dict(p.items())
    quot: dict[Monomial, Fraction] = {}
    rem: dict[Monomial, Fraction] = {}
    while work:
        mon = max(work, key=grlex_key)
        c = work.pop(mon)
        if all(a >= b for a, b in zip(mon, lead_mon)):
            qm = tuple(a - b for a, b in zip(mon, lead_mon))
            qc = c / lead_c
            quot[qm] = quot.get(qm, 0) + qc
            for tm, tc in q_terms:
                if tm == lead_mon:
                    continue
                m2 = tuple(a + b for a, b in zip(qm, tm))
                v = work.get(m2, 0) - qc * tc
                if v:
                    work[m2] = v
                else:
                    work.pop(m2, None)
        else:
            rem[mon] = c
    return MultiPoly(p.n, quot), MultiPoly(p.n, rem)


def divide_exact(p: MultiPoly, q: MultiPoly) -> tuple[MultiPoly, bool]:
    """Return ``(quotient, divisible)``; ``divisible`` iff ``p == q*quotient``."""
    quot, rem = divide(p, q)
    return quot, rem.is_zero()


# numeric batch evaluation ----------------------------------------------------

class CompiledPolys:
    """Vectorised float evaluation of several polynomials sharing one variable set.

    ``values(points)`` returns an array of shape ``(N, P)`` for ``points`` of
    shape ``(N, n)``.
    """

    def __init__(self, polys: Sequence[MultiPoly], n: int | None = None):
        if n is None:
            if not polys:
                raise ValueError("need at least one polynomial or explicit n")
            n = polys[0].n
        for p in polys:
            if p.n != n:
                raise DimensionError("all polynomials must share a dimension")
        self.n = n
        monos = sorted({m for p in polys for m in p._terms}, key=grlex_key)
        if not monos:
            monos = [(0,) * n]
        self.exponents = np.array(monos, dtype=np.int64).reshape(len(monos), n)
        index = {m: k for k, m in enumerate(monos)}
        coef = np.zeros((len(polys), len(monos)))
        for j, p in enumerate(polys):
            for m, c in p._terms.items():
                coef[j, index[m]] = float(c)
        self.coef = coef
        self._max_exp = self.exponents.max(axis=0) if n else np.zeros(0, dtype=np.int64)
        # sparse rows for the scalar path
        self._rows = [
            [(k, float(c)) for k, c in enumerate(row) if c != 0.0] for row in coef
        ]
        self._monos = [tuple(int(e) for e in m) for m in self.exponents]

    def point_values(self, x: Sequence[float]) -> list[float]:
        """Pure-Python evaluation at one point; cheaper than ``values`` for a single row."""
        if len(x) != self.n:
            raise DimensionError(f"point has {len(x)} components, expected {self.n}")
        tables = []
        for j in range(self.n):
            t = [1.0]
            for _ in range(int(self._max_exp[j])):
                t.append(t[-1] * x[j])
            tables.append(t)
        mono = []
        for m in self._monos:
            v = 1.0
            for j, e in enumerate(m):
                if e:
                    v *= tables[j][e]
            mono.append(v)
        return [sum(c * mono[k] for k, c in row) for row in self._rows]

    def values(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if x.shape[1] != self.n:
            raise DimensionError(f"points have {x.shape[1]} columns, expected {self.n}")
        mono = np.ones((x.shape[0], self.exponents.shape[0]))
        for j in range(self.n):
            if self._max_exp[j] == 0:
                continue
            # table of powers x_j^0 .. x_j^maxexp, gathered per monomial
            powers = np.cumprod(
                np.concatenate(
                    [np.ones((x.shape[0], 1)), np.repeat(x[:, j:j + 1], self._max_exp[j], axis=1)],
                    axis=1,
                ),
                axis=1,
            )
            mono *= powers[:, self.exponents[:, j]]
        return mono @ self.coef.T


# parsing --------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            # find the offending character past any whitespace
            bad = pos
            while bad < len(text) and text[bad].isspace():
                bad += 1
            raise PolySyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _split_name(name: str, var_index: Mapping[str, int], pos: int, text: str) -> list[int]:
    """Resolve an identifier, splitting juxtaposed variable names like ``xy``."""
    if name in var_index:
        return [var_index[name]]
    by_len = sorted(var_index, key=len, reverse=True)
    out: list[int] = []
    i = 0
    while i < len(name):
        for v in by_len:
            if name.startswith(v, i):
                out.append(var_index[v])
                i += len(v)
                break
        else:
            raise UnknownVariableError(f"unknown variable {name!r}", pos, text)
    return out


class _Parser:
    def __init__(self, text: str, vars: Sequence[str]):
        self.text = text
        self.n = len(vars)
        self.var_index = {v: i for i, v in enumerate(vars)}
        self.tokens = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def take(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        raise PolySyntaxError(message, tok[2], self.text)

    def expect_int(self, what: str) -> int:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-" and what == "exponent":
            raise PolySyntaxError("negative exponent", tok[2], self.text)
        if tok[0] != "int":
            self.fail(f"expected {what}")
        self.take()
        return int(tok[1])

    def parse(self) -> MultiPoly:
        if self.peek()[0] == "end":
            self.fail("empty polynomial")
        total = self.term()
        while True:
            tok = self.peek()
            if tok[0] == "end":
                break
            if tok[0] == "op" and tok[1] in "+-":
                self.take()
                t = self.term()
                total = total + t if tok[1] == "+" else total - t
            else:
                self.fail(f"unexpected token {tok[1]!r}")
        return total

    def term(self) -> MultiPoly:
        sign = 1
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            sign = -1 if tok[1] == "-" else 1
        coeff = Fraction(1)
        has_coeff = False
        tok = self.peek()
        if tok[0] == "int":
            self.take()
            coeff = Fraction(int(tok[1]))
            has_coeff = True
            if self.peek()[:2] == ("op", "/"):
                self.take()
                dtok = self.peek()
                den = self.expect_int("positive integer denominator")
                if den == 0:
                    self.fail("denominator must be positive", dtok)
                coeff /= den
        mon = [0] * self.n
        nfactors = 0
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "*":
                if not (has_coeff or nfactors):
                    self.fail("unexpected '*'")
                self.take()
                if self.peek()[0] != "name":
                    self.fail("expected variable after '*'")
                continue
            if tok[0] != "name":
                break
            self.take()
            idx = _split_name(tok[1], self.var_index, tok[2], self.text)
            exp = 1
            if self.peek()[0] == "op" and self.peek()[1] == "^":
                self.take()
                exp = self.expect_int("exponent")
            for j in idx[:-1]:
                mon[j] += 1
            mon[idx[-1]] += exp
            nfactors += 1
        if not (has_coeff or nfactors):
            self.fail("expected coefficient or variable")
        return MultiPoly(self.n, {tuple(mon): sign * coeff})


def parse_poly(text: str, vars: Sequence[str]) -> MultiPoly:
    """Parse ``text`` into a polynomial over the ordered variables ``vars``.

    >>> parse_poly("1*x^2 + 1*y^2", ["x", "y"]).to_string(["x", "y"])
    'x^2 + y^2'
    """
    vars = list(vars)
    if len(vars) > MAX_VARS:
        raise DimensionError(f"at most {MAX_VARS} variables are supported, got {len(vars)}")
    if len(set(vars)) != len(vars):
        raise ValueError("duplicate variable names")
    for v in vars:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", v):
            raise ValueError(f"invalid variable name {v!r}")
    p = _Parser(text, vars).parse()
    if p.degree() > MAX_DEGREE:
        raise PolySyntaxError(f"degree {p.degree()} exceeds cap {MAX_DEGREE}", 0, text)
    return p


def polys_from_strings(texts: Iterable[str], vars: Sequence[str]) -> list[MultiPoly]:
    return [parse_poly(t, vars) for t in texts]
