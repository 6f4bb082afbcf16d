"""Problem instances (f, g, r) and the hypothesis gate for right equivalence."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .grid import SampleGrid
from .poly import CompiledPolys, DimensionError, MultiPoly, divide_exact

EPS_FLOOR = 1e-30


class CaseError(ValueError):
    pass


def build_g(f: MultiPoly, h: MultiPoly, r: int) -> MultiPoly:
    """Return ``g = f + h * f**(r + 2)``."""
    if f.n != h.n:
        raise DimensionError(f"dimension mismatch between f ({f.n}) and h ({h.n})")
    if r < 1:
        raise CaseError("r must be a positive integer")
    if f.constant_term() != 0:
        raise CaseError("f must vanish at the origin")
    return f + h * f ** (r + 2)


@dataclass(frozen=True)
class GermCase:
    f: MultiPoly
    g: MultiPoly
    r: int
    h: Optional[MultiPoly] = None
    vars: tuple = ()
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.r, int) or self.r < 1:
            raise CaseError("r must be a positive integer")
        if self.f.n != self.g.n:
            raise DimensionError("f and g live in different dimensions")
        if self.vars and len(self.vars) != self.f.n:
            raise DimensionError("variable list does not match polynomial dimension")
        if self.h is not None:
            if self.h.n != self.f.n:
                raise DimensionError("h lives in a different dimension")
            if self.g != self.f + self.h * self.f ** (self.r + 2):
                raise CaseError("g != f + h*f^(r+2)")

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def names(self) -> list[str]:
        if self.vars:
            return list(self.vars)
        return ["x"] if self.n == 1 else [f"x{i + 1}" for i in range(self.n)]

    @classmethod
    def from_witness(cls, f: MultiPoly, h: MultiPoly, r: int, **kw) -> "GermCase":
        return cls(f=f, g=build_g(f, h, r), r=r, h=h, **kw)


@dataclass
class HypothesisReport:
    f_vanishes: bool
    g_vanishes: bool
    grad_f_vanishes: bool
    membership: bool
    quotient: Optional[MultiPoly] = None
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.f_vanishes and self.g_vanishes and self.grad_f_vanishes and self.membership

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        return {
            "ok": self.ok,
            "f_vanishes": self.f_vanishes,
            "g_vanishes": self.g_vanishes,
            "grad_f_vanishes": self.grad_f_vanishes,
            "membership": self.membership,
            "quotient": None if self.quotient is None else self.quotient.to_string(names),
            "messages": list(self.messages),
        }


def check_hypotheses(case: GermCase) -> HypothesisReport:
    """Evaluate f(0)=0, g(0)=0, grad f(0)=0 and g-f in (f)^(r+2), all exactly.

    Failures are reported, never raised.
    """
    origin = (0,) * case.n
    msgs = []
    f0 = case.f.eval_exact(origin)
    g0 = case.g.eval_exact(origin)
    grad0 = [p.eval_exact(origin) for p in case.f.gradient()]
    f_ok, g_ok = f0 == 0, g0 == 0
    grad_ok = all(v == 0 for v in grad0)
    if not f_ok:
        msgs.append(f"f(0) = {f0} != 0")
    if not g_ok:
        msgs.append(f"g(0) = {g0} != 0")
    if not grad_ok:
        msgs.append("grad f(0) = (" + ", ".join(str(v) for v in grad0) + ") != 0")

    diff = case.g - case.f
    power = case.f ** (case.r + 2)
    quotient = None
    if power.is_zero():
        member = diff.is_zero()
        if member:
            quotient = MultiPoly.zero(case.n)
    else:
        q, member = divide_exact(diff, power)
        if member:
            quotient = q
    if not member:
        msgs.append(f"g - f is not divisible by f^{case.r + 2}")
    return HypothesisReport(f_ok, g_ok, grad_ok, member, quotient, msgs)


def multi_indices(n: int, max_order: int, min_order: int = 0):
    """All multi-indices in N_0^n with ``min_order <= |alpha| <= max_order``."""
    for alpha in product(range(max_order + 1), repeat=n):
        if min_order <= sum(alpha) <= max_order:
            yield alpha


@dataclass
class Lemma1Report:
    M: int
    r: int
    symbolic: dict  # alpha (as string) -> divisible
    symbolic_ok: bool
    C_hat: float
    sample_count: int
    numeric_ok: bool

    @property
    def ok(self) -> bool:
        return self.symbolic_ok and self.numeric_ok

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "r": self.r,
            "symbolic": dict(self.symbolic),
            "symbolic_ok": self.symbolic_ok,
            "C_hat": self.C_hat,
            "sample_count": self.sample_count,
            "numeric_ok": self.numeric_ok,
            "ok": self.ok,
        }


def lemma1_check(p: MultiPoly, f: MultiPoly, M: int, r: int, grid: SampleGrid) -> Lemma1Report:
    """Check both parts of the derivative/ideal-power lemma for ``Q = (f)``.

    (i) every partial of order ``|alpha| <= r`` of ``p`` is divisible by
    ``f**(M - |alpha|)``; (ii) ``|p| / |f|**M`` stays bounded on ``grid``.
    """
    if M <= r:
        raise CaseError("need M > r")
    if f.is_zero():
        raise CaseError("f must be a nonzero polynomial")
    _, divisible = divide_exact(p, f**M)
    if not divisible:
        raise CaseError("precondition failed: p is not in (f)^M")

    symbolic = {}
    for alpha in multi_indices(p.n, r):
        dp = p.higher_partial(alpha)
        _, ok = divide_exact(dp, f ** (M - sum(alpha)))
        symbolic[str(alpha)] = ok

    pts = grid.points(p.n)
    vals = CompiledPolys([p, f]).values(pts)
    pv, fv = np.abs(vals[:, 0]), np.abs(vals[:, 1])
    mask = fv > max(grid.exclusion, EPS_FLOOR)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratios = pv[mask] / fv[mask] ** M
    ratios = ratios[np.isfinite(ratios)]
    c_hat = float(ratios.max()) if ratios.size else 0.0
    numeric_ok = bool(ratios.size) and np.isfinite(c_hat)
    return Lemma1Report(M, r, symbolic, all(symbolic.values()), c_hat, int(ratios.size), bool(numeric_ok))
