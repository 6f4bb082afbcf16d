"""Numerical checks of the estimates behind the construction.

Everything here samples a neighbourhood of the origin on a :class:`SampleGrid`
and reduces with min/max or least squares.  Nothing is certified in the
interval-arithmetic sense; results are empirical constants and fitted slopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Sequence, Union

import numpy as np
from scipy.ndimage import minimum_filter

from .germ import multi_indices
from .grid import CUBE, SHELLS, SampleGrid
from .homotopy import HomotopyField, dist_to_Z_proxy, slab_samples
from .poly import CompiledPolys, MultiPoly

SLOPE_SLACK = 0.25
REFINE_GROWTH = 2.0
COMPARABILITY_DRIFT = 0.25


class InsufficientCoverage(ValueError):
    pass


class LemmaHypothesisError(ValueError):
    pass


# zero sets -------------------------------------------------------------------

def zero_sample(
    p_system: Sequence[MultiPoly],
    grid: SampleGrid,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """Approximate common real zeros of ``p_system`` near the origin.

    Candidates are the grid-local minima of ``sum p_i**2`` on a cube grid of the
    same radius and resolution; each is polished by damped Gauss-Newton
    (pseudo-inverse steps).  Points with residual norm above ``tol`` or farther
    than ``1.5 * radius`` (sup norm) are dropped.  Returns an ``(m, n)`` array,
    possibly empty.
    """
    p_system = list(p_system)
    if not p_system:
        raise ValueError("empty polynomial system")
    n = p_system[0].n
    k = grid.points_per_axis
    cube = SampleGrid(grid.radius, k, CUBE)
    pts = cube.points(n)
    vals_c = CompiledPolys(p_system, n=n)
    jac_c = CompiledPolys([p.partial(j) for p in p_system for j in range(n)], n=n)

    S = np.sum(vals_c.values(pts) ** 2, axis=1)
    S_grid = S.reshape((k,) * n)
    is_min = minimum_filter(S_grid, size=3, mode="nearest") == S_grid
    cand = pts[is_min.ravel()]
    if cand.size == 0:
        return np.zeros((0, n))

    z = cand.copy()
    m = len(p_system)
    active = np.ones(len(z), dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        za = z[active]
        r = vals_c.values(za)
        res = np.sum(r**2, axis=1)
        J = jac_c.values(za).reshape(-1, m, n)
        step = np.einsum("kij,kj->ki", np.linalg.pinv(J), r)
        lam = np.ones(len(za))
        trial = za - step
        res_t = np.sum(vals_c.values(trial) ** 2, axis=1)
        for _ in range(20):
            worse = res_t > res
            if not worse.any():
                break
            lam[worse] *= 0.5
            trial[worse] = za[worse] - lam[worse, None] * step[worse]
            res_t[worse] = np.sum(vals_c.values(trial[worse]) ** 2, axis=1)
        moved = np.linalg.norm(trial - za, axis=1)
        z[active] = trial
        idx = np.flatnonzero(active)
        done = (moved <= 1e-16 * (1 + np.linalg.norm(za, axis=1))) | (res_t == 0.0)
        active[idx[done]] = False

    resid = np.linalg.norm(vals_c.values(z), axis=1)
    keep = (resid <= tol) & (np.max(np.abs(z), axis=1) <= 1.5 * grid.radius)
    z = z[keep]
    if z.size == 0:
        return np.zeros((0, n))
    return np.unique(np.round(z, 14) + 0.0, axis=0)


def critical_samples(f: MultiPoly, radius: float, points_per_axis: int | None = None) -> np.ndarray:
    """Sample of the critical set of ``f`` on a cube of ``radius``."""
    if points_per_axis is None:
        points_per_axis = {1: 201, 2: 101, 3: 31}.get(f.n, 11)
    return zero_sample(f.gradient(), SampleGrid(radius, points_per_axis, CUBE))


# Lojasiewicz gradient inequality --------------------------------------------

@dataclass
class LojaReport:
    C_hat: float
    eta_hat: float
    sample_count: int
    radius: float

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.C_hat) and self.C_hat > 0 and 0 <= self.eta_hat < 1)

    def to_dict(self) -> dict:
        return {
            "C_hat": self.C_hat,
            "eta_hat": self.eta_hat,
            "sample_count": self.sample_count,
            "radius": self.radius,
            "ok": self.ok,
        }


def loja_gradient_scan(f: MultiPoly, grid: SampleGrid) -> LojaReport:
    """Fit ``|grad f| >= C |f|`` (constant) and the exponent in ``|grad f| ~ |f|**eta``."""
    if f.constant_term() != 0:
        raise ValueError("f must vanish at the origin")
    pts = grid.points(f.n)
    v = CompiledPolys([f, *f.gradient()], n=f.n).values(pts)
    fv = np.abs(v[:, 0])
    gv = np.linalg.norm(v[:, 1:], axis=1)
    mask = (fv > grid.exclusion) & (gv > 0)
    if not mask.any():
        raise ValueError("no admissible samples (|f| above exclusion floor)")
    fv, gv = fv[mask], gv[mask]
    c_hat = float(np.min(gv / fv))
    if np.ptp(np.log(fv)) > 0:
        eta_hat = float(np.polyfit(np.log(fv), np.log(gv), 1)[0])
    else:
        eta_hat = float("nan")
    return LojaReport(c_hat, eta_hat, int(mask.sum()), float(grid.radius))


# distance to the zero set of f --------------------------------------------------

def _lemma2_once(f: MultiPoly, grid: SampleGrid) -> float:
    V = zero_sample([f], SampleGrid(grid.radius, max(grid.points_per_axis, 21), CUBE))
    pts = grid.points(f.n)
    fv = np.abs(CompiledPolys([f]).values(pts)[:, 0])
    dist = dist_to_Z_proxy(None, pts, V)
    mask = dist > 0
    if not mask.any():
        return 0.0
    return float(np.max(fv[mask] / dist[mask]))


def lemma2_scan(f: MultiPoly, grid: SampleGrid) -> tuple[float, bool]:
    """Fit ``|f(x)| <= C dist(x, V_f)``; pass when the constant survives refinement."""
    if f.constant_term() != 0:
        raise ValueError("f must vanish at the origin")
    c = _lemma2_once(f, grid)
    c_fine = _lemma2_once(f, grid.refined())
    ok = bool(np.isfinite(c) and np.isfinite(c_fine) and c_fine < REFINE_GROWTH * max(c, 1e-300))
    return c, ok


# derivatives of 1/xi --------------------------------------------------------------

def inv_power_expand(xi_fn: MultiPoly, k: Sequence[int]) -> tuple[MultiPoly, int]:
    """Write ``d^k (1/xi)`` as ``numerator / xi**(|k|+1)``.

    One derivative at a time: if ``d^j(1/xi) = N / xi**p`` then
    ``d_i`` of it is ``(xi * d_i N - p * N * d_i xi) / xi**(p+1)``.
    """
    if xi_fn.is_zero():
        raise ValueError("xi must be a nonzero polynomial")
    if len(k) != xi_fn.n:
        raise ValueError("multi-index length does not match dimension")
    if sum(k) < 1:
        raise ValueError("need |k| >= 1")
    num = MultiPoly.const(xi_fn.n, 1)
    power = 1
    grad = xi_fn.gradient()
    for i, times in enumerate(k):
        for _ in range(times):
            num = xi_fn * num.partial(i) - num * grad[i] * power
            power += 1
    return num, power


def quotient_rule_derivative(num: MultiPoly, den: MultiPoly, k: Sequence[int]) -> tuple[MultiPoly, MultiPoly]:
    """``d^k (num/den)`` by the plain quotient rule, without normalisation."""
    for i, times in enumerate(k):
        for _ in range(times):
            num, den = num.partial(i) * den - num * den.partial(i), den * den
    return num, den


Evaluator = Union[MultiPoly, Callable[[np.ndarray], np.ndarray]]


def _evaluate(e: Evaluator, pts: np.ndarray) -> np.ndarray:
    if isinstance(e, MultiPoly):
        return CompiledPolys([e]).values(pts)[:, 0]
    return np.asarray(e(pts), dtype=float).reshape(-1)


@dataclass
class LemTechReport:
    k: tuple
    B_hat: float
    B_hat_refined: float
    A1: float
    A2: float
    A3: float
    sample_count: int
    ok: bool

    def to_dict(self) -> dict:
        return {
            "k": list(self.k),
            "B_hat": self.B_hat,
            "B_hat_refined": self.B_hat_refined,
            "A1": self.A1,
            "A2": self.A2,
            "A3": self.A3,
            "sample_count": self.sample_count,
            "ok": self.ok,
        }


def _lemtech_once(xi_fn, eta_fn, k, grid):
    pts = grid.points(xi_fn.n)
    num, power = inv_power_expand(xi_fn, k)
    v = CompiledPolys([xi_fn, num, *xi_fn.gradient()], n=xi_fn.n).values(pts)
    xv, nv, gxi = v[:, 0], v[:, 1], v[:, 2:]
    ev = np.abs(_evaluate(eta_fn, pts))
    mask = ev > grid.exclusion
    if not mask.any():
        raise ValueError("no admissible samples")
    xv, nv, gxi, ev = xv[mask], nv[mask], gxi[mask], ev[mask]
    ratio = np.abs(xv) / ev**2
    a1, a2 = float(ratio.min()), float(ratio.max())
    a3 = float(np.max(np.linalg.norm(gxi, axis=1) / ev))
    if not a1 > 0:
        raise LemmaHypothesisError(f"A1 fit is {a1}: |xi| is not bounded below by |eta|^2")
    m = sum(k)
    b_hat = float(np.max(np.abs(nv / xv**power) * ev ** (m + 2)))
    return b_hat, a1, a2, a3, int(mask.sum())


def lemtech_bound_scan(xi_fn: MultiPoly, eta_fn: Evaluator, k: Sequence[int], grid: SampleGrid) -> LemTechReport:
    """Fit ``B`` in ``|d^k(1/xi)| <= B |eta|**(-|k|-2)`` plus the hypothesis constants.

    ``eta_fn`` may be a polynomial or any vectorised callable on ``(N, n)`` arrays,
    e.g. a gradient norm.
    """
    k = tuple(int(v) for v in k)
    if sum(k) < 1:
        raise ValueError("need |k| >= 1")
    b, a1, a2, a3, count = _lemtech_once(xi_fn, eta_fn, k, grid)
    b_fine = _lemtech_once(xi_fn, eta_fn, k, grid.refined())[0]
    ok = bool(np.isfinite(b) and np.isfinite(b_fine) and b_fine < REFINE_GROWTH * b)
    return LemTechReport(k, b, b_fine, a1, a2, a3, count, ok)


# decay of X and its derivatives near Z -------------------------------------------

_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
}


def fd_derivative_X(field: HomotopyField, alpha: Sequence[int], xi, x, h) -> np.ndarray:
    """Central finite-difference estimate of ``d^alpha X`` at a batch of points.

    ``alpha`` indexes ``(xi, x_1, ..., x_n)``; ``h`` is a per-point step.
    Returns shape ``(N, n+1)``.
    """
    alpha = tuple(alpha)
    if any(a > 3 for a in alpha):
        raise ValueError("finite-difference stencils are provided up to order 3 per axis")
    xi = np.asarray(xi, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = np.asarray(h, dtype=float)
    base = np.column_stack([xi, x])
    out = np.zeros((x.shape[0], field.n + 1))
    stencils = [list(_STENCILS[a].items()) for a in alpha]
    for combo in product(*stencils):
        w = np.prod([c[1] for c in combo])
        shift = np.array([c[0] for c in combo], dtype=float)
        pts = base + h[:, None] * shift[None, :]
        X, _ = field.X_many(pts[:, 0], pts[:, 1:])
        out += w * X
    return out / h[:, None] ** sum(alpha)


@dataclass
class ScalingReport:
    alpha: tuple
    fitted_slope: float
    required: float
    pass_: bool
    points: list = field(default_factory=list)  # (dist, magnitude) per sample
    shells: list = field(default_factory=list)  # (dist, max magnitude) per shell

    def to_dict(self, include_points: bool = False) -> dict:
        out = {
            "alpha": list(self.alpha),
            "fitted_slope": self.fitted_slope,
            "required": self.required,
            "pass": self.pass_,
            "shells": [list(s) for s in self.shells],
        }
        if include_points:
            out["points"] = [list(p) for p in self.points]
        return out


def step_scaling_check(
    field: HomotopyField,
    alpha: Sequence[int],
    grid: SampleGrid,
    z_samples=None,
    xis: Sequence[float] = (-1.0, -0.5, 0.0, 0.5, 1.0),
    n_shells: int = 8,
    slack: float = SLOPE_SLACK,
) -> ScalingReport:
    """Fit the decay exponent of ``max_i |d^alpha X_i|`` against ``dist(x, Z)``.

    Magnitudes are maximised over ``xis`` and then over dist-shells spanning the
    decade below the largest sampled distance; the slope is an ordinary least
    squares fit of log shell-maxima on log shell-centres.
    """
    alpha = tuple(int(a) for a in alpha)
    r = field.case.r
    if len(alpha) != field.n + 1:
        raise ValueError(f"alpha must have length n+1 = {field.n + 1}")
    if sum(alpha) > r:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds r = {r}")
    required = float(r + 1 - sum(alpha))
    if z_samples is None:
        z_samples = critical_samples(field.case.f, grid.radius)

    x = grid.points(field.n)
    dist = dist_to_Z_proxy(field, x, z_samples)
    keep = dist > 0
    x, dist = x[keep], dist[keep]
    h = np.maximum(1e-6, 1e-3 * dist)
    mags = np.zeros(len(x))
    for xi in xis:
        d = fd_derivative_X(field, alpha, np.full(len(x), xi), x, h)
        mags = np.maximum(mags, np.max(np.abs(d), axis=1))
    points = list(zip(dist.tolist(), mags.tolist()))

    dmax = float(dist.max())
    edges = np.geomspace(dmax / 10, dmax * (1 + 1e-12), n_shells + 1)
    shells = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (dist >= lo) & (dist < hi)
        if sel.any():
            shells.append((float(np.sqrt(lo * hi)), float(mags[sel].max())))
    nonzero = [(d, m) for d, m in shells if m > 0]
    if not nonzero:
        # d^alpha X vanishes identically on the samples
        return ScalingReport(alpha, float("inf"), required, True, points, shells)
    if len(nonzero) < 3:
        raise InsufficientCoverage(f"only {len(nonzero)} populated shells")
    ld = np.log([d for d, _ in nonzero])
    lm = np.log([m for _, m in nonzero])
    slope = float(np.polyfit(ld, lm, 1)[0])
    return ScalingReport(alpha, slope, required, bool(slope >= required - slack), points, shells)


def scaling_suite(field: HomotopyField, grid: SampleGrid, max_order: int | None = None, z_samples=None):
    """Run :func:`step_scaling_check` for every ``|alpha| <= max_order`` (default r)."""
    order = field.case.r if max_order is None else min(max_order, field.case.r)
    if z_samples is None:
        z_samples = critical_samples(field.case.f, grid.radius)
    return [
        step_scaling_check(field, a, grid, z_samples)
        for a in multi_indices(field.n + 1, order)
    ]


# gradient comparability ------------------------------------------------------------

def _comparability_once(field: HomotopyField, grid: SampleGrid):
    XI, XS = slab_samples(field, grid.radius, grid)
    _, _, gf, gradF = field.parts(XI, XS)
    nF2 = np.einsum("ij,ij->i", gradF, gradF)
    use = nF2 > field.eps_sing
    if not use.any():
        return 1.0, 1.0
    ratio = np.linalg.norm(gf[use], axis=1) / np.sqrt(nF2[use])
    return float(ratio.max()), float(ratio.min())


def grad_comparability_scan(field: HomotopyField, grid: SampleGrid) -> tuple[float, float, bool]:
    """Fit ``C3 |grad F| <= |grad f| <= C1 |grad F|`` over ``|xi| <= 1``.

    Returns ``(C1_hat, C3_hat, pass)`` with ``C1_hat = max |grad f|/|grad F|`` and
    ``C3_hat = min |grad f|/|grad F|``.  Passing needs both finite and positive and
    each within 25% of its value on the refined grid.  Shell grids are refined
    radially as well as halving the innermost radius.
    """
    fine = grid.refined()
    if grid.pattern == SHELLS:
        # the ratios degenerate only near the origin, so refinement also reaches inward
        fine = replace(fine, inner_ratio=grid.inner_ratio / 2)
    c1, c3 = _comparability_once(field, grid)
    c1f, c3f = _comparability_once(field, fine)
    ok = (
        np.isfinite(c1)
        and np.isfinite(c1f)
        and c3 > 0
        and c3f > 0
        and abs(c1f - c1) <= COMPARABILITY_DRIFT * c1
        and abs(c3f - c3) <= COMPARABILITY_DRIFT * c3
    )
    return c1, c3, bool(ok)
