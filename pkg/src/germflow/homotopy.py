"""The linear homotopy F(xi, x) = f(x) + xi*(g - f)(x) and its transport fields.

``X = d * grad F / |grad F|^2`` (with ``d = g - f``) lives on R x R^n and is set
to its continuous extension 0 where ``|grad F|^2 <= eps_sing``.  ``W`` is the
x-part of ``X`` divided by ``X_xi - 1``; it is only defined while
``|X_xi - 1| > 1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .germ import GermCase
from .grid import SampleGrid
from .poly import CompiledPolys, DimensionError, MultiPoly

EPS_SING = 1e-24
DELTA = 3.0
GAP = 0.5


class GapViolation(ArithmeticError):
    """|X_xi - 1| <= 1/2: W is undefined here."""

    def __init__(self, xi: float, x, gap: float):
        self.xi = xi
        self.x = np.asarray(x, dtype=float)
        self.gap = gap
        super().__init__(f"|X_xi - 1| = {gap:.3g} <= {GAP} at xi={xi:.6g}")


@dataclass
class FieldSample:
    xi: float
    x: np.ndarray
    F: float
    gradF: np.ndarray
    X: np.ndarray
    W: Optional[np.ndarray]
    on_cutoff: bool


class HomotopyField:
    """Precomputed polynomial data for F and grad F, with numeric evaluators."""

    def __init__(self, case: GermCase, eps_sing: float = EPS_SING, delta: float = DELTA):
        self.case = case
        self.n = case.n
        self.eps_sing = eps_sing
        self.delta = delta
        self.d: MultiPoly = case.g - case.f
        self.grad_f = case.f.gradient()
        self.grad_d = self.d.gradient()
        # column layout: f, d, df/dx_1.., dd/dx_1..
        self._compiled = CompiledPolys([case.f, self.d, *self.grad_f, *self.grad_d], n=self.n)

    # batch evaluators ------------------------------------------------------

    def _raw(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n:
            raise DimensionError(f"x has {x.shape[1]} components, expected {self.n}")
        return self._compiled.values(x)

    def parts(self, xi, x):
        """Return f, d, grad f, grad F (length n+1) for batches of points."""
        v = self._raw(x)
        n = self.n
        xi = np.broadcast_to(np.asarray(xi, dtype=float), (v.shape[0],))
        f, d = v[:, 0], v[:, 1]
        gf = v[:, 2:2 + n]
        gd = v[:, 2 + n:2 + 2 * n]
        gradF = np.empty((v.shape[0], n + 1))
        gradF[:, 0] = d
        gradF[:, 1:] = gf + xi[:, None] * gd
        return f, d, gf, gradF

    def F_many(self, xi, x) -> np.ndarray:
        f, d, _, _ = self.parts(xi, x)
        return f + np.asarray(xi, dtype=float) * d

    def gradF_many(self, xi, x) -> np.ndarray:
        return self.parts(xi, x)[3]

    def X_many(self, xi, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, on_cutoff)`` for a batch of ``(xi, x)`` pairs."""
        _, d, _, gradF = self.parts(xi, x)
        norm2 = np.einsum("ij,ij->i", gradF, gradF)
        cut = norm2 <= self.eps_sing
        X = np.zeros_like(gradF)
        ok = ~cut
        X[ok] = (d[ok] / norm2[ok])[:, None] * gradF[ok]
        return X, cut

    def W_many(self, xi, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(W, gap)`` where ``gap = |X_xi - 1|``; W is NaN where gap <= 1/2."""
        X, _ = self.X_many(xi, x)
        gap = np.abs(X[:, 0] - 1.0)
        W = X[:, 1:] / (X[:, 0] - 1.0)[:, None]
        W[gap <= GAP] = np.nan
        return W, gap

    # single-point evaluators ----------------------------------------------

    def _point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.n:
            raise DimensionError(f"x has {x.shape[0]} components, expected {self.n}")
        return x[None, :]

    def _point_parts(self, xi: float, x):
        pt = self._point(x)[0]
        v = self._compiled.point_values(pt.tolist())
        n = self.n
        xi = float(xi)
        gradF = [v[1]] + [v[2 + i] + xi * v[2 + n + i] for i in range(n)]
        return v[0], v[1], gradF

    def F_eval(self, xi: float, x) -> float:
        f, d, _ = self._point_parts(xi, x)
        return f + float(xi) * d

    def gradF_eval(self, xi: float, x) -> np.ndarray:
        return np.array(self._point_parts(xi, x)[2])

    def X_eval(self, xi: float, x) -> np.ndarray:
        _, d, gradF = self._point_parts(xi, x)
        norm2 = sum(g * g for g in gradF)
        if norm2 <= self.eps_sing:
            return np.zeros(self.n + 1)
        return np.array(gradF) * (d / norm2)

    def W_eval(self, xi: float, x) -> np.ndarray:
        X = self.X_eval(xi, x)
        gap = abs(X[0] - 1.0)
        if not gap > GAP:
            raise GapViolation(xi, x, gap)
        return X[1:] / (X[0] - 1.0)

    def sample(self, xi: float, x) -> FieldSample:
        pt = self._point(x)
        f, d, _, gradF = self.parts(xi, pt)
        X, cut = self.X_many(xi, pt)
        try:
            W = self.W_eval(xi, x)
        except GapViolation:
            W = None
        return FieldSample(
            xi=float(xi),
            x=pt[0].copy(),
            F=float(f[0] + xi * d[0]),
            gradF=gradF[0],
            X=X[0],
            W=W,
            on_cutoff=bool(cut[0]),
        )


# module-level aliases --------------------------------------------------------

def F_eval(field: HomotopyField, xi: float, x) -> float:
    return field.F_eval(xi, x)


def gradF_eval(field: HomotopyField, xi: float, x) -> np.ndarray:
    return field.gradF_eval(xi, x)


def X_eval(field: HomotopyField, xi: float, x) -> np.ndarray:
    return field.X_eval(xi, x)


def W_eval(field: HomotopyField, xi: float, x) -> np.ndarray:
    return field.W_eval(xi, x)


def dist_to_Z_proxy(field: HomotopyField | None, x, z_samples) -> float | np.ndarray:
    """Euclidean distance from ``x`` (one point or a batch) to the nearest sample.

    An empty sample set means an empty zero set, whose distance is 1 by convention.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    z = np.asarray(z_samples, dtype=float)
    if z.size == 0:
        out = np.ones(xb.shape[0])
    else:
        z = z.reshape(-1, xb.shape[1])
        out = np.empty(xb.shape[0])
        # chunked to bound memory on large grids
        step = max(1, 2_000_000 // max(1, z.shape[0]))
        for s in range(0, xb.shape[0], step):
            diff = xb[s:s + step, None, :] - z[None, :, :]
            out[s:s + step] = np.sqrt(np.min(np.einsum("ijk,ijk->ij", diff, diff), axis=1))
    return float(out[0]) if single else out


@dataclass
class DomainCertificate:
    radius: float
    grid_spec: SampleGrid
    min_gap: float
    C1_hat: float
    C3_hat: float
    A_hat: float
    ok: bool
    sample_count: int = 0
    cutoff_count: int = 0
    worst_xi: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "grid": self.grid_spec.to_dict(),
            "min_gap": self.min_gap,
            "C1_hat": self.C1_hat,
            "C3_hat": self.C3_hat,
            "A_hat": self.A_hat,
            "ok": self.ok,
            "sample_count": self.sample_count,
            "cutoff_count": self.cutoff_count,
            "worst_xi": self.worst_xi,
        }


def slab_samples(field: HomotopyField, radius: float, grid: SampleGrid, xi_max: float = 1.0):
    """Tensor samples of ``|xi| <= xi_max`` times the x-grid of ``grid`` at ``radius``."""
    g = SampleGrid(radius, grid.points_per_axis, grid.pattern, grid.exclusion, grid.inner_ratio)
    xs = g.points(field.n)
    xis = np.linspace(-xi_max, xi_max, grid.points_per_axis)
    XI = np.repeat(xis, xs.shape[0])
    XS = np.tile(xs, (xis.size, 1))
    return XI, XS


def certify_domain(field: HomotopyField, radius: float, grid: SampleGrid, z_samples=None) -> DomainCertificate:
    """Empirically certify the working slab ``|xi| <= 1, |x|_inf <= radius``.

    ``z_samples`` (points of the critical set) default to
    :func:`germflow.analysis.zero_sample` on grad f over the same grid.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    XI, XS = slab_samples(field, radius, grid)
    X, cut = field.X_many(XI, XS)
    gap = np.abs(X[:, 0] - 1.0)
    k = int(np.argmin(gap))
    min_gap = float(gap[k])

    _, _, gf, gradF = field.parts(XI, XS)
    nf = np.linalg.norm(gf, axis=1)
    nF = np.linalg.norm(gradF, axis=1)
    use = ~cut
    if use.any():
        ratio = nf[use] / nF[use]
        c1 = float(ratio.max())
        c3 = float(ratio.min())
    else:
        c1 = c3 = 1.0

    if z_samples is None:
        from .analysis import zero_sample

        zgrid = SampleGrid(radius, grid.points_per_axis, "cube-grid")
        z_samples = zero_sample(field.grad_f, zgrid)
    xs = np.unique(XS, axis=0)
    _, _, gfx, _ = field.parts(0.0, xs)
    dist = dist_to_Z_proxy(field, xs, z_samples)
    nfx = np.linalg.norm(gfx, axis=1)
    m = dist > 0
    a_hat = float(np.max(nfx[m] / dist[m])) if m.any() else 0.0

    return DomainCertificate(
        radius=float(radius),
        grid_spec=grid,
        min_gap=min_gap,
        C1_hat=c1,
        C3_hat=c3,
        A_hat=a_hat,
        ok=bool(min_gap > GAP),
        sample_count=int(XI.size),
        cutoff_count=int(cut.sum()),
        worst_xi=float(XI[k]),
    )
