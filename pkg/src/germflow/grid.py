"""Discretisations of a neighbourhood of the origin."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

CUBE = "cube-grid"
SHELLS = "sphere-shells"


@dataclass(frozen=True)
class SampleGrid:
    """Sampling pattern for a ball of ``radius`` around 0.

    ``cube-grid`` is the tensor grid ``linspace(-radius, radius, k)**n``.
    ``sphere-shells`` places ``k`` geometrically spaced shells between
    ``radius * inner_ratio`` and ``radius``, each carrying a fixed direction set,
    plus the origin.
    """

    radius: float
    points_per_axis: int = 41
    pattern: str = CUBE
    exclusion: float = 1e-30
    inner_ratio: float = 1e-2

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.points_per_axis < 3:
            raise ValueError("points_per_axis must be at least 3")
        if self.pattern not in (CUBE, SHELLS):
            raise ValueError(f"unknown pattern {self.pattern!r}")

    def refined(self) -> "SampleGrid":
        """Same pattern with roughly doubled resolution (old points retained for cubes)."""
        return replace(self, points_per_axis=2 * self.points_per_axis - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.points_per_axis)

    def shell_radii(self) -> np.ndarray:
        return np.geomspace(self.radius * self.inner_ratio, self.radius, self.points_per_axis)

    def points(self, n: int) -> np.ndarray:
        if self.pattern == CUBE:
            axes = [self.axis()] * n
            mesh = np.meshgrid(*axes, indexing="ij")
            return np.stack([m.ravel() for m in mesh], axis=-1)
        dirs = unit_directions(n, self.points_per_axis)
        radii = self.shell_radii()
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)
        return np.vstack([np.zeros((1, n)), pts])

    def to_dict(self) -> dict:
        return asdict(self)


def unit_directions(n: int, k: int) -> np.ndarray:
    """Deterministic direction set on the unit sphere in R^n.

    Always contains the ``2n`` signed coordinate axes; ``n == 2`` adds an even
    angular fan, higher ``n`` adds seeded Gaussian directions.
    """
    axes = np.vstack([np.eye(n), -np.eye(n)])
    if n == 1:
        return axes
    if n == 2:
        m = 4 * max(k, 8)
        th = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    rng = np.random.default_rng(12345)
    extra = rng.standard_normal((4 * max(k, 8) * (n - 1), n))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.vstack([axes, extra])
