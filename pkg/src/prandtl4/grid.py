"""Uniform half-line grids, grid profiles and finite-difference stencils.

All spatial quantities in the package live on a :class:`Grid`, the uniform
discretisation ``y_i = i * h`` of the truncated half-line ``[0, L]``.  Node 0
sits exactly on the wall ``y = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatch

MIN_POINTS = 64


@dataclass(frozen=True)
class Grid:
    length: float
    points: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"grid length must be positive, got {self.length}")
        if self.points < MIN_POINTS:
            raise ValueError(f"grid needs at least {MIN_POINTS} points, got {self.points}")

    @property
    def spacing(self) -> float:
        return self.length / (self.points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        y = np.arange(self.points) * self.spacing
        y.setflags(write=False)
        return y

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        w.setflags(write=False)
        return w

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def cumulative(self, values) -> np.ndarray:
        """Trapezoid cumulative integral from node 0; node 0 holds 0."""
        values = np.asarray(values, dtype=float)
        out = np.zeros(self.points)
        out[1:] = np.cumsum(0.5 * self.spacing * (values[1:] + values[:-1]))
        return out

    def derivative(self, values, order: int) -> np.ndarray:
        if order == 0:
            return np.array(values, dtype=float)
        return _derivative_matrix(self.points, self.spacing, order) @ np.asarray(values, dtype=float)

    def boundary_derivative(self, values, order: int) -> float:
        """One-sided ``order``-th derivative at node 0 (fourth-order accurate)."""
        if order == 0:
            return float(values[0])
        w = fd_weights(np.arange(order + 4), order)
        return float(np.dot(w, values[: order + 4])) / self.spacing**order


@dataclass(frozen=True, eq=False)
class Profile:
    """Real samples of a function on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.points,):
            raise ValueError(f"expected {self.grid.points} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Profile":
        return cls(grid, func(grid.nodes))

    @classmethod
    def zeros(cls, grid: Grid) -> "Profile":
        return cls(grid, np.zeros(grid.points))

    def _check(self, other: "Profile"):
        if other.grid != self.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check(other)
        return Profile(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return Profile(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return Profile(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__

    def derivative(self, order: int) -> "Profile":
        return Profile(self.grid, self.grid.derivative(self.values, order))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l1(self) -> float:
        return self.grid.integrate(np.abs(self.values))

    def integral(self) -> float:
        return self.grid.integrate(self.values)

    def clamped_traces(self) -> tuple[float, float]:
        """Value and one-sided first derivative at the wall."""
        return float(self.values[0]), self.grid.boundary_derivative(self.values, 1)

    def is_admissible(self, tol: float) -> bool:
        return all(abs(r) <= tol for r in self.clamped_traces())


def fd_weights(offsets, order: int) -> np.ndarray:
    """Finite-difference weights for ``d^order/dy^order`` on integer ``offsets`` (unit spacing)."""
    offsets = np.asarray(offsets, dtype=float)
    n = len(offsets)
    if n <= order:
        raise ValueError("stencil too small for the requested order")
    vander = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


@lru_cache(maxsize=64)
def _derivative_matrix(points: int, spacing: float, order: int) -> sp.csr_matrix:
    # Central stencils of 4th order inside, shifted one-sided stencils of the
    # same accuracy where the central one does not fit.
    half = (order + 3) // 2
    central = fd_weights(np.arange(-half, half + 1), order)
    width = order + 4
    rows, cols, vals = [], [], []
    for i in range(points):
        if half <= i < points - half:
            idx = np.arange(i - half, i + half + 1)
            w = central
        else:
            start = 0 if i < half else points - width
            idx = np.arange(start, start + width)
            w = fd_weights(idx - i, order)
        rows.extend([i] * len(idx))
        cols.extend(idx)
        vals.extend(w)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(points, points))
    return mat / spacing**order


def bump(grid: Grid, amplitude: float = 10.0, center: float = 20.0, half_width: float = 10.0) -> Profile:
    """Smooth compactly supported bump ``A exp(-1 / (1 - ((y - c) / w)^2))``."""
    z = (grid.nodes - center) / half_width
    inside = np.abs(z) < 1.0
    vals = np.zeros(grid.points)
    vals[inside] = amplitude * np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return Profile(grid, vals)
