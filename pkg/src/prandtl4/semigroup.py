"""Dense grid realisations of the clamped biharmonic semigroup.

``S(t) f (x) = int_0^inf K(t, x, y) f(y) dy`` is discretised with trapezoid
weights in ``y``, so a :class:`KernelOperator` is the matrix
``M[i, j] = d_x^m kernel(t, y_i, y_j) * w_j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CompatibilityViolated, GridMismatch, TimeBelowMinimum
from .grid import Grid, Profile
from .kernel import DEFAULT_QUAD, KernelKind, QuadratureSpec, kernel_matrix

T_MIN = 1e-6
# Trapezoid weights alias the kernel once t^(1/4) drops below ~h/3; the
# aliasing factor at this ratio is exp(-(2 pi RESOLUTION)^4) ~ 1e-17.
RESOLUTION = 0.4

# Kernel used for the integration-by-parts form of d_x^n S(t) f, by n mod 4.
# d_x K(x, y) = d_y K_c(x, y) and d_x^3 K(x, y) = d_y^3 K_a(x, y).
_IBP_KIND = {1: KernelKind.KC, 2: KernelKind.KB, 3: KernelKind.KA, 0: KernelKind.K}
_IBP_SIGN = {1: -1.0, 2: 1.0, 3: -1.0, 0: 1.0}


def min_time(grid: Grid | None = None) -> float:
    """Smallest time for which a kernel operator on ``grid`` is trusted."""
    if grid is None:
        return T_MIN
    return max(T_MIN, (RESOLUTION * grid.spacing) ** 4)


def check_time(t: float, grid: Grid | None = None):
    floor = min_time(grid)
    if not t >= floor:
        raise TimeBelowMinimum(
            f"t={t:.3g} is below the minimum resolvable time {floor:.3g}"
            + (f" for grid spacing {grid.spacing:.3g}" if grid is not None else "")
            + "; refine the grid instead")


@dataclass(frozen=True, eq=False)
class KernelOperator:
    grid: Grid
    t: float
    m: int
    kind: KernelKind
    matrix: np.ndarray
    quad: QuadratureSpec

    def __call__(self, f: Profile) -> Profile:
        return apply(self, f)


def build_operator(grid: Grid, t: float, m: int = 0, kind: KernelKind = KernelKind.K,
                   quad: QuadratureSpec = DEFAULT_QUAD) -> KernelOperator:
    """Assemble (or fetch from cache) the operator ``d_x^m S(t)`` of the given kind."""
    check_time(t, grid)
    return _cached_operator(grid, float(t), int(m), kind, quad)


@lru_cache(maxsize=24)
def _cached_operator(grid, t, m, kind, quad):
    y = grid.nodes
    mat = kernel_matrix(t, y, y, m, kind, quad) * grid.weights[None, :]
    mat.setflags(write=False)
    return KernelOperator(grid, t, m, kind, mat, quad)


def clear_operator_cache():
    _cached_operator.cache_clear()


def apply(op: KernelOperator, f: Profile) -> Profile:
    if f.grid != op.grid:
        raise GridMismatch(f"operator grid {op.grid} vs profile grid {f.grid}")
    return Profile(op.grid, op.matrix @ f.values)


def apply_kernel(f: Profile, t: float, m: int = 0, kind: KernelKind = KernelKind.K,
                 quad: QuadratureSpec = DEFAULT_QUAD) -> Profile:
    """One-off ``d_x^m S(t) f`` that only integrates over the support of ``f``.

    Cheaper than :func:`build_operator` for narrow data; nothing is cached.
    """
    grid = f.grid
    check_time(t, grid)
    cols = np.flatnonzero(f.values)
    if cols.size == 0:
        return Profile.zeros(grid)
    mat = kernel_matrix(t, grid.nodes, grid.nodes[cols], m, kind, quad)
    return Profile(grid, mat @ (grid.weights[cols] * f.values[cols]))


def compatibility_orders(total_order: int) -> list[int]:
    """Derivative orders whose wall traces must vanish for the IBP form of order ``total_order``."""
    if total_order < 1:
        return []
    m, r = divmod(total_order - 1, 4)
    orders = {4 * j for j in range(m + 1)} | {4 * j + 1 for j in range(m)}
    if r >= 1:
        orders.add(4 * m + 1)
    return sorted(orders)


def apply_ibp(grid: Grid, t: float, total_order: int, f_derivs, quad: QuadratureSpec = DEFAULT_QUAD,
              tol: float = 1e-8) -> Profile:
    """``d_x^n S(t) f`` with all ``n`` derivatives moved onto the datum.

    ``f_derivs[q]`` holds ``d^q f`` on the grid for ``q = 0 .. n``; entries may
    be ``None`` except the one of order ``n``.  Every provided trace required
    by the compatibility ladder must be below ``tol`` in absolute value.
    """
    if total_order < 1:
        raise ValueError("total_order must be at least 1")
    if len(f_derivs) <= total_order or f_derivs[total_order] is None:
        raise ValueError(f"f_derivs must supply the derivative of order {total_order}")
    bad = {}
    for q in compatibility_orders(total_order):
        d = f_derivs[q] if q < len(f_derivs) else None
        if d is not None and abs(d.values[0]) > tol:
            bad[q] = float(d.values[0])
    if bad:
        raise CompatibilityViolated(f"nonzero wall traces {bad} (tol={tol})")
    fn = f_derivs[total_order]
    if fn.grid != grid:
        raise GridMismatch(f"{fn.grid} vs {grid}")
    r = total_order % 4
    op = build_operator(grid, t, 0, _IBP_KIND[r], quad)
    return _IBP_SIGN[r] * apply(op, fn)


def verify_semigroup(f: Profile, tau: float, s: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``|| S(tau) S(s) f - S(tau + s) f ||_sup``."""
    if s < T_MIN:
        return 0.0
    g = f.grid
    lhs = apply(build_operator(g, tau, quad=quad), apply(build_operator(g, s, quad=quad), f))
    rhs = apply(build_operator(g, tau + s, quad=quad), f)
    return (lhs - rhs).sup()


def smoothing_rate_fit(f: Profile, m: int, t_values, quad: QuadratureSpec = DEFAULT_QUAD,
                       normalize: str = "none") -> float:
    """Least-squares slope of ``log ||d^m S(t) f||_sup`` against ``log t``.

    ``normalize="sup"`` divides by ``||f||_sup`` and ``"l1"`` by ``||f||_L1``;
    neither changes the slope, only the reported intercept.
    """
    t_values = np.asarray(t_values, dtype=float)
    norms = np.array([apply_kernel(f, t, m, KernelKind.K, quad).sup() for t in t_values])
    scale = {"none": 1.0, "sup": f.sup(), "l1": f.l1()}[normalize]
    slope, _ = np.polyfit(np.log(t_values), np.log(norms / scale), 1)
    return float(slope)
