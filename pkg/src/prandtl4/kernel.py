"""Clamped biharmonic heat kernel on the half-line and its modified companions.

Every kernel is a wavenumber integral

    (1/pi) * int_0^inf k^m exp(-k^4 t) Phi_x^(m)(k x) Phi_y(k y) dk,

which the substitution ``s = k t^(1/4)`` turns into ``t^(-(m+1)/4)`` times a
profile of the self-similar arguments ``X = x t^(-1/4)``, ``Z = y t^(-1/4)``.
Only the profile is ever integrated numerically.  The ``s``-axis is truncated
at ``s_max`` and cut into panels no wider than a fixed fraction of the local
oscillation period; each panel carries a 15-point Gauss-Kronrod rule whose
embedded 7-point Gauss rule provides the error estimate.

Two evaluation paths share the same panels:

* :func:`kernel_profile` integrates one ``(X, Z)`` pair and bisects panels
  locally until the estimate meets the tolerance;
* :func:`kernel_profile_matrix` integrates a whole ``(X_i, Z_j)`` table at
  once as a low-rank product ``A diag(w) B^T`` and refines globally.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureNotConverged, TailNotNegligible
from .grid import Grid

MAX_DERIVATIVE = 7


class PhiKind(enum.Enum):
    MAIN = "main"
    MOD1 = "mod1"
    MOD2 = "mod2"
    MOD3 = "mod3"


class KernelKind(enum.Enum):
    K = "K"
    KA = "Ka"
    KB = "Kb"
    KC = "Kc"

    @property
    def x_factor(self) -> PhiKind:
        return _FACTORS[self][0]

    @property
    def y_factor(self) -> PhiKind:
        return _FACTORS[self][1]

    @property
    def symmetric(self) -> bool:
        return self.x_factor is self.y_factor

    @property
    def transpose(self) -> "KernelKind":
        """Kind whose kernel is this one with ``x`` and ``y`` swapped."""
        return {KernelKind.KA: KernelKind.KC, KernelKind.KC: KernelKind.KA}.get(self, self)


_FACTORS = {
    KernelKind.K: (PhiKind.MAIN, PhiKind.MAIN),
    KernelKind.KA: (PhiKind.MOD3, PhiKind.MOD1),
    KernelKind.KB: (PhiKind.MOD2, PhiKind.MOD2),
    KernelKind.KC: (PhiKind.MOD1, PhiKind.MOD3),
}

# Each Phi variant is  e^{-r} + p sin r + q cos r.
_SIN_COS = {
    PhiKind.MAIN: (1.0, -1.0),
    PhiKind.MOD1: (-1.0, -1.0),
    PhiKind.MOD2: (-1.0, 1.0),
    PhiKind.MOD3: (1.0, 1.0),
}


def _phi_coefficients(kind: PhiKind, order: int) -> tuple[float, float, float]:
    """Coefficients ``(c_exp, c_sin, c_cos)`` of the ``order``-th derivative."""
    p, q = _SIN_COS[kind]
    c_exp = (-1.0) ** order
    for _ in range(order % 4):
        # d/dr (p sin + q cos) = -q sin + p cos
        p, q = -q, p
    return c_exp, p, q


def phi_eval(kind: PhiKind, order, r):
    """``order``-th derivative of the selected Phi variant, from the closed form."""
    if not 0 <= order <= 8:
        raise ValueError(f"derivative order must be in [0, 8], got {order}")
    c_exp, c_sin, c_cos = _phi_coefficients(kind, order)
    r = np.asarray(r, dtype=float)
    out = c_exp * np.exp(-r) + c_sin * np.sin(r) + c_cos * np.cos(r)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation and refinement controls for the scaled wavenumber integral.

    ``abs_tol`` bounds the absolute error of the scaled profile (the kernel
    value divided by ``t^(-(m+1)/4)``).  ``s_max`` defaults to
    ``ln(1/abs_tol)^(1/4) + 1``.
    """

    abs_tol: float = 1e-10
    panels_per_wavelength: int = 4
    max_subdivisions: int = 200_000
    s_max: float | None = None

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.panels_per_wavelength < 4:
            raise ValueError("panels_per_wavelength must be at least 4")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")
        if self.s_max is None:
            object.__setattr__(self, "s_max", math.log(1.0 / self.abs_tol) ** 0.25 + 1.0)
        if not self.s_max > 0:
            raise ValueError("s_max must be positive")
        if math.exp(-self.s_max**4) > self.abs_tol:
            raise ValueError(
                f"s_max={self.s_max} leaves a truncation error above abs_tol={self.abs_tol}")

    def panel_width(self, frequency: float) -> float:
        return 2.0 * math.pi / max(frequency, 1.0) / self.panels_per_wavelength


DEFAULT_QUAD = QuadratureSpec()

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_wg_full = np.zeros(8)
_wg_full[1::2] = _WG
GK_GAUSS_WEIGHTS = np.concatenate([_wg_full[:-1], _wg_full[::-1]])


def _panel_nodes(lo: np.ndarray, hi: np.ndarray):
    """Nodes and (Kronrod, Gauss) weights, one row per panel ``[lo, hi]``."""
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * GK_NODES[None, :]
    wk = half[:, None] * GK_KRONROD_WEIGHTS[None, :]
    wg = half[:, None] * GK_GAUSS_WEIGHTS[None, :]
    return nodes, wk, wg


def _initial_edges(frequency: float, quad: QuadratureSpec) -> np.ndarray:
    n = max(1, math.ceil(quad.s_max / quad.panel_width(frequency)))
    return np.linspace(0.0, quad.s_max, n + 1)


def _check_order(m: int):
    if not 0 <= m <= MAX_DERIVATIVE:
        raise ValueError(f"derivative order must be in [0, {MAX_DERIVATIVE}], got {m}")


def _integrand(s, X, Z, m, kind):
    return (s**m * np.exp(-s**4)
            * phi_eval(kind.x_factor, m, s * X) * phi_eval(kind.y_factor, 0, s * Z))


def kernel_profile(X: float, Z: float, m: int = 0, kind: KernelKind = KernelKind.K,
                   quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Scaled kernel profile at one pair of self-similar arguments.

    Returns ``(1/pi) int_0^s_max s^m e^{-s^4} Phi_x^(m)(sX) Phi_y(sZ) ds``.
    Panels whose Gauss-Kronrod discrepancy exceeds their share of
    ``quad.abs_tol`` are bisected until the total estimate meets it.
    """
    _check_order(m)
    if X < 0 or Z < 0:
        raise ValueError("self-similar arguments must be nonnegative")
    edges = _initial_edges(max(X, Z), quad)
    lo, hi = edges[:-1], edges[1:]
    total, splits = 0.0, 0
    budget = quad.abs_tol * math.pi
    while True:
        nodes, wk, wg = _panel_nodes(lo, hi)
        vals = _integrand(nodes, X, Z, m, kind)
        kron = np.sum(wk * vals, axis=1)
        err = np.abs(kron - np.sum(wg * vals, axis=1))
        share = budget * (hi - lo) / quad.s_max
        ok = err <= share
        total += float(np.sum(kron[ok]))
        if ok.all():
            return total / math.pi
        lo_bad, hi_bad = lo[~ok], hi[~ok]
        splits += len(lo_bad)
        if splits > quad.max_subdivisions:
            raise QuadratureNotConverged(
                f"profile at X={X}, Z={Z}, m={m}, {kind.value}: "
                f"{splits} bisections without reaching abs_tol={quad.abs_tol}")
        mid = 0.5 * (lo_bad + hi_bad)
        lo = np.concatenate([lo_bad, mid])
        hi = np.concatenate([mid, hi_bad])


def kernel_profile_matrix(X, Z, m: int = 0, kind: KernelKind = KernelKind.K,
                          quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Scaled profile on the outer product of ``X`` and ``Z``.

    All entries share one panel set sized for ``max(X, Z)``; the table is
    accumulated as ``Phi_x^(m)(s X) diag(w) Phi_y(s Z)^T`` over the quadrature
    nodes.  The whole panel set is bisected until the largest Kronrod/Gauss
    discrepancy over the table is below ``quad.abs_tol``.
    """
    _check_order(m)
    X = np.atleast_1d(np.asarray(X, dtype=float))
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    if X.size == 0 or Z.size == 0:
        return np.zeros((X.size, Z.size))
    if X.min() < 0 or Z.min() < 0:
        raise ValueError("self-similar arguments must be nonnegative")
    same = kind.symmetric and m == 0 and X.shape == Z.shape and np.array_equal(X, Z)
    edges = _initial_edges(max(X.max(), Z.max()), quad)
    splits = 0
    while True:
        kron, gauss = _product_rule(X, Z, m, kind, edges, same)
        err = float(np.max(np.abs(kron - gauss)))
        if err <= quad.abs_tol * math.pi:
            return kron / math.pi
        splits += len(edges) - 1
        if splits > quad.max_subdivisions:
            raise QuadratureNotConverged(
                f"profile table up to X={X.max():.4g}, Z={Z.max():.4g} (m={m}, {kind.value}): "
                f"estimate {err / math.pi:.3g} after {splits} bisections")
        mid = 0.5 * (edges[1:] + edges[:-1])
        edges = np.sort(np.concatenate([edges, mid]))


_CHUNK_ELEMENTS = 1 << 22


def _product_rule(X, Z, m, kind, edges, same):
    nodes, wk, wg = _panel_nodes(edges[:-1], edges[1:])
    s, wk, wg = nodes.ravel(), wk.ravel(), wg.ravel()
    env = s**m * np.exp(-s**4)
    kron = np.zeros((X.size, Z.size))
    gauss = np.zeros((X.size, Z.size))
    chunk = max(15, _CHUNK_ELEMENTS // max(X.size, Z.size))
    for start in range(0, s.size, chunk):
        sl = slice(start, start + chunk)
        a = phi_eval(kind.x_factor, m, np.outer(X, s[sl]))
        b = a if same else phi_eval(kind.y_factor, 0, np.outer(Z, s[sl]))
        kron += a @ (b * (env[sl] * wk[sl])).T
        g = wg[sl] != 0.0
        gauss += a[:, g] @ (b[:, g] * (env[sl][g] * wg[sl][g])).T
    return kron, gauss


def _scaled(t: float, x, y):
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    q = t ** -0.25
    return np.asarray(x, dtype=float) * q, np.asarray(y, dtype=float) * q


def kernel_value(t: float, x: float, y: float, m: int = 0, kind: KernelKind = KernelKind.K,
                 quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``d^m/dx^m`` of the selected kernel at ``(t, x, y)``."""
    X, Z = _scaled(t, x, y)
    return t ** (-(m + 1) / 4) * kernel_profile(float(X), float(Z), m, kind, quad)


def kernel_matrix(t: float, x, y, m: int = 0, kind: KernelKind = KernelKind.K,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Kernel values on the outer product of positions ``x`` (rows) and ``y`` (columns)."""
    X, Z = _scaled(t, x, y)
    return t ** (-(m + 1) / 4) * kernel_profile_matrix(X, Z, m, kind, quad)


def kernel_row(t: float, x: float, grid: Grid, m: int = 0, kind: KernelKind = KernelKind.K,
               quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    return kernel_matrix(t, [x], grid.nodes, m, kind, quad)[0]


def _check_tail(row: np.ndarray, grid: Grid, quad: QuadratureSpec, what: str):
    last = 0.5 * grid.spacing * (abs(row[-1]) + abs(row[-2]))
    if last > 10 * quad.abs_tol:
        raise TailNotNegligible(
            f"{what}: last grid cell contributes {last:.3g} > {10 * quad.abs_tol:.3g}; "
            f"enlarge the grid length (L={grid.length})")


def kernel_row_l1(t: float, x: float, m: int, kind: KernelKind, grid: Grid,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Trapezoid approximation of ``int_0^L |d_x^m kernel(t, x, y)| dy``."""
    row = kernel_row(t, x, grid, m, kind, quad)
    _check_tail(row, grid, quad, f"L1 row t={t}, x={x}")
    return grid.integrate(np.abs(row))


def kernel_mass(t: float, x: float, grid: Grid, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Signed integral ``int_0^L K(t, x, y) dy``; tends to 1 as ``t -> 0+`` for ``x > 0``."""
    row = kernel_row(t, x, grid, 0, KernelKind.K, quad)
    _check_tail(row, grid, quad, f"mass row t={t}, x={x}")
    return grid.integrate(row)


def kernel_tail_mass(t: float, x: float, delta: float, grid: Grid,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``int_{|y - x| > delta} |K(t, x, y)| dy`` over the grid (mass concentration)."""
    row = kernel_row(t, x, grid, 0, KernelKind.K, quad)
    _check_tail(row, grid, quad, f"tail row t={t}, x={x}")
    far = np.abs(grid.nodes - x) > delta
    return grid.integrate(np.where(far, np.abs(row), 0.0))


# d_y^m K(t, x, y) = d_x^m K_kind(t, x, y) for these companions.
TRANSFER_KIND = {1: KernelKind.KA, 2: KernelKind.KB, 3: KernelKind.KC}
