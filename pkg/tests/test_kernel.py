import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import row_grid
from prandtl4.errors import QuadratureNotConverged, TailNotNegligible
from prandtl4.grid import Grid
from prandtl4.kernel import (GK_GAUSS_WEIGHTS, GK_KRONROD_WEIGHTS, GK_NODES, KernelKind, PhiKind,
                             QuadratureSpec, kernel_mass, kernel_matrix, kernel_profile,
                             kernel_profile_matrix, kernel_row_l1, kernel_tail_mass, kernel_value,
                             phi_eval)

# Fixed-step trapezoid on s in [0, 6] with 10^6 nodes, computed once and frozen.
PROFILE_1_1_ORACLE = 0.03349576738254244


def _phi_closed_form(kind, r):
    p, q = {PhiKind.MAIN: (1, -1), PhiKind.MOD1: (-1, -1), PhiKind.MOD2: (-1, 1),
            PhiKind.MOD3: (1, 1)}[kind]
    return math.exp(-r) + p * math.sin(r) + q * math.cos(r)


def test_phi_examples():
    assert phi_eval(PhiKind.MAIN, 0, 0.0) == 0.0
    assert phi_eval(PhiKind.MAIN, 1, 0.0) == 0.0
    assert phi_eval(PhiKind.MOD2, 0, 0.0) == 2.0
    for r in (0.5, 1.0, 2.0):
        assert phi_eval(PhiKind.MAIN, 1, r) == pytest.approx(-phi_eval(PhiKind.MOD1, 0, r), abs=1e-15)


@pytest.mark.parametrize("kind", list(PhiKind))
@pytest.mark.parametrize("order", range(8))
def test_phi_derivatives_match_finite_differences(kind, order):
    r, h = 0.8, 1e-3
    fd = (phi_eval(kind, order, r + h) - phi_eval(kind, order, r - h)) / (2 * h)
    assert phi_eval(kind, order + 1, r) == pytest.approx(fd, abs=1e-6)


@pytest.mark.parametrize("kind", list(PhiKind))
def test_phi_order_zero_is_closed_form(kind):
    for r in (0.0, 0.3, 2.5, 11.0):
        assert phi_eval(kind, 0, r) == pytest.approx(_phi_closed_form(kind, r), abs=1e-15)


def test_phi_rejects_high_order():
    with pytest.raises(ValueError):
        phi_eval(PhiKind.MAIN, 9, 1.0)


def test_kernel_kind_factor_pairs():
    assert (KernelKind.K.x_factor, KernelKind.K.y_factor) == (PhiKind.MAIN, PhiKind.MAIN)
    assert (KernelKind.KA.x_factor, KernelKind.KA.y_factor) == (PhiKind.MOD3, PhiKind.MOD1)
    assert (KernelKind.KB.x_factor, KernelKind.KB.y_factor) == (PhiKind.MOD2, PhiKind.MOD2)
    assert (KernelKind.KC.x_factor, KernelKind.KC.y_factor) == (PhiKind.MOD1, PhiKind.MOD3)


def test_quadrature_spec_invariants():
    q = QuadratureSpec()
    assert math.exp(-q.s_max**4) <= q.abs_tol
    with pytest.raises(ValueError):
        QuadratureSpec(panels_per_wavelength=3)
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=1e-10, s_max=1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)


def test_gauss_kronrod_exactness():
    # K15 integrates degree 22 exactly on [-1, 1]; the embedded G7 degree 13.
    for deg in (13, 22):
        exact = 2.0 / (deg + 1) if deg % 2 == 0 else 0.0
        assert np.dot(GK_KRONROD_WEIGHTS, GK_NODES**deg) == pytest.approx(exact, abs=1e-14)
    assert np.dot(GK_GAUSS_WEIGHTS, GK_NODES**12) == pytest.approx(2 / 13, abs=1e-14)


def test_profile_matches_trapezoid_oracle():
    assert kernel_profile(1.0, 1.0) == pytest.approx(PROFILE_1_1_ORACLE, abs=1e-8)


def test_oracle_reproduces():
    s = np.linspace(0.0, 6.0, 1_000_001)
    f = np.exp(-s**4) * (np.exp(-s) + np.sin(s) - np.cos(s)) ** 2 / np.pi
    assert np.trapezoid(f, s) == pytest.approx(PROFILE_1_1_ORACLE, abs=1e-12)


@pytest.mark.parametrize("Z", [0.0, 0.5, 3.0, 40.0])
def test_profile_vanishes_at_the_wall(Z):
    assert kernel_profile(0.0, Z) == 0.0


def test_scalar_and_matrix_paths_agree():
    X = np.array([0.0, 0.4, 2.0, 9.0, 30.0])
    Z = np.array([0.1, 1.0, 5.0, 25.0])
    for kind in KernelKind:
        for m in (0, 1, 3):
            mat = kernel_profile_matrix(X, Z, m, kind)
            ref = np.array([[kernel_profile(x, z, m, kind) for z in Z] for x in X])
            np.testing.assert_allclose(mat, ref, atol=5e-10)


def test_nonconvergence_is_reported():
    with pytest.raises(QuadratureNotConverged):
        kernel_profile(50.0, 50.0, 0, KernelKind.K, QuadratureSpec(abs_tol=1e-14, max_subdivisions=1))


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 10.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_symmetry_of_k(t, x, y):
    assert kernel_value(t, x, y) == pytest.approx(kernel_value(t, y, x), abs=1e-9 * t**-0.25)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.floats(0.5, 2.0),
       st.integers(0, 3), st.sampled_from(list(KernelKind)))
def test_scaling_law(t, x, y, lam, m, kind):
    # The same scaled arguments are integrated, so equality holds to rounding.
    lhs = kernel_value(lam**4 * t, lam * x, lam * y, m, kind)
    rhs = lam ** -(m + 1) * kernel_value(t, x, y, m, kind)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-13)


@pytest.mark.parametrize("t", [1e-3, 0.1, 5.0])
@pytest.mark.parametrize("y", [0.0, 0.7, 4.0])
def test_boundary_annihilation(t, y):
    assert kernel_value(t, 0.0, y, 0) == 0.0
    assert abs(kernel_value(t, 0.0, y, 1)) <= 1e-9 * t**-0.5


def test_rescaled_kernel_is_bounded_over_decades():
    pts = [(0.3, 0.5), (1.0, 1.0), (2.0, 0.2)]
    for m in range(4):
        vals = [abs(kernel_value(t, x, y, m)) * t ** ((m + 1) / 4)
                for t in (1e-3, 1e-2, 1e-1, 1.0) for x, y in pts]
        assert max(vals) < 1.0


def test_kernel_matrix_shape_and_row_zero():
    m = kernel_matrix(0.01, [0.0, 0.5], np.linspace(0, 2, 7))
    assert m.shape == (2, 7)
    assert np.all(m[0] == 0)


@pytest.mark.parametrize("t, x", [(1e-3, 1.0), (1e-3, 10.0), (0.1, 10.0), (10.0, 10.0)])
def test_row_l1_away_from_wall(t, x):
    v = kernel_row_l1(t, x, 0, KernelKind.K, row_grid(t, x))
    assert 0.9 <= v <= 1.3


@pytest.mark.parametrize("t", [1e-3, 0.1, 10.0])
def test_row_l1_is_zero_on_the_wall_and_bounded_near_it(t):
    assert kernel_row_l1(t, 0.0, 0, KernelKind.K, row_grid(t, 0.0)) == 0.0
    assert kernel_row_l1(t, 1.0, 0, KernelKind.K, row_grid(t, 1.0)) <= 1.3


def test_tail_check_rejects_short_grid():
    with pytest.raises(TailNotNegligible):
        kernel_row_l1(1.0, 1.0, 0, KernelKind.K, Grid(3.0, 200))


def test_mass_tends_to_one():
    g = Grid(8.0, 16001)
    near = abs(kernel_mass(1e-6, 1.0, g) - 1)
    far = abs(kernel_mass(1e-4, 1.0, g) - 1)
    assert far <= 1e-2
    assert near < far


def test_mass_of_wall_row_is_zero_and_interior_rows_near_one():
    assert kernel_mass(0.01, 0.0, row_grid(0.01, 0.0)) == 0.0
    assert kernel_mass(1e-4, 5.0, row_grid(1e-4, 5.0)) == pytest.approx(1.0, abs=1e-6)


def test_tail_mass_shrinks():
    g = Grid(8.0, 16001)
    tails = [kernel_tail_mass(t, 1.0, 0.5, g) for t in (1e-3, 1e-4, 1e-5)]
    assert tails[0] > tails[1] > tails[2]
