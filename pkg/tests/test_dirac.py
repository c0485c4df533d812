import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fermisig.dirac import (
    GAMMA0,
    GAMMA1,
    GAMMA5,
    GammaAlgebra,
    PropagatorKernel,
    QuadratureSpec,
    SpinorField,
    charge_conjugate,
    conservation_check,
    dirac_residual,
    evolve_massive,
    evolve_massless,
    group_property_defect,
    km_coefficients,
    km_delta_weights,
    km_regular,
    plane_wave_modes,
    pointwise_bound,
    reference_datum,
    slice_norm,
    spin_adjoint,
    spin_product,
)
from fermisig.errors import InvariantViolation, QuadratureTooCoarse

I2 = np.eye(2)


def _bump(x, x0, r=0.1):
    s = (x - x0) / r
    return np.where(np.abs(s) < 1, (1 - s * s) ** 4, 0.0)


# ---------------------------------------------------------------- algebra

def test_clifford_relations():
    g = GammaAlgebra()
    anti = lambda a, b: a @ b + b @ a  # noqa: E731
    np.testing.assert_array_equal(anti(g.gamma0, g.gamma0), 2 * I2)
    np.testing.assert_array_equal(anti(g.gamma1, g.gamma1), -2 * I2)
    np.testing.assert_array_equal(anti(g.gamma0, g.gamma1), 0 * I2)


def test_chirality_matrix():
    g = GammaAlgebra()
    np.testing.assert_array_equal(g.Gamma @ g.Gamma, I2)
    np.testing.assert_array_equal(g.Gamma @ g.gamma0 + g.gamma0 @ g.Gamma, 0 * I2)
    np.testing.assert_array_equal(g.Gamma @ g.gamma1 + g.gamma1 @ g.Gamma, 0 * I2)
    np.testing.assert_array_equal(g.Gamma.conj().T, g.Gamma)


def test_gamma_matrices_are_spin_symmetric():
    for G in (GAMMA0, GAMMA1):
        np.testing.assert_array_equal(spin_adjoint(G), G)
    np.testing.assert_array_equal(spin_adjoint(GAMMA5), -GAMMA5)


def test_spin_product_is_indefinite():
    psi = np.array([1.0, 0.0])
    phi = np.array([1.0, 1.0])
    assert spin_product(psi, psi) == 0
    assert spin_product(phi, phi) == 2
    assert spin_product(np.array([1.0, -1.0]), np.array([1.0, -1.0])) == -2


# ---------------------------------------------------------------- massless transport

def test_zero_time_is_identity():
    psi = reference_datum(64)
    np.testing.assert_array_equal(evolve_massless(psi, 0.0).values, psi.values)


def test_left_mover_moves_left():
    n, dt = 400, 0.1
    psi = SpinorField.from_function(1.0, n, lambda x: np.column_stack([_bump(x, 0.5), 0 * x]))
    out = evolve_massless(psi, dt)
    assert psi.x[np.argmax(np.abs(out.values[:, 0]))] == pytest.approx(0.4, abs=1.0 / n)
    assert np.all(out.values[:, 1] == 0)


def test_plane_wave_phase_shift():
    n, k, t = 256, 3, 0.1
    psi = SpinorField.from_function(1.0, n, lambda x: np.column_stack([np.exp(2j * np.pi * k * x), 0 * x]))
    out = evolve_massless(psi, t)
    x = psi.x
    interior = (x + t < 1 - 1.0 / n)
    np.testing.assert_allclose(out.values[interior, 0], np.exp(2j * np.pi * k * (x[interior] + t)),
                               atol=5 * (2 * np.pi * k / n) ** 2)


# ---------------------------------------------------------------- kernel

@pytest.mark.parametrize("m, t", [(1.0, 0.3), (2.5, 0.9), (0.4, 2.0)])
def test_on_axis_kernel(m, t):
    expected = (-(1j * m / (4 * np.pi)) * special.j0(m * t) * I2
                - (m / (4 * np.pi)) * special.j1(m * t) * GAMMA0)
    np.testing.assert_allclose(km_regular(m, t, 0.0), expected, atol=1e-14)


def test_kernel_vanishes_outside_cone_and_on_cauchy_line():
    assert np.all(km_regular(1.0, 0.1, 0.5) == 0)
    assert np.all(km_regular(1.0, 0.0, 0.0) == 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 5), st.floats(-2, 2), st.floats(-2, 2))
def test_kernel_sign_flip_symmetry(m, t, x):
    np.testing.assert_allclose(km_regular(m, -t, -x), np.conj(km_regular(m, t, x)), atol=1e-15)


def test_kernel_coefficient_types():
    a, c0, c1 = km_coefficients(1.3, np.array([0.5, -0.5]), np.array([0.2, 0.1]))
    assert np.all(a.real == 0)
    assert c0.dtype == float and c1.dtype == float


def test_kernel_continuous_up_to_the_cone():
    m, t = 1.7, 0.6
    limit = km_regular(m, t, t)  # on the cone J1(z)/z -> 1/2
    for eps in (1e-4, 1e-6, 1e-8):
        inner = km_regular(m, t, t * (1 - eps))
        assert np.max(np.abs(inner - limit)) < 10 * eps
    expected_c0 = -(m / (4 * np.pi)) * t * m * 0.5
    a, c0, c1 = km_coefficients(m, t, t)
    assert c0 == pytest.approx(expected_c0, rel=1e-14)


def test_massless_kernel_parts():
    k = PropagatorKernel(0.0)
    du, dv = k.delta_part()
    np.testing.assert_array_equal(du, (GAMMA0 + GAMMA1) / (4 * np.pi))
    np.testing.assert_array_equal(dv, km_delta_weights()[1])
    assert np.all(k.regular_part(0.5, 0.1) == 0)


# ---------------------------------------------------------------- massive evolution

def test_zero_mass_equals_massless():
    psi = reference_datum(64)
    np.testing.assert_array_equal(evolve_massive(psi, 0.2, 0.0).values, evolve_massless(psi, 0.2).values)


def test_negative_mass_rejected():
    with pytest.raises(InvariantViolation):
        evolve_massive(reference_datum(32), 0.1, -1.0)


def test_coarse_quadrature_rejected():
    with pytest.raises(QuadratureTooCoarse):
        evolve_massive(reference_datum(32), 0.1, 1.0, QuadratureSpec(refine=0))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_pointwise_bound(seed):
    g = np.random.default_rng(seed)
    coeffs = g.normal(size=(4, 2)) + 1j * g.normal(size=(4, 2))

    def fn(x):
        base = _bump(x, 0.5, 0.3)[:, None]
        waves = np.stack([np.exp(2j * np.pi * (k + 1) * x) for k in range(4)], axis=1)
        return base * (waves @ coeffs)

    psi = SpinorField.from_function(1.0, 128, fn)
    m, t = 2.0, 0.2
    out = evolve_massive(psi, t, m)
    bound = pointwise_bound(psi, m, t)
    assert np.all(np.max(np.abs(out.values), axis=0) <= bound + 1e-12)


def test_slice_norm_conserved_at_t_03():
    psi = reference_datum(256)
    out = evolve_massive(psi, 0.3, 1.0)
    drift, est = conservation_check(1.0, 0.3, 256)
    assert abs(slice_norm(out) - slice_norm(psi)) == pytest.approx(drift)
    assert drift <= 5 * est


def test_massless_norm_exactly_conserved_in_interior():
    psi = reference_datum(128)
    assert slice_norm(evolve_massless(psi, 0.125)) == pytest.approx(slice_norm(psi), rel=1e-14)


def test_group_property_trivial_cases():
    assert group_property_defect(0.0, 0.125, 0.125, 64) == 0.0
    assert group_property_defect(1.0, 0.0, 0.25, 64) == 0.0


def test_group_property_converges():
    coarse = group_property_defect(1.0, 0.125, 0.125, 64)
    fine = group_property_defect(1.0, 0.125, 0.125, 128)
    assert math.log2(coarse / fine) >= 1.8


def test_group_property_needs_grid():
    with pytest.raises(InvariantViolation):
        group_property_defect(1.0, 0.1, 0.1, 8)


def test_dirac_residual_is_second_order():
    r1 = dirac_residual(1.0, 0.25, 64)
    r2 = dirac_residual(1.0, 0.25, 128)
    assert r2 < r1 / 3


# ---------------------------------------------------------------- slice norm, conjugation

def test_basis_element_has_unit_norm():
    b, n = 1.0, 64
    psi = SpinorField.from_function(b, n, lambda x: np.column_stack(
        [np.exp(2j * np.pi * x / b) / np.sqrt(2 * np.pi * b), 0 * x]))
    assert slice_norm(psi) == pytest.approx(1.0, rel=1e-14)


def test_slice_norm_scaling():
    psi = reference_datum(32)
    zero = SpinorField(1.0, np.zeros((32, 2)))
    assert slice_norm(zero) == 0
    twice = SpinorField(1.0, 2 * psi.values)
    assert slice_norm(twice) == pytest.approx(4 * slice_norm(psi), rel=1e-15)


def test_charge_conjugation():
    psi = SpinorField(1.0, np.tile([1j, 1.0], (4, 1)))
    np.testing.assert_array_equal(charge_conjugate(psi).values, psi.values)  # (i, 1) -> (i, 1)
    phi = reference_datum(64)
    np.testing.assert_array_equal(charge_conjugate(charge_conjugate(phi)).values, phi.values)
    assert slice_norm(charge_conjugate(phi)) == pytest.approx(slice_norm(phi), rel=1e-15)


def test_invalid_field_shape():
    with pytest.raises(InvariantViolation):
        SpinorField(1.0, np.zeros((4, 3)))


# ---------------------------------------------------------------- plane waves

@pytest.mark.parametrize("m", [0.0, 1.0])
def test_plane_waves_solve_dirac_and_are_orthonormal(m):
    p, e, v = plane_wave_modes(1.0, m, 3)
    assert len(p) == 4 * 3 + 2
    for pk, ek, vk in zip(p, e, v):
        H = np.array([[-pk, m], [m, pk]])
        np.testing.assert_allclose(H @ vk, ek * vk, atol=1e-14)
    gram = v.conj() @ v.T * (p[:, None] == p[None, :])
    np.testing.assert_allclose(gram, np.eye(len(p)), atol=1e-14)
