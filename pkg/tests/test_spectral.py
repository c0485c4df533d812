import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import staircase
from fermisig.errors import OddUnpairedEigenvalue, ZeroAcceptance
from fermisig.expr import parse_expression
from fermisig.geometry import ConformalDomain, GraphDomain, SimpleDomain, random_simple_domain, validate_domain
from fermisig.sigop import build_conformal, build_flat_massless, build_massive_kernel, build_simple
from fermisig.spectral import (
    chiral_index,
    decay_bound_report,
    decay_constant,
    image_total_variation,
    order_eigenvalues,
    pairing_defect,
    positive_trace,
    spectrum,
    symmetry_defect,
    theta_coefficient,
    trace_of_power,
    trace_power,
    trace_s2_massive_mc,
    trace_s4_candidates,
    trace_s4_curvature,
    trace_theta_mc,
)

FOUR_PI = 4 * np.pi
EPS = np.finfo(float).eps


# ---------------------------------------------------------------- spectrum

def test_single_diamond_spectrum(diamond_simple):
    rep = spectrum(build_simple(diamond_simple))
    np.testing.assert_allclose(rep.eigenvalues, [1 / FOUR_PI, -1 / FOUR_PI], atol=1e-16)
    assert rep.pairing_defect == 0.0
    assert rep.index == 0


def test_zero_matrix_spectrum():
    rep = spectrum(np.zeros((6, 6)))
    assert np.all(rep.eigenvalues == 0)
    assert rep.positive_trace == 0.0


def test_ordering_breaks_ties_by_sign():
    ev = np.array([-0.5, 0.1, 0.5, -0.1])
    np.testing.assert_array_equal(ev[order_eigenvalues(ev)], [0.5, -0.5, 0.1, -0.1])


def test_odd_spectrum_cannot_be_paired():
    with pytest.raises(OddUnpairedEigenvalue):
        pairing_defect([1.0, -1.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=20))
def test_pairing_defect_of_symmetric_lists(values):
    ev = np.array(values + [-v for v in values])
    np.random.default_rng(0).shuffle(ev)
    assert pairing_defect(ev) == 0.0


def test_symmetry_defect_exact_and_flat(diamond_simple, triangle):
    assert symmetry_defect(spectrum(build_simple(diamond_simple), vectors=True)) == 0.0
    rep = spectrum(build_flat_massless(GraphDomain.diamond(), 256), vectors=True)
    assert symmetry_defect(rep) <= 1e-12
    assert symmetry_defect(spectrum(build_flat_massless(triangle, 256), vectors=True)) <= 1e-12


def test_symmetry_defect_massive(diamond):
    op = build_massive_kernel(diamond, 1.0, 96)
    rep = spectrum(op)
    floor = op.n * EPS * np.max(np.abs(rep.eigenvalues))
    assert symmetry_defect(rep) <= 5 * max(op.symmetrization_defect, floor)


@pytest.mark.parametrize("seed", range(5))
def test_perron_frobenius_for_connected_domains(seed):
    d = validate_domain(random_simple_domain(seed, K_range=(2, 5), p_cell=0.9))
    T = build_simple(d).T
    if not np.all(T[np.triu_indices(d.K)] > 0):
        pytest.skip("domain is not a single irreducible block")
    rep = spectrum(build_simple(d), vectors=True)
    lam = rep.eigenvalues
    pos = np.sort(lam[lam > 0])[::-1]
    assert pos.size == 1 or pos[0] - pos[1] > 1e-12  # simple top eigenvalue
    v = rep.eigenvectors[:, int(np.argmax(lam))]
    v = v / v[np.argmax(np.abs(v))]
    assert np.all(v.real > -1e-12)


# ---------------------------------------------------------------- traces

def test_diamond_traces(diamond_simple):
    op = build_simple(diamond_simple)
    assert float(trace_power(op, 1)) == pytest.approx(1 / (8 * np.pi ** 2), rel=1e-14)
    t4 = trace_power(op, 2)
    assert t4.eigen == pytest.approx(1 / (128 * np.pi ** 4), rel=1e-14)
    assert t4.matrix == pytest.approx(1 / (128 * np.pi ** 4), rel=1e-14)
    assert abs(trace_of_power(op, 3).eigen) < 1e-12


def test_eigen_sum_equals_frobenius(triangle):
    tp = trace_power(build_flat_massless(triangle, 256), 1)
    assert tp.eigen == pytest.approx(tp.matrix, rel=1e-10)


def test_odd_traces_vanish(triangle):
    rep = spectrum(build_flat_massless(triangle, 128))
    lam = np.max(np.abs(rep.eigenvalues))
    for q in (0, 1, 2):
        t = trace_of_power(build_flat_massless(triangle, 128), 2 * q + 1)
        assert abs(t.eigen) <= max(len(rep.eigenvalues) * rep.pairing_defect * lam ** (2 * q), 1e-15)


def test_theta_coefficients():
    assert theta_coefficient(1) == pytest.approx(1 / (4 * np.pi ** 2))
    assert theta_coefficient(2) == pytest.approx(1 / (32 * np.pi ** 4))


def test_theta_mc_on_diamond(diamond):
    q1 = trace_theta_mc(diamond, 1, 20000, seed=1)
    assert q1.value == pytest.approx(0.5 / (4 * np.pi ** 2), rel=1e-13)
    q2 = trace_theta_mc(diamond, 2, 20000, seed=1)
    assert q2.value == pytest.approx(1 / (128 * np.pi ** 4), rel=1e-13)


def test_theta_mc_triangle_volume(triangle):
    est = trace_theta_mc(triangle, 1, 400_000, seed=3)
    assert abs(est.value - 0.25 / (4 * np.pi ** 2)) <= 3 * est.stderr


def test_theta_mc_is_reproducible(triangle):
    a = trace_theta_mc(triangle, 2, 50_000, seed=11)
    b = trace_theta_mc(triangle, 2, 50_000, seed=11)
    c = trace_theta_mc(triangle, 2, 50_000, seed=12)
    assert a == b and a.value != c.value


def test_unit_conformal_equals_flat(triangle):
    c = validate_domain(ConformalDomain(triangle, parse_expression("1")))
    assert trace_theta_mc(c, 2, 50_000, seed=2).value == trace_theta_mc(triangle, 2, 50_000, seed=2).value


def test_zero_acceptance():
    sliver = validate_domain(GraphDomain(1.0, [(0, 0), (0.5, 1e-12), (1, 0)], [(0, 0), (1, 0)]))
    with pytest.raises(ZeroAcceptance):
        trace_theta_mc(sliver, 1, 16, seed=0)


def test_s4_curvature_flat_case(diamond):
    c = validate_domain(ConformalDomain(diamond, parse_expression("1")))
    a = trace_s4_curvature(c, 30_000, seed=4)
    b = trace_theta_mc(c, 2, 30_000, seed=4)
    assert a.value == pytest.approx(b.value, rel=1e-14)


def test_s4_curvature_matches_matrix(smooth_conformal):
    est = trace_s4_curvature(smooth_conformal, 400_000, seed=1)
    # matrix value of tr S^4 at n = 512, computed once and frozen
    assert abs(est.value - 1.853063e-4) <= 3 * est.stderr + 1e-8
    mat = trace_power(build_conformal(smooth_conformal, 256), 2).eigen
    assert mat == pytest.approx(1.853063e-4, rel=1e-3)


def test_causal_region_is_half(diamond):
    c = validate_domain(ConformalDomain(diamond, parse_expression("1")))
    full = trace_s4_curvature(c, 200_000, seed=5, region="theta_rectangle")
    causal = trace_s4_curvature(c, 200_000, seed=5, region="causal_only")
    assert causal.value == pytest.approx(0.5 * full.value, rel=0.01)


def test_s4_candidates_on_diamond(diamond):
    cands = trace_s4_candidates(diamond, 200_000, seed=6)
    exact = 1 / (128 * np.pi ** 4)
    assert cands["theta_full"].value == pytest.approx(exact, rel=1e-12)
    # the causal-pair forms miss the exact value by large factors
    assert cands["causal_1_over_8pi4"].value == pytest.approx(2 * exact, rel=0.02)
    assert cands["causal_1_over_8pi2"].value == pytest.approx(2 * np.pi ** 2 * exact, rel=0.02)


# ---------------------------------------------------------------- massive MC

def test_massless_limit_of_massive_mc(triangle):
    est = trace_s2_massive_mc(triangle, 0.0, 10_000, seed=1)
    assert est.value == pytest.approx(0.25 / (4 * np.pi ** 2), rel=1e-14)


def test_small_mass_residual_is_quartic(diamond):
    ratios = []
    for m in (0.05, 0.1, 0.2):
        est = trace_s2_massive_mc(diamond, m, 200_000, seed=5)
        ratios.append(est.residual_after_m2 / m ** 4)
        assert est.residual_after_m2 == pytest.approx(est.m4_term, rel=0.01)
    np.testing.assert_allclose(ratios, ratios[0], rtol=0.02)
    assert ratios[0] == pytest.approx(-4.385e-5, rel=0.03)  # negative quartic coefficient


def test_massive_mc_matches_kernel(diamond):
    est = trace_s2_massive_mc(diamond, 1.0, 400_000, seed=5)
    kern = spectrum(build_massive_kernel(diamond, 1.0, 128)).traces[2]
    assert abs(est.value - kern) <= max(3 * est.stderr, 0.02 * est.value)
    assert est.value == pytest.approx(0.0142044, rel=2e-3)


# ---------------------------------------------------------------- positive trace and index

def test_positive_trace_examples(diamond_simple):
    assert positive_trace(build_simple(diamond_simple)) == pytest.approx(1 / FOUR_PI, rel=1e-15)
    w = np.array([0.2, 0.7, 0.4])
    d = validate_domain(SimpleDomain(np.concatenate([[0], np.cumsum(w)]), np.eye(3, dtype=bool)))
    assert positive_trace(build_simple(d)) == pytest.approx(w.sum() / FOUR_PI, rel=1e-14)
    assert positive_trace(np.zeros((4, 4))) == 0.0


def test_positive_trace_equals_nuclear_norm():
    d = staircase()
    op = build_simple(d)
    nuclear = np.sum(np.linalg.svd(op.T, compute_uv=False)) / (2 * np.pi * np.sqrt(2))
    assert positive_trace(op) == pytest.approx(nuclear, rel=1e-12)


def test_chiral_index_examples(diamond_simple):
    assert chiral_index(build_simple(diamond_simple)) == 0
    assert chiral_index(np.array([[1.0, 1.0], [0.0, 0.0]])) == 0
    assert chiral_index(np.random.default_rng(0).normal(size=(5, 5))) == 0
    assert chiral_index(np.ones((2, 3))) == 2 - 1  # rank one: kernel 2, cokernel 1


def test_flat_operator_index(triangle):
    assert chiral_index(build_flat_massless(triangle, 64)) == 0


# ---------------------------------------------------------------- decay bound

def test_decay_constants(triangle, diamond):
    c, tv = decay_constant(triangle, 0.0)
    assert tv == {"plus": 4.0, "minus": 0.0}
    assert c == 17.0
    c, tv = decay_constant(diamond, 1.0)
    assert c == 2 * 33.0


def test_decay_bound_holds(triangle, diamond):
    for d in (triangle, diamond):
        assert decay_bound_report(spectrum(build_flat_massless(d, 256)), d, 0.0).holds
    rep = spectrum(build_massive_kernel(diamond, 1.0, 96))
    assert decay_bound_report(rep, diamond, 1.0).holds


def test_image_total_variation_is_uniform_in_n(triangle):
    values = []
    for n in (128, 256, 512):
        op = build_flat_massless(triangle, n)
        x = op.x
        phi = np.concatenate([np.sin(np.pi * x), np.cos(np.pi * x)]) + 0j
        values.append(image_total_variation(op, phi))
    assert max(values) / min(values) < 1.1
