import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from castlekit import matperturb as mp
from castlekit.errors import FieldDimUnsupported, Singular

from conftest import random_matrix


def oracle_kappa(a):
    s = sla.svdvals(a)
    return s[0] / s[-1]


def oracle_kappa_e(a):
    m = np.abs(sla.eigvals(a))
    return m.max() / m.min()


def test_product_order():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(mp.product([a, b]), b @ a)


def test_norms_on_known_matrices():
    a = np.diag([3.0, -0.5])
    assert mp.op_norm(a) == pytest.approx(3.0)
    assert mp.spectral_radius(a) == pytest.approx(3.0)
    assert mp.kappa(a) == pytest.approx(6.0)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]]) * 2
    assert mp.kappa(rot) == pytest.approx(1.0)
    assert mp.kappa_e(np.array([[2.0, 100.0], [0.0, 2.0]])) == pytest.approx(1.0)


def test_singular_matrix_rejected():
    with pytest.raises(Singular):
        mp.kappa(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(Singular):
        mp.perturb_singular([np.zeros((2, 2))], 0.1)


def test_as_matrix_validation():
    with pytest.raises(ValueError):
        mp.as_matrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        mp.as_matrix([[np.nan, 0], [0, 1]])
    with pytest.raises(ValueError):
        mp.as_matrix([[1j, 0], [0, 1]], "real")


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]), st.sampled_from(["real", "complex"]))
@settings(max_examples=80, deadline=None)
def test_condition_numbers_agree_with_scipy(seed, d, field):
    rng = np.random.default_rng(seed)
    a, b = random_matrix(rng, d, field), random_matrix(rng, d, field)
    assert mp.kappa(a) == pytest.approx(oracle_kappa(a), rel=1e-9)
    assert mp.kappa_e(a) == pytest.approx(oracle_kappa_e(a), rel=1e-7)
    assert mp.kappa(a @ b) <= mp.kappa(a) * mp.kappa(b) * (1 + 1e-9)
    assert mp.kappa(a) >= mp.kappa_e(a) * (1 - 1e-9)
    assert mp.op_norm(a) >= mp.spectral_radius(a) * (1 - 1e-9)
    assert mp.kappa(np.linalg.inv(a)) == pytest.approx(mp.kappa(a), rel=1e-7)
    assert mp.kappa_e(np.linalg.matrix_power(a, 3)) == pytest.approx(mp.kappa_e(a) ** 3, rel=1e-6)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 3), st.booleans())
@settings(max_examples=80, deadline=None)
def test_frame_moves_span_to_last_coordinates(seed, d, nu, cplx):
    nu = min(nu, d)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((d, nu))
    if cplx:
        v = v + 1j * rng.standard_normal((d, nu))
    r = mp.frame_to_last(v)
    assert np.allclose(r.conj().T @ r, np.eye(d), atol=1e-12)
    assert np.allclose((r @ v)[: d - nu], 0, atol=1e-10)
    if not cplx:
        assert not np.iscomplexobj(r)


def test_frame_of_coordinate_vector_is_identity():
    v = np.zeros((3, 1))
    v[2] = 1.0
    assert np.allclose(mp.frame_to_last(v), np.eye(3))


def test_singular_example_stretches_top_direction():
    res = mp.perturb_singular([np.diag([3.0, 1.0])], 0.5)
    assert np.allclose(res.perturbed[0], np.diag([4.5, 1.0]))
    assert res.achieved == pytest.approx(4.5)


def test_eigen_example_on_identity():
    res = mp.perturb_eigen([np.eye(2, dtype=complex)], 0.3)
    assert res.achieved == pytest.approx(1.3)
    assert max(res.relative_errors) == pytest.approx(0.3)


def test_eigen_needs_three_real_dimensions():
    with pytest.raises(FieldDimUnsupported):
        mp.perturb_eigen([np.eye(2)], 0.1)
    res = mp.perturb_eigen([np.eye(3)], 0.1)
    assert not np.iscomplexobj(res.perturbed[0])


def test_zero_epsilon_is_identity_map():
    rng = np.random.default_rng(4)
    mats = [random_matrix(rng, 3, "real") for _ in range(4)]
    for lemma in (mp.perturb_singular, mp.perturb_eigen):
        res = lemma(mats, 0.0)
        for a, b in zip(mats, res.perturbed):
            assert np.array_equal(a, b)


def test_complex_pair_uses_two_dimensional_subspace():
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.5]])
    res = mp.perturb_eigen([rot, rot], 0.2)
    assert res.nu == 1  # the real eigenvalue 0.25 of the product is smallest
    small = np.array([[0.0, -0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 2.0]])
    res = mp.perturb_eigen([small], 0.2)
    assert res.nu == 2  # eigenvalues +-0.5i: a real 2-plane
    assert not np.iscomplexobj(res.perturbed[0])
    assert res.ok


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]), st.sampled_from(["real", "complex"]),
       st.integers(1, 8), st.sampled_from([0.1, 0.5]), st.booleans())
@settings(max_examples=120, deadline=None)
def test_lemmas_meet_bounds_under_independent_check(seed, d, field, ell, eps, eigen):
    if eigen and field == "real" and d < 3:
        d = 3
    rng = np.random.default_rng(seed)
    mats = [random_matrix(rng, d, field) for _ in range(ell)]
    res = (mp.perturb_eigen if eigen else mp.perturb_singular)(mats, eps)
    for a, b in zip(mats, res.perturbed):
        assert sla.norm(b - a, 2) <= eps * sla.norm(a, 2) * (1 + 1e-9)
    prod = np.eye(d)
    for b in res.perturbed:
        prod = b @ prod
    measure = oracle_kappa_e(prod) if eigen else oracle_kappa(prod)
    assert measure >= (1 + eps) ** ell * (1 - 1e-9)
