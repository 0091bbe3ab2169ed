import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perturbseries import make_instance
from perturbseries.errors import DegenerateGapError
from perturbseries.series import (
    N_ENUM_MAX,
    composition_count,
    compositions,
    delta,
    eigenvalue_coefficients,
    projection_coefficients,
    series_coefficient_eigenvalue,
    series_coefficient_projection,
)
from perturbseries.spectral import eigenprojector, reduced_resolvent

from conftest import random_model_matrix, random_symmetric

# -- weighted norms --------------------------------------------------------------


def test_delta_two_by_two(two_by_two):
    rep = delta(two_by_two, 1)
    assert rep.delta == pytest.approx(0.1, abs=1e-12)
    assert rep.delta_prime == pytest.approx(0.1, abs=1e-12)
    assert rep.norm_rr == 0.0 and rep.norm_pp == 0.0
    assert rep.norm_rp == pytest.approx(0.1, abs=1e-12)
    assert rep.cross_norm == pytest.approx(0.1, abs=1e-12)


def test_delta_zero_perturbation():
    inst = make_instance(np.diag([3.0, 2.0, 1.0]), np.zeros((3, 3)))
    rep = delta(inst, 2)
    assert rep.delta == 0.0 and rep.delta_prime == 0.0


def test_delta_of_aligned_rank_one_perturbation(rng):
    A = random_model_matrix(rng, 6)
    inst0 = make_instance(A, np.zeros((6, 6)))
    j, c = 3, -0.37
    P = eigenprojector(inst0.base, j)
    inst = make_instance(inst0.base, c * P)
    rep = delta(inst, j)
    assert rep.norm_rr == pytest.approx(0.0, abs=1e-12)
    assert rep.norm_rp == pytest.approx(0.0, abs=1e-12)
    assert rep.norm_pp == pytest.approx(abs(c) / rep.gap, rel=1e-12)
    assert rep.delta == pytest.approx(abs(c) / rep.gap, rel=1e-12)


def test_delta_report_serializes_plain_floats(two_by_two):
    d = delta(two_by_two, 1).as_dict()
    assert all(type(v) in (int, float) for v in d.values())


def test_degenerate_gap_raises():
    inst = make_instance(np.diag([1.0, 1.0]), np.zeros((2, 2)))
    with pytest.raises(DegenerateGapError):
        delta(inst, 1)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), d=st.integers(2, 9), scale=st.floats(1e-3, 10.0))
def test_delta_structure_property(seed, d, scale):
    rng = np.random.default_rng(seed)
    inst = make_instance(random_model_matrix(rng, d), random_symmetric(rng, d, scale))
    j = int(rng.integers(1, d + 1))
    rep = delta(inst, j)
    tol = 1e-12 * max(1.0, rep.delta)
    assert rep.delta_prime <= rep.delta + tol
    assert rep.delta <= 2 * rep.delta_prime + tol
    assert rep.delta <= np.linalg.norm(inst.E, 2) / rep.gap + tol


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), t=st.floats(-5.0, 5.0).filter(lambda x: abs(x) > 1e-3))
def test_scale_equivariance_property(seed, t):
    rng = np.random.default_rng(seed)
    inst = make_instance(random_model_matrix(rng, 6), random_symmetric(rng, 6, 0.1))
    j = int(rng.integers(1, 7))
    a, b = delta(inst, j), delta(inst.scaled(t), j)
    assert b.delta == pytest.approx(abs(t) * a.delta, rel=1e-12)
    assert b.delta_prime == pytest.approx(abs(t) * a.delta_prime, rel=1e-12)
    Pa = projection_coefficients(inst, j, 4)
    Pb = projection_coefficients(inst.scaled(t), j, 4)
    la = eigenvalue_coefficients(inst, j, 4)
    lb = eigenvalue_coefficients(inst.scaled(t), j, 4)
    for n in range(5):
        scale = np.linalg.norm(Pb[n]) + 1e-300
        assert np.linalg.norm(Pb[n] - t ** n * Pa[n]) <= 1e-12 * scale
        if n >= 1:
            assert abs(lb[n] - t ** n * la[n]) <= 1e-12 * max(abs(lb[n]), abs(t) ** n * 1e-3)


# -- compositions -------------------------------------------------------------------


@pytest.mark.parametrize("n", range(0, 6))
def test_composition_count_matches_enumeration(n):
    comps = list(compositions(n + 1, n))
    assert len(comps) == composition_count(n + 1, n)
    assert len(set(comps)) == len(comps)
    assert all(sum(c) == n and len(c) == n + 1 for c in comps)


def test_composition_count_at_order_two_is_six():
    assert composition_count(3, 2) == 6


# -- projector coefficients ---------------------------------------------------------


def test_projector_coefficients_two_by_two(two_by_two):
    P = projection_coefficients(two_by_two, 1, 2)
    assert np.allclose(P[0], np.diag([1.0, 0.0]), atol=1e-15)
    assert np.allclose(P[1], [[0.0, 0.1], [0.1, 0.0]], atol=1e-12)
    assert np.allclose(P[2], np.diag([-0.01, 0.01]), atol=1e-12)


@pytest.mark.parametrize("method", ["generating", "enumerate"])
def test_zeroth_order_is_projector(rng, method):
    inst = make_instance(random_model_matrix(rng, 5), random_symmetric(rng, 5))
    assert np.allclose(series_coefficient_projection(inst, 2, 0, method=method),
                       eigenprojector(inst.base, 2), atol=1e-14)


def test_first_order_matches_classical_formula(rng):
    inst = make_instance(random_model_matrix(rng, 7), random_symmetric(rng, 7))
    for j in (1, 3, 7):
        P = eigenprojector(inst.base, j)
        R = reduced_resolvent(inst.base, j)
        classical = -R @ inst.E @ P - P @ inst.E @ R
        assert np.allclose(series_coefficient_projection(inst, j, 1), classical, atol=1e-12)


def test_paths_agree_relative(rng):
    for _ in range(3):
        inst = make_instance(random_model_matrix(rng, 8), random_symmetric(rng, 8, 0.05))
        j = int(rng.integers(1, 9))
        A = projection_coefficients(inst, j, N_ENUM_MAX, method="enumerate")
        B = projection_coefficients(inst, j, N_ENUM_MAX, method="generating")
        for n in range(N_ENUM_MAX + 1):
            assert np.linalg.norm(A[n] - B[n]) <= 1e-12 * np.linalg.norm(B[n])


def test_coefficients_symmetric_and_traceless(rng):
    inst = make_instance(random_model_matrix(rng, 9), random_symmetric(rng, 9, 0.1))
    C = projection_coefficients(inst, 4, 10)
    for n, c in enumerate(C):
        assert np.abs(c - c.T).max() <= 1e-12 * max(1.0, np.abs(c).max())
        if n >= 1:
            assert abs(np.trace(c)) <= 1e-12 * max(1.0, np.linalg.norm(c))


def test_enumeration_limit():
    inst = make_instance(np.diag([2.0, 1.0]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        series_coefficient_projection(inst, 1, N_ENUM_MAX + 1, method="enumerate")


def test_eigen_basis_output_consistent(rng):
    inst = make_instance(random_model_matrix(rng, 5), random_symmetric(rng, 5))
    A = projection_coefficients(inst, 2, 3, basis="eigen")
    B = projection_coefficients(inst, 2, 3, basis="original")
    for a, b in zip(A, B):
        assert np.allclose(inst.base.from_eigenbasis(a), b, atol=1e-13)


# -- eigenvalue coefficients --------------------------------------------------------


def test_eigenvalue_coefficients_two_by_two(two_by_two):
    lam = eigenvalue_coefficients(two_by_two, 1, 6)
    assert lam[0] == 2.0
    assert lam[1] == pytest.approx(0.0, abs=1e-12)
    assert lam[2] == pytest.approx(0.01, abs=1e-12)
    assert lam[3] == pytest.approx(0.0, abs=1e-12)
    assert lam[4] == pytest.approx(-1e-4, abs=1e-12)
    assert lam[6] == pytest.approx(2e-6, abs=1e-12)
    assert series_coefficient_eigenvalue(two_by_two, 1, 2, method="enumerate") == \
        pytest.approx(0.01, abs=1e-12)


def test_low_order_eigenvalue_identities(rng):
    """The pseudo-inverse reading gives the textbook first two orders."""
    inst = make_instance(random_model_matrix(rng, 8), random_symmetric(rng, 8))
    for j in (1, 5, 8):
        u = inst.base.vector(j)
        P = eigenprojector(inst.base, j)
        R = reduced_resolvent(inst.base, j)
        lam = eigenvalue_coefficients(inst, j, 2)
        assert lam[1] == pytest.approx(u @ inst.E @ u, abs=1e-12)
        assert lam[2] == pytest.approx(-np.trace(P @ inst.E @ R @ inst.E @ P), abs=1e-12)


def test_eigenvalue_series_matches_taylor_expansion_of_exact(rng):
    inst = make_instance(random_model_matrix(rng, 6), random_symmetric(rng, 6, 0.01))
    j = 3
    lam = eigenvalue_coefficients(inst, j, 12)
    for t in (0.3, 1.0):
        exact = np.sort(np.linalg.eigvalsh(inst.base.matrix + t * inst.E))[::-1][j - 1]
        series = sum(lam[n] * t ** n for n in range(13))
        assert series == pytest.approx(exact, abs=1e-12)


def test_eigenvalue_paths_agree_on_cancellation_free_scale(rng):
    inst = make_instance(random_model_matrix(rng, 8), random_symmetric(rng, 8, 0.05))
    a = eigenvalue_coefficients(inst, 2, 7, method="enumerate")
    b = eigenvalue_coefficients(inst, 2, 7, method="generating")
    P = projection_coefficients(inst, 2, 7, basis="eigen")
    shift = inst.base.eigenvalues - inst.base.eigenvalues[1]
    for n in range(1, 8):
        scale = abs(np.sum(P[n - 1] * inst.E_eig)) + abs(np.dot(np.diagonal(P[n]), shift))
        assert abs(a[n] - b[n]) <= 1e-12 * scale
