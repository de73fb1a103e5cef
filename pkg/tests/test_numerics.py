import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dikernel.exceptions import ContractError, PSDError, RankDeficiencyError
from dikernel.numerics import center_cols, pinv_psd, solve_ridge, sym_eig


def random_psd(rng, n, rank):
    A = rng.normal(size=(n, rank))
    return A @ A.T


def test_sym_eig_identity():
    f = sym_eig(np.eye(3))
    np.testing.assert_allclose(f.values, [1, 1, 1])
    np.testing.assert_allclose(f.vectors.T @ f.vectors, np.eye(3), atol=1e-12)


def test_sym_eig_diagonal():
    f = sym_eig(np.diag([1.0, 4.0]))
    np.testing.assert_allclose(f.values, [4, 1])
    np.testing.assert_allclose(np.abs(f.vectors), [[0, 1], [1, 0]], atol=1e-15)


def test_sym_eig_reconstruction(rng):
    A = rng.normal(size=(5, 5))
    M = A + A.T
    f = sym_eig(M)
    assert np.linalg.norm(f.reconstruct() - M) / np.linalg.norm(M) < 1e-10
    assert np.abs(f.vectors.T @ f.vectors - np.eye(5)).max() < 1e-10
    assert np.all(np.diff(f.values) <= 0)


@pytest.mark.parametrize("M", [np.ones((2, 3)), np.array([[1.0, 2.0], [0.0, 1.0]])])
def test_sym_eig_rejects_bad_input(M):
    with pytest.raises(ContractError):
        sym_eig(M)


def test_pinv_diagonal():
    np.testing.assert_allclose(pinv_psd(np.diag([2.0, 0.0]), 1e-12), np.diag([0.5, 0.0]))


def test_pinv_zero():
    np.testing.assert_array_equal(pinv_psd(np.zeros((3, 3))), np.zeros((3, 3)))


def test_pinv_penrose_conditions(rng):
    M = random_psd(rng, 5, 3)
    P = pinv_psd(M)
    scale = np.linalg.norm(M)
    assert np.linalg.norm(M @ P @ M - M) / scale < 1e-8
    assert np.linalg.norm(P @ M @ P - P) / np.linalg.norm(P) < 1e-8
    assert np.linalg.norm((M @ P).T - M @ P) < 1e-8
    assert np.linalg.norm((P @ M).T - P @ M) < 1e-8


def test_pinv_rejects_indefinite():
    with pytest.raises(PSDError):
        pinv_psd(np.diag([1.0, -0.5]))


def test_pinv_is_symmetric_psd(rng):
    P = pinv_psd(random_psd(rng, 6, 4))
    np.testing.assert_allclose(P, P.T, atol=1e-12)
    assert np.linalg.eigvalsh(P).min() > -1e-10


def test_solve_ridge_examples():
    np.testing.assert_allclose(solve_ridge(np.eye(2), 1.0, np.eye(2)), 0.5 * np.eye(2))
    np.testing.assert_allclose(solve_ridge(np.diag([3.0, 1.0]), 0.0, np.eye(2)), np.diag([1 / 3, 1.0]))


def test_solve_ridge_residual(rng):
    M = random_psd(rng, 6, 6)
    B = rng.normal(size=(6, 3))
    X = solve_ridge(M, 0.3, B)
    assert np.linalg.norm((M + 0.3 * np.eye(6)) @ X - B) / np.linalg.norm(B) < 1e-10


def test_solve_ridge_rank_error():
    with pytest.raises(RankDeficiencyError):
        solve_ridge(np.zeros((2, 2)), 0.0, np.eye(2))
    # any positive rho regularizes
    np.testing.assert_allclose(solve_ridge(np.zeros((2, 2)), 2.0, np.eye(2)), 0.5 * np.eye(2))


def test_center_cols_examples(rng):
    np.testing.assert_array_equal(center_cols(np.array([[5.0], [2.0]])), np.zeros((2, 1)))
    np.testing.assert_allclose(center_cols(np.array([[1.0, 3.0]])), [[-1.0, 1.0]])
    assert np.abs(center_cols(rng.normal(size=(4, 7))).sum(axis=1)).max() < 1e-12


def test_center_cols_matches_explicit_projector(rng):
    M = rng.normal(size=(3, 6))
    C = np.eye(6) - 1 / 6
    np.testing.assert_allclose(center_cols(M), M @ C, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 5), elements=st.floats(-1e3, 1e3)))
def test_center_cols_idempotent(M):
    once = center_cols(M)
    np.testing.assert_allclose(center_cols(once), once, atol=1e-12 * max(1.0, np.abs(M).max()))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 10.0))
def test_solve_ridge_positive_rho_never_rank_error(seed, rho):
    rng = np.random.default_rng(seed)
    M = random_psd(rng, 4, int(rng.integers(0, 5)))
    X = solve_ridge(M, rho, np.eye(4))
    assert np.all(np.isfinite(X))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sym_eig_psd_values_nonnegative(seed):
    rng = np.random.default_rng(seed)
    f = sym_eig(random_psd(rng, 5, 3))
    assert np.all(np.diff(f.values) <= 0)
    assert f.values.min() >= -1e-10 * f.values.max()
