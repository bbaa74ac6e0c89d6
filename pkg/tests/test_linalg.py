import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmlab import linalg as la
from jmlab.errors import DimensionError, ValidationError
from jmlab.randomize import random_hermitian, random_state

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


def test_pauli_commutators():
    assert np.allclose(la.commutator(la.SIGMA_X, la.SIGMA_Y), 2j * la.SIGMA_Z)
    assert np.allclose(la.commutator(la.SIGMA_Z, la.SIGMA_X), 2j * la.SIGMA_Y)


def test_expectation_keeps_imaginary_part():
    # <0|[sx, sy]|0> = 2i
    assert la.expectation(la.commutator(la.SIGMA_X, la.SIGMA_Y), la.KET0) == pytest.approx(2j)


def test_real_expectation_rejects_anti_hermitian():
    with pytest.raises(ValidationError):
        la.real_expectation(1j * la.SIGMA_Z, la.KET0)


def test_tensor_first_factor_is_slow_index():
    out = la.tensor(np.diag([1.0, 2.0]), np.diag([1.0, 10.0]))
    assert np.allclose(np.diag(out), [1, 10, 2, 20])


def test_partial_mean_matches_explicit_sum(rng):
    dh, dk = 3, 2
    X = rng.standard_normal((dh * dk, dh * dk)) + 1j * rng.standard_normal((dh * dk, dh * dk))
    xi = random_state(dk, rng)
    expected = np.zeros((dh, dh), dtype=complex)
    for i in range(dh):
        for j in range(dh):
            expected[i, j] = np.vdot(np.kron(np.eye(dh)[i], xi), X @ np.kron(np.eye(dh)[j], xi))
    assert np.allclose(la.partial_mean(X, xi), expected)


def test_partial_trace_of_product():
    a, b = np.diag([1.0, 2.0]), np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(la.partial_trace_k(np.kron(a, b), 2), 5.0 * a)


def test_partial_mean_dimension_mismatch():
    with pytest.raises(DimensionError):
        la.partial_mean(np.eye(5), la.KET0)


def test_as_state_rejects_unnormalized():
    with pytest.raises(ValidationError):
        la.as_state([1.0, 1.0])


def test_spectral_merges_degenerate_eigenvalues():
    dec = la.spectral(np.diag([2.0, 1.0, 2.0 + 1e-12]))
    assert len(dec) == 2
    assert np.allclose(dec.eigenvalues, [1.0, 2.0])
    assert np.allclose(dec.projectors[1], np.diag([1.0, 0.0, 1.0]))


def test_spectral_diagonal_input_is_exact():
    dec = la.spectral(np.diag([3.0, -1.0]))
    assert dec.eigenvalues.tolist() == [-1.0, 3.0]


def test_psd_sqrt_of_projector_has_no_roundoff_leak(rng):
    H = random_hermitian(4, rng)
    P = la.spectral(H).projectors[0]
    R = la.psd_sqrt(P)
    assert np.max(np.abs(R - P)) < 1e-13


def test_psd_sqrt_rejects_negative():
    with pytest.raises(ValidationError):
        la.psd_sqrt(-np.eye(2))


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_spectral_reconstructs_operator(d, seed):
    H = random_hermitian(d, np.random.default_rng(seed))
    dec = la.spectral(H)
    assert np.allclose(dec.reconstruct(), H, atol=1e-10)
    assert np.allclose(sum(dec.projectors), np.eye(d), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(dims, seeds)
def test_std_dev_nonnegative_and_bounded(d, seed):
    rng = np.random.default_rng(seed)
    H, psi = random_hermitian(d, rng), random_state(d, rng)
    s = la.std_dev(H, psi)
    assert 0.0 <= s <= la.opnorm(H) + 1e-12


@settings(max_examples=30, deadline=None)
@given(dims, seeds)
def test_matrix_encoding_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    assert np.array_equal(la.decode_matrix(la.encode_matrix(M)), M)


def test_decode_rejects_ragged():
    with pytest.raises(ValueError):
        la.decode_matrix([[[1, 0]], [[1, 0], [0, 0]]])
