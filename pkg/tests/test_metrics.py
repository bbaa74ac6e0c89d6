import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmlab import gallery, linalg as la, metrics
from jmlab.errors import DimensionError, InconsistencyError
from jmlab.process import ancilla_from_process, naimark_dilate, povm_from_ancilla
from jmlab.randomize import random_hermitian, random_povm, random_state

etas = st.sampled_from([0.0, 0.05, 0.2, 0.5, 1.0])


def test_guess_model_noise(qubit_anchor):
    A, B, psi = qubit_anchor
    p = gallery.guess_model(A, B)
    assert metrics.rms_noise(p, A, psi, "A") == 0.0
    # B output is the constant 0: eps(B)^2 = <B^2> = 1
    assert metrics.rms_noise(p, B, psi, "B") == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(metrics.mean_noise_operator(p, B, "B"), -B)


@settings(max_examples=20, deadline=None)
@given(etas, st.integers(0, 2**32 - 1))
def test_smeared_sigma_z_closed_forms(eta, seed):
    # Pi(x) = (1 - eta) E(x) + eta I / 2 on sigma_z: eps^2 = 2 eta for every state,
    # n = -eta sigma_z, dx^2 = 1 - (1 - eta)^2 <sigma_z>^2
    A = la.SIGMA_Z
    psi = random_state(2, np.random.default_rng(seed))
    p = gallery.smeared_model(A, eta)
    z = la.real_expectation(A, psi)
    r = metrics.noise_report(p, A, psi, "A")
    assert r.rms_noise == pytest.approx(np.sqrt(2 * eta), abs=1e-12)
    assert np.allclose(r.mean_noise_op, -eta * A, atol=1e-14)
    assert r.mean_noise_value == pytest.approx(-eta * z, abs=1e-14)
    assert r.noise_std**2 == pytest.approx(2 * eta - eta**2 * z**2, abs=1e-12)
    assert r.output_std**2 == pytest.approx(1 - (1 - eta) ** 2 * z**2, abs=1e-12)
    assert r.unbiased == (eta == 0.0)


def test_unbiased_qubit_model_noise_is_state_independent(rng):
    eta = 0.6
    a, b = (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)
    p = gallery.unbiased_qubit_model(a, b, eta)
    A = gallery.bloch_observable(a)
    for _ in range(5):
        r = metrics.noise_report(p, A, random_state(2, rng), "A")
        # unbiased: eps^2 = <O2> - <A^2> = 1/eta^2 - 1
        assert r.rms_noise**2 == pytest.approx(1 / eta**2 - 1, abs=1e-12)
        assert r.unbiased and r.stat_independent and r.independent_offset == pytest.approx(0.0, abs=1e-15)


def test_biased_independent_offset():
    A, B = la.SIGMA_Z, np.diag([1.0, 2.0])
    anc = gallery.disjoint_noise_model(A, B, la.SIGMA_X, la.KET_PLUS, la.SIGMA_Z, la.KET_PLUS)
    p = povm_from_ancilla(anc)
    check = metrics.is_stat_independent(p, A, "A")
    # <+|sigma_x|+> = 1, so n_A = I
    assert check.ok and check.value == pytest.approx(1.0)
    assert not metrics.is_unbiased(p, A, "A").ok


def test_ancilla_route_agrees(rng):
    p = random_povm(3, 2, 2, rng)
    anc = ancilla_from_process(naimark_dilate(p, seed=rng))
    A, psi = random_hermitian(3, rng), random_state(3, rng)
    with_anc = metrics.noise_report(p, A, psi, "A", anc)
    without = metrics.noise_report(p, A, psi, "A")
    for f in metrics.NoiseReport.SCALARS:
        assert getattr(with_anc, f) == pytest.approx(getattr(without, f), abs=1e-12)


def test_mismatched_ancilla_is_detected(rng):
    p = random_povm(2, 2, 2, rng)
    other = ancilla_from_process(naimark_dilate(random_povm(2, 2, 2, rng), seed=0))
    with pytest.raises(InconsistencyError):
        metrics.noise_report(p, la.SIGMA_Z, la.KET_PLUS, "A", other)


def test_dimension_mismatch(qubit_anchor):
    with pytest.raises(DimensionError):
        metrics.rms_noise(gallery.guess_model(qubit_anchor[0]), np.eye(3), np.ones(3) / np.sqrt(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_noise_std_identity_and_bounds(d, seed):
    rng = np.random.default_rng(seed)
    p = random_povm(d, 3, 2, rng)
    A, psi = random_hermitian(d, rng), random_state(d, rng)
    r = metrics.noise_report(p, A, psi, "A")
    assert r.noise_std <= r.rms_noise + 1e-12
    assert r.noise_std**2 == pytest.approx(r.rms_noise**2 - r.mean_noise_value**2, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_factorization_defect_of_dependent_noise_can_be_nonzero(d, seed):
    # sanity of the checker: with the guess model on a random A the B noise is -B (x) I,
    # for which <X N> - <X><N> = -cov(X, B) generally differs from zero
    rng = np.random.default_rng(seed)
    A, B, X = (random_hermitian(d + 1, rng) for _ in range(3))
    psi = random_state(d + 1, rng)
    anc = ancilla_from_process(naimark_dilate(gallery.guess_model(A), seed=0))
    got = metrics.verify_independence_factorization(anc, B, X, psi, "B")
    cov = la.expectation(X @ B, psi) - la.expectation(X, psi) * la.expectation(B, psi)
    assert got == pytest.approx(abs(cov), abs=1e-10)
