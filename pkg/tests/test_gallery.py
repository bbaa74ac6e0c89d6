import numpy as np
import pytest

from jmlab import gallery, linalg as la, metrics
from jmlab.errors import ValidationError
from jmlab.povm import validate
from jmlab.process import commutation_defect, povm_from_ancilla


def test_dft_is_unitary_and_conjugates_clock():
    d = 5
    pair = gallery.DiscretePair(d)
    assert la.is_unitary(pair.F, 1e-12)
    assert np.allclose(np.linalg.eigvalsh(pair.P), np.arange(d))


def test_truncated_ccr_residual_lives_on_top_level():
    osc = gallery.TruncatedOscillator(6, hbar=2.0)
    R = osc.ccr_residual()
    expected = np.zeros((6, 6), dtype=complex)
    expected[5, 5] = -1j * 2.0 * 6
    assert np.allclose(R, expected)


def test_truncation_estimate_matches_residual_norm():
    osc = gallery.TruncatedOscillator(10)
    psi = osc.coherent(1.2)
    assert osc.truncation_estimate(psi) == pytest.approx(np.linalg.norm(osc.ccr_residual() @ psi), rel=1e-12)


def test_ground_state_moments():
    osc = gallery.TruncatedOscillator(12, hbar=1.0)
    g = osc.fock(0)
    assert la.std_dev(osc.Q, g) ** 2 == pytest.approx(0.5)
    assert la.std_dev(osc.P, g) ** 2 == pytest.approx(0.5)


def test_coherent_state_mean_position():
    osc = gallery.TruncatedOscillator(40, hbar=1.0)
    # <Q> = sqrt(2 hbar) Re(alpha)
    assert la.real_expectation(osc.Q, osc.coherent(0.8 + 0.3j)) == pytest.approx(np.sqrt(2) * 0.8, abs=1e-10)


def test_squeezed_vacuum_reduces_momentum_spread():
    osc = gallery.TruncatedOscillator(40)
    s = osc.squeezed_vacuum(0.5)
    # P-squeezed: dP^2 = e^{-2r}/2, dQ^2 = e^{2r}/2
    assert la.std_dev(osc.P, s) ** 2 == pytest.approx(np.exp(-1.0) / 2, rel=1e-6)
    assert la.std_dev(osc.Q, s) ** 2 == pytest.approx(np.exp(1.0) / 2, rel=1e-6)


def test_unbiased_qubit_model_positivity_limit():
    with pytest.raises(ValueError):
        gallery.unbiased_qubit_model((1, 0, 0), (0, 1, 0), 0.8)
    assert validate(gallery.unbiased_qubit_model((1, 0, 0), (0, 1, 0), 1 / np.sqrt(2))).valid


def test_independent_noise_model_rejects_noncommuting_targets():
    with pytest.raises(ValidationError):
        gallery.independent_noise_model(la.SIGMA_X, la.SIGMA_Y, la.SIGMA_Z, la.SIGMA_Z, la.KET0)


def test_product_model_requires_commuting():
    with pytest.raises(ValidationError):
        gallery.product_model(la.SIGMA_X, la.SIGMA_Z)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_epr_pair_commutes_and_sharper_probe_reduces_noise(d):
    pair = gallery.DiscretePair(d)
    psi = la.normalize(np.arange(1, d + 1))
    noise = []
    for width in (2.0, 1.0, 0.5, 0.25):
        anc = gallery.epr_difference_sum_model(d, gallery.sharpened_probe(d, width))
        assert commutation_defect(anc.C, anc.D) <= 1e-9
        noise.append(metrics.rms_noise(povm_from_ancilla(anc), pair.X, psi, "A", anc))
    assert all(b < a for a, b in zip(noise, noise[1:]))


def test_ccr_demo_at_default_cutoff():
    demo = gallery.truncated_ccr_demo()
    assert demo.N == 16 and demo.all_ok
    for r in demo.results:
        assert r.eps_total_momentum == 0.0
        assert r.gur.slack >= -r.truncation_estimate


def test_ccr_demo_rejects_heavy_tails():
    osc = gallery.TruncatedOscillator(8)
    with pytest.raises(ValueError):
        gallery.truncated_ccr_demo(8, states={"hot": (osc.fock(6), osc.fock(0))})


def test_ccr_demo_rejects_small_cutoff():
    with pytest.raises(ValueError):
        gallery.truncated_ccr_demo(4)
