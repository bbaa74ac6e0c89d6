import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jmlab import gallery, linalg as la, relations
from jmlab.process import naimark_dilate
from jmlab.randomize import random_commuting_pair, random_hermitian, random_povm, random_state

seeds = st.integers(0, 2**32 - 1)


def test_robertson_for_paulis(qubit_anchor):
    rec = relations.eval_robertson(*qubit_anchor)
    assert rec.lhs == pytest.approx(1.0) and rec.rhs == pytest.approx(1.0) and rec.holds


def test_guess_model_report(qubit_anchor):
    A, B, psi = qubit_anchor
    rep = relations.full_report(gallery.guess_model(A, B), A, B, psi)
    assert rep.universal_hold
    # uvur: 0 * 1 + 0 + |<[A, -B]>|/2 = 1
    assert rep["uvur"].terms["comm_A_nB"] == pytest.approx(1.0)
    assert rep["noiseless_bound"].applicable and rep["noiseless_bound"].slack == pytest.approx(0.0, abs=1e-12)
    assert not rep["heisenberg_product"].applicable
    assert rep.heisenberg_violated
    # output spread: dx = 1, dy = 0 while |<[A,B]>| = 2
    assert rep["output_spread"].lhs == pytest.approx(0.0) and not rep["output_spread"].applicable


def test_noiseless_bound_not_applicable_without_precision(qubit_anchor):
    A, B, psi = qubit_anchor
    rep = relations.full_report(gallery.smeared_model(A, 0.3), A, B, psi)
    assert not rep["noiseless_bound"].applicable and rep["noiseless_bound"].status == "not_applicable"


def test_unbiased_qubit_satisfies_heisenberg(qubit_anchor):
    A, B, psi = qubit_anchor
    eta = 1 / np.sqrt(2)
    rep = relations.full_report(gallery.unbiased_qubit_model((1, 0, 0), (0, 1, 0), eta), A, B, psi)
    # eps(A) = eps(B) = (1/eta^2 - 1)^(1/2) = 1, saturating the product bound
    assert rep["heisenberg_product"].applicable
    assert rep["heisenberg_product"].lhs == pytest.approx(1.0, abs=1e-12)
    assert rep["output_spread"].applicable and rep["output_spread"].lhs == pytest.approx(2.0, abs=1e-12)


def test_epr_model_relations():
    d = 3
    pair = gallery.DiscretePair(d)
    anc = gallery.epr_difference_sum_model(d, gallery.sharpened_probe(d, 0.5))
    psi = la.normalize(np.arange(1, d + 1))
    rep = relations.full_report(anc, pair.X, pair.P, psi)
    assert all(rep[n].slack >= -1e-9 for n in relations.UNIVERSAL)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 3), seeds)
def test_universal_relations_and_chain(d, nx, ny, seed):
    rng = np.random.default_rng(seed)
    p = random_povm(d, nx, ny, rng, zero_fraction=0.2)
    A, B, psi = random_hermitian(d, rng), random_hermitian(d, rng), random_state(d, rng)
    rep = relations.full_report(naimark_dilate(p, seed=rng), A, B, psi)
    for n in relations.UNIVERSAL:
        assert rep[n].slack >= -1e-9, n
    assert rep["gur"].lhs >= rep["uvur"].lhs - 1e-9 >= rep["uvur_noise_std"].lhs - 2e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), seeds)
def test_product_model_of_commuting_pair_is_noiseless(d, seed):
    rng = np.random.default_rng(seed)
    A, B = random_commuting_pair(d, rng)
    rep = relations.full_report(gallery.product_model(A, B), A, B, random_state(d, rng))
    assert rep.noise_A.rms_noise <= 1e-9 and rep.noise_B.rms_noise <= 1e-9
    assert rep["robertson"].rhs == pytest.approx(0.0, abs=1e-9)


def test_csv_rows(qubit_anchor):
    A, B, psi = qubit_anchor
    rep = relations.full_report(gallery.guess_model(A, B), A, B, psi)
    text = relations.rows_to_csv(relations.report_rows(rep, "anchor"))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["name"] for r in rows] == [r.name for r in rep.records]
    assert float(rows[1]["lhs"]) == rep.records[1].lhs


def test_report_dict_is_json_ready(qubit_anchor):
    import json
    A, B, psi = qubit_anchor
    d = relations.full_report(gallery.guess_model(A, B), A, B, psi).to_dict()
    assert json.loads(json.dumps(d))["universal_hold"] is True
