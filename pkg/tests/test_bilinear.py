import math

import numpy as np
import pytest

from bpbpp.bilinear import (BilinearMap, FormField, beta_bilinear_correction,
                            bilinear_norm, bilinear_point_correction_xh,
                            ck_bilinear_correction, form_from_operator,
                            make_form, op_from_bilinear, retract_to_ball)
from bpbpp.certificates import CorrectionRejected
from bpbpp.corrections import BetaStructure
from bpbpp.operators import op_norm
from bpbpp.spaces import lp_space
from bpbpp.verify import verify_certificate

import oracles

L2_2 = lp_space(2, 2)
L1_2 = lp_space(1, 2)
L4_2 = lp_space(4, 2)
LI_2 = lp_space(math.inf, 2)


# -- norms ----------------------------------------------------------------

def test_bilinear_norm_spectral():
    B = make_form([[1.0, 0.0], [0.0, 0.5]], L2_2, L2_2)
    res = bilinear_norm(B)
    assert res.exact and res.value == pytest.approx(1.0, abs=1e-12)
    x, y = res.witness
    assert abs(B.scalar(x, y)) == pytest.approx(1.0, abs=1e-9)


def test_bilinear_norm_permutation():
    B = make_form([[0.0, 1.0], [1.0, 0.0]], L2_2, L2_2)
    assert bilinear_norm(B).value == pytest.approx(1.0, abs=1e-12)


def test_bilinear_norm_l1_extreme_rule():
    B = make_form([[0.3, -0.8], [0.1, 0.5]], L1_2, L1_2)
    res = bilinear_norm(B)
    assert res.exact
    assert res.value == pytest.approx(0.8, abs=1e-12)
    x, y = res.witness
    assert abs(B.scalar(x, y)) == pytest.approx(0.8, abs=1e-12)
    grid = oracles.bilinear_norm_grid(L1_2, L1_2, B.tensor[0], step=2e-3)
    assert res.value == pytest.approx(grid, abs=5e-3)


def test_bilinear_norm_alternating_agrees_with_grid():
    rng = np.random.default_rng(2)
    for _ in range(5):
        A = rng.standard_normal((2, 2))
        B = make_form(A, L4_2, lp_space(3, 2))
        res = bilinear_norm(B)
        grid = oracles.bilinear_norm_grid(L4_2, lp_space(3, 2), A, step=1e-3)
        assert res.value == pytest.approx(grid, abs=5e-3)
        assert res.value >= grid - 1e-9  # witnesses are feasible


def test_form_field_norm_law():
    rng = np.random.default_rng(3)
    forms = [make_form(rng.standard_normal((2, 2)), L2_2, L2_2)
             for _ in range(4)]
    fld = FormField([f"t{i}" for i in range(4)], forms)
    stacked = fld.to_bilinear()
    res = bilinear_norm(stacked)
    assert res.value == pytest.approx(
        max(bilinear_norm(f).value for f in forms), abs=1e-9)


# -- operator identification ----------------------------------------------

def test_op_from_bilinear_examples():
    B = make_form([[1.0, 0.0], [0.0, 0.5]], L2_2, L2_2)
    T = op_from_bilinear(B)
    assert np.allclose(T.matrix, [[1.0, 0.0], [0.0, 0.5]])
    assert T.codomain.p == 2

    B2 = make_form([[0.4, -0.2], [1.0, 0.3]], L2_2, L1_2)
    T2 = op_from_bilinear(B2)
    assert T2.codomain.p == math.inf
    assert op_norm(T2).value == pytest.approx(bilinear_norm(B2).value, abs=1e-9)

    zero = make_form(np.zeros((2, 2)), L2_2, L2_2)
    assert op_norm(op_from_bilinear(zero)).value == 0.0


def test_identification_isometry_random():
    rng = np.random.default_rng(5)
    spaces = [L2_2, L4_2, lp_space(3, 3), lp_space(2, 4), L1_2, LI_2]
    count = 0
    while count < 200:
        X = spaces[count % len(spaces)]
        Y = spaces[(count // len(spaces)) % len(spaces)]
        A = rng.standard_normal((X.dim, Y.dim))
        B = make_form(A, X, Y)
        T = op_from_bilinear(B)
        assert bilinear_norm(B).value == pytest.approx(op_norm(T).value,
                                                       abs=2e-6)
        count += 1


def test_form_round_trip():
    B = make_form([[0.2, 0.7], [0.1, -0.4]], L4_2, L2_2)
    again = form_from_operator(op_from_bilinear(B), L2_2)
    assert np.allclose(again.tensor, B.tensor)


# -- retraction ------------------------------------------------------------

def test_retraction():
    B = make_form([[1.0, 0.0], [0.0, 0.5]], L2_2, L2_2)
    big = B.scaled(2.0)
    r = retract_to_ball(big)
    assert bilinear_norm(r).value == pytest.approx(1.0, abs=1e-12)
    assert bilinear_norm(r.minus(big)).value == pytest.approx(1.0, abs=1e-12)
    small = B.scaled(0.7)
    assert retract_to_ball(small) is small
    onplus = B.scaled(1.3)
    assert bilinear_norm(retract_to_ball(onplus).minus(onplus)).value == \
        pytest.approx(0.3, abs=1e-12)


def test_retraction_idempotent():
    rng = np.random.default_rng(8)
    for _ in range(10):
        B = make_form(rng.standard_normal((2, 2)), L2_2, L2_2)
        r1 = retract_to_ball(B)
        r2 = retract_to_ball(r1)
        assert np.array_equal(r1.tensor, r2.tensor)


# -- X x H correction -------------------------------------------------------

def test_xh_correction_already_attaining():
    B = make_form([[1.0, 0.0], [0.0, 0.5]], L2_2, L2_2)
    A, cert = bilinear_point_correction_xh(B, [1, 0], [1, 0], 0.3)
    assert cert.distance <= 1e-9
    assert np.allclose(A.tensor, B.tensor, atol=1e-9)


def test_xh_correction_near_diagonal():
    B = make_form([[0.995, 0.0], [0.0, 0.9]], L2_2, L2_2)
    A, cert = bilinear_point_correction_xh(B, [1, 0], [1, 0], 0.5)
    assert cert.holds()
    assert cert.distance < 1.5
    assert abs(A.scalar([1, 0], [1, 0])) == pytest.approx(1.0, abs=1e-9)
    ok, rep = verify_certificate(cert.to_payload())
    assert ok, rep


def test_xh_correction_l4_retrials():
    rng = np.random.default_rng(13)
    good = 0
    for _ in range(100):
        M = rng.standard_normal((2, 2))
        B = make_form(M, L4_2, L2_2)
        B = B.scaled(1.0 / bilinear_norm(B).value)
        wx, wy = bilinear_norm(B).witness
        x0 = wx + rng.uniform(0.005, 0.03) * rng.standard_normal(2)
        x0 = x0 / L4_2.norm(x0)
        if abs(B.scalar(x0, wy)) < 1 - 1e-3:
            continue
        A, cert = bilinear_point_correction_xh(B, x0, wy, 0.5, seed=0)
        assert cert.holds()
        assert cert.distance < 3 * 0.5
        good += 1
    assert good >= 60


def test_xh_rejects_wrong_factors():
    B = make_form(np.eye(2), L2_2, L1_2)
    with pytest.raises(CorrectionRejected):
        bilinear_point_correction_xh(B, [1, 0], [1, 0], 0.3)
    B2 = make_form(np.eye(2) * 0.99, L1_2, L2_2)
    with pytest.raises(CorrectionRejected):
        bilinear_point_correction_xh(B2, [1, 0], [1, 0], 0.3)


# -- property-beta codomain -------------------------------------------------

def test_beta_bilinear_hand_assembled():
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = 0.97
    t[1, 1, 1] = 0.5
    B = BilinearMap(t, L2_2, L2_2, LI_2)
    beta = BetaStructure.canonical_linf(LI_2)
    eps = 0.5
    C, cert = beta_bilinear_correction(B, [1, 0], [1, 0], eps, beta)
    assert cert.holds()
    assert cert.distance < 2 * eps
    # the corrected top slice is the boosted unit form on (x1, y1)
    assert np.allclose(C.tensor[0], [[1.0, 0.0], [0.0, 0.0]], atol=1e-9)
    assert np.allclose(C.tensor[1], t[1] / (1 + eps / 4), atol=1e-12)
    assert LI_2.norm(C.value([1, 0], [1, 0])) == pytest.approx(1.0, abs=1e-9)
    ok, rep = verify_certificate(cert.to_payload())
    assert ok, rep


def test_beta_bilinear_scalar_codomain_reduction():
    # a one-coordinate sup codomain is the scalar case up to embedding
    one = lp_space(math.inf, 1)
    beta = BetaStructure(one, np.ones((1, 1)), np.ones((1, 1)), 0.0)
    t = np.array([[[0.999, 0.0], [0.0, 0.4]]])
    B = BilinearMap(t, L2_2, L2_2, one)
    C, cert = beta_bilinear_correction(B, [1, 0], [1, 0], 0.5, beta)
    assert cert.holds()
    assert abs(C.value([1, 0], [1, 0])[0]) == pytest.approx(1.0, abs=1e-9)


def test_beta_bilinear_skewed_structure():
    rng = np.random.default_rng(17)
    beta = BetaStructure.skewed_linf(LI_2, 0.3)
    ok = 0
    for _ in range(25):
        x0 = L2_2.sphere_point(rng)
        y0 = L2_2.sphere_point(rng)
        t = np.zeros((2, 2, 2))
        t[0] = np.outer(x0, y0) * (1 - 1e-4)
        t[1] = 0.4 * rng.standard_normal((2, 2))
        B = BilinearMap(t, L2_2, L2_2, LI_2)
        nv = bilinear_norm(B).value
        B = B.scaled(1.0 / max(nv, 1.0))
        try:
            C, cert = beta_bilinear_correction(B, x0, y0, 0.5, beta, seed=0)
            ok += cert.holds()
        except CorrectionRejected:
            pass
    assert ok >= 20


# -- fields of forms ---------------------------------------------------------

def test_ck_field_worked_example():
    phi1 = make_form([[0.98, 0.0], [0.0, 0.0]], L2_2, L2_2)
    phi2 = make_form([[0.0, 0.0], [0.0, 0.5]], L2_2, L2_2)
    fld = FormField(["t1", "t2"], [phi1, phi2])
    A, cert = ck_bilinear_correction(fld, [1, 0], [1, 0], 0.3)
    assert cert.distance == pytest.approx(0.02, abs=1e-10)
    assert cert.diagnostics["peak_index"] == 0
    assert np.allclose(A.forms[0].tensor[0], [[1.0, 0.0], [0.0, 0.0]],
                       atol=1e-12)
    # second slice picks up the same shift and needs no retraction
    assert np.allclose(A.forms[1].tensor[0],
                       [[0.02, 0.0], [0.0, 0.5]], atol=1e-10)
    assert abs(A.forms[0].scalar([1, 0], [1, 0])) == pytest.approx(1.0,
                                                                   abs=1e-12)
    ok, rep = verify_certificate(cert.to_payload())
    assert ok, rep


def test_ck_field_single_point_reduction():
    phi = make_form([[0.995, 0.0], [0.0, 0.4]], L2_2, L2_2)
    fld = FormField(["t"], [phi])
    A, cert = ck_bilinear_correction(fld, [1, 0], [1, 0], 0.4)
    direct, dcert = bilinear_point_correction_xh(phi, [1, 0], [1, 0], 0.4 / 6.0)
    assert np.allclose(A.forms[0].tensor, direct.tensor, atol=1e-9)
    assert cert.holds() and dcert.holds()


def test_ck_field_random_batches():
    rng = np.random.default_rng(23)
    ok = 0
    for trial in range(30):
        m = int(rng.integers(2, 11))
        X = lp_space(2, int(rng.integers(2, 4)))
        Y = lp_space(2, int(rng.integers(2, 4)))
        x0 = X.sphere_point(rng)
        y0 = Y.sphere_point(rng)
        forms = []
        for k in range(m):
            M = rng.standard_normal((X.dim, Y.dim))
            f = make_form(M, X, Y)
            forms.append(f.scaled(rng.uniform(0.3, 0.9) / bilinear_norm(f).value))
        peak = make_form(np.outer(x0, y0), X, Y)
        forms[int(rng.integers(0, m))] = peak.scaled(
            (1 - 1e-5) / bilinear_norm(peak).value)
        fld = FormField([f"t{k}" for k in range(m)], forms)
        A, cert = ck_bilinear_correction(fld, x0, y0, 0.4, seed=0)
        assert cert.holds()
        assert cert.distance < 0.4
        ok += 1
    assert ok == 30
