import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bpbpp.certificates import CorrectionRejected
from bpbpp.corrections import (BetaStructure, beta_perturbation,
                               ck_operator_correction, eta_functional,
                               eta_policy, functional_point_correction,
                               hilbert_domain_correction, hilbert_rotation,
                               largest_xi, lp_rank_one_assembly,
                               rank_one_boost, _eta_hilbert_internal)
from bpbpp.operators import make_operator, op_norm
from bpbpp.spaces import lp_space, scalar_space
from bpbpp.verify import verify_certificate

L2_2 = lp_space(2, 2)
L4_2 = lp_space(4, 2)
LI_2 = lp_space(math.inf, 2)


# -- eta policies ---------------------------------------------------------

def test_eta_euclidean_analytic():
    e = eta_functional(L2_2, 0.5)
    assert e.eta == pytest.approx(0.125, abs=1e-15)
    assert e.provenance == "analytic-BPB"
    # monotone extension toward eps -> 2: any threshold < 2 is accepted
    e2 = eta_functional(lp_space(2, 3), 1.999)
    assert 0 < e2.eta < 2.0


def test_eta_lp_derived_and_retrials():
    entry = eta_functional(L4_2, 0.5, seed=0)
    assert entry.provenance == "derived-from-modulus"
    assert entry.eta > 0
    rng = np.random.default_rng(12)
    # the tabulated threshold must survive a mass retrial
    failures = 0
    for _ in range(10_000):
        x0 = L4_2.sphere_point(rng)
        J = L4_2.support_functionals(x0).vertices[0]
        g = rng.standard_normal(2)
        g /= L4_2.dual_norm(g)
        t = 1.0
        f = None
        for _ in range(50):
            cand = (1.0 - t) * J + t * g
            cand /= L4_2.dual_norm(cand)
            if float(cand @ x0) > 1.0 - entry.eta:
                f = cand
                break
            t *= 0.5
        if f is None:
            continue
        _, cert = functional_point_correction(L4_2, f, x0, 0.5, seed=0)
        failures += not cert.holds()
    assert failures == 0


def test_eta_policy_table():
    pol = eta_policy(L2_2, [0.1, 0.5, 1.0])
    assert pol.validate()
    assert pol.entry(0.5).eta == pytest.approx(0.125)


def test_eta_rejects_kinked_spaces():
    for space in (lp_space(1, 2), LI_2):
        with pytest.raises(CorrectionRejected) as exc:
            eta_functional(space, 0.5)
        assert exc.value.diagnostics["defect"] > 1.9


# -- functional correction ------------------------------------------------

def test_functional_correction_euclidean():
    x0 = np.array([1.0, 0.0])
    x0s = np.array([math.cos(0.2), math.sin(0.2)])
    x1, cert = functional_point_correction(L2_2, x0s, x0, 0.25)
    assert np.allclose(x1, [1.0, 0.0])
    assert cert.distance == pytest.approx(2 * math.sin(0.1), abs=1e-12)
    assert cert.distance < 0.25
    assert cert.holds()
    ok, rep = verify_certificate(cert.to_payload())
    assert ok, rep


def test_functional_correction_fixed_point():
    x0 = np.array([1.0, 0.0])
    x1, cert = functional_point_correction(L2_2, x0, x0, 0.1)
    assert cert.distance == 0.0
    assert np.allclose(x1, x0)


def test_functional_correction_l4():
    x0 = np.array([1.0, 1.0]) / 2 ** 0.25
    J = L4_2.support_functionals(x0).vertices[0]
    pert = J + 0.01 * np.array([1.0, -1.0])
    dn = L4_2.dual_norm(pert)
    scale = max(dn, 1.0)
    x1, cert = functional_point_correction(L4_2, pert / scale, x0, 0.2)
    assert np.allclose(x1, J, atol=1e-12)
    # distance equals the dual norm of the explicit difference
    assert cert.distance == pytest.approx(L4_2.dual_norm(J - pert / scale),
                                          abs=1e-12)
    assert cert.distance < 0.2


def test_functional_correction_rejections():
    with pytest.raises(CorrectionRejected):  # kinked domain refuses outright
        functional_point_correction(lp_space(1, 2), np.array([1.0, -1.0]),
                                    np.array([0.9, 0.1]), 1.0)
    with pytest.raises(CorrectionRejected):  # gap too large for this eps
        functional_point_correction(L2_2, np.array([0.0, 1.0]),
                                    np.array([1.0, 0.0]), 0.5)
    with pytest.raises(CorrectionRejected):  # functional outside the dual ball
        functional_point_correction(L2_2, np.array([2.0, 0.0]),
                                    np.array([1.0, 0.0]), 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.1, 0.25, 0.5, 1.0]))
def test_functional_correction_property(seed, eps):
    rng = np.random.default_rng(seed)
    space = [L2_2, lp_space(2, 3), L4_2][seed % 3]
    eta = eta_functional(space, eps).eta
    x0 = space.sphere_point(rng)
    J = space.support_functionals(x0).vertices[0]
    g = rng.standard_normal(space.dim)
    g /= space.dual_norm(g)
    t = 1.0
    f = J
    for _ in range(60):
        cand = (1.0 - t) * J + t * g
        cand /= space.dual_norm(cand)
        if float(cand @ x0) > 1.0 - eta:
            f = cand
            break
        t *= 0.5
    x1, cert = functional_point_correction(space, f, x0, eps)
    assert cert.holds()
    # monotone budget: the same certificate is valid at any larger eps
    assert cert.distance < eps <= 2.0


# -- beta structures and perturbation -------------------------------------

def test_beta_structure_validation():
    beta = BetaStructure.canonical_linf(LI_2)
    assert beta.validate(samples=1000)
    skew = BetaStructure.skewed_linf(lp_space(math.inf, 3), 0.3)
    assert skew.rho == 0.3
    assert skew.validate(samples=1000)
    bad = BetaStructure(LI_2, np.eye(2), 0.5 * np.eye(2), 0.0)
    assert not bad.validate(samples=10)
    from bpbpp.spaces import SpaceError
    with pytest.raises(SpaceError):
        BetaStructure(LI_2, np.ones((1, 1)), np.eye(2), 0.0)
    with pytest.raises(SpaceError):
        BetaStructure(LI_2, np.eye(2), np.eye(2), 1.0)


def test_xi_selection():
    # rho = 0, eps = 1: the inequality 1 < (5/4)(1 - xi) forces xi < 1/5
    xi = largest_xi(1.0, 0.0)
    assert xi < 0.2
    assert xi == pytest.approx(0.2, abs=1e-6)
    assert (1 + 0.25) * (1 - xi) - 1 > 0
    with pytest.raises(CorrectionRejected):
        largest_xi(0.5, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(0.01, 1.9))
def test_xi_feasibility_grid(rho, eps):
    xi = largest_xi(eps, rho)
    assert 0 < xi < eps / 4
    assert 1 + rho * (eps / 4 + xi) < (1 + eps / 4) * (1 - xi)


def test_beta_perturbation_worked_example():
    T = make_operator([[0.95, 0.0], [0.0, 1.0]], L2_2, LI_2)
    beta = BetaStructure.canonical_linf(LI_2)
    U, cert = beta_perturbation(T, np.array([1.0, 0.0]), 0.4, beta)
    assert np.allclose(U.matrix, [[1.0, 0.0], [0.0, 1.0 / 1.1]], atol=1e-12)
    assert cert.distance == pytest.approx(1.0 - 1.0 / 1.1, abs=1e-9)
    assert cert.attainment_residual <= 1e-8
    assert cert.unit_norm_residual <= 1e-9
    ok, rep = verify_certificate(cert.to_payload())
    assert ok, rep


def test_beta_pure_boost_when_attaining():
    # already attaining with y*(T x0) = 1: the formula is a pure boost
    T = make_operator([[1.0, 0.0], [0.0, 0.5]], L2_2, LI_2)
    beta = BetaStructure.canonical_linf(LI_2)
    eps = 0.4
    U, cert = beta_perturbation(T, np.array([1.0, 0.0]), eps, beta)
    boost = (T.matrix + (eps / 4) * np.outer([1.0, 0.0], [1.0, 0.0]))
    assert np.allclose(U.matrix, boost / (1 + eps / 4), atol=1e-12)
    assert LI_2.norm(U.matrix @ [1.0, 0.0]) == pytest.approx(1.0, abs=1e-12)


def test_beta_perturbation_rejects_kinked_domain():
    T = make_operator(np.eye(2) * 0.99, lp_space(1, 2), LI_2)
    with pytest.raises(CorrectionRejected):
        beta_perturbation(T, np.array([1.0, 0.0]), 0.5,
                          BetaStructure.canonical_linf(LI_2))


def test_ck_operator_reduces_to_functional():
    sc = scalar_space()
    f = np.array([[math.cos(0.2), math.sin(0.2)]])
    T = make_operator(f, L2_2, sc)
    U, cert = ck_operator_correction(T, np.array([1.0, 0.0]), 0.25)
    assert np.allclose(U.matrix, [[1.0, 0.0]], atol=1e-12)
    x1, fcert = functional_point_correction(L2_2, f[0], np.array([1.0, 0.0]),
                                            0.25)
    assert np.allclose(U.matrix[0], x1)


def test_ck_operator_l4_batch():
    rng = np.random.default_rng(21)
    cod = lp_space(math.inf, 3)
    trials = 1000
    ok = 0
    for _ in range(trials):
        x0 = L4_2.sphere_point(rng)
        J = L4_2.support_functionals(x0).vertices[0]
        rows = 0.9 * rng.uniform(0.2, 1.0, size=3)
        M = np.outer(rng.permutation([1.0, 0.6, 0.5]), J) * rows[:, None]
        M[0] = J * (1 - 1e-3)
        T = make_operator(M, L4_2, cod)
        nv = op_norm(T).value
        T = make_operator(M / max(nv, 1.0), L4_2, cod)
        _, cert = ck_operator_correction(T, x0, 0.5, seed=0)
        ok += cert.holds()
    assert ok == trials


# -- rotations ------------------------------------------------------------

def test_rotation_quarter_turn():
    R = hilbert_rotation(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    norm_gap = np.linalg.svd(R.matrix - np.eye(2))[1][0]
    assert norm_gap == pytest.approx(math.sqrt(2), abs=1e-12)


def test_rotation_identity_and_antipodal():
    h = np.array([1.0, 0.0])
    R = hilbert_rotation(h, h)
    assert np.allclose(R.matrix, np.eye(2))
    R2 = hilbert_rotation(h, -h)
    assert np.allclose(R2.matrix @ h, -h)
    assert np.linalg.svd(R2.matrix - np.eye(2))[1][0] == pytest.approx(2.0)
    with pytest.raises(CorrectionRejected):
        hilbert_rotation(np.array([1.0]), np.array([-1.0]))


def test_rotation_fixes_complement():
    h0 = np.array([1.0, 0.0, 0.0])
    h1 = np.array([math.cos(math.pi / 3), math.sin(math.pi / 3), 0.0])
    R = hilbert_rotation(h0, h1)
    gap = np.linalg.svd(R.matrix - np.eye(3))[1][0]
    assert gap == pytest.approx(2 * math.sin(math.pi / 6), abs=1e-12)
    assert gap == pytest.approx(np.linalg.norm(h0 - h1), abs=1e-12)
    assert np.allclose(R.matrix @ [0, 0, 1], [0, 0, 1], atol=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_rotation_properties(n, seed):
    rng = np.random.default_rng(seed)
    h0 = lp_space(2, n).sphere_point(rng)
    h1 = lp_space(2, n).sphere_point(rng)
    R = hilbert_rotation(h0, h1).matrix
    assert np.abs(R.T @ R - np.eye(n)).max() <= 1e-12
    assert np.abs(R @ h0 - h1).max() <= 1e-12
    assert abs(np.linalg.svd(R - np.eye(n))[1][0]
               - np.linalg.norm(h0 - h1)) <= 1e-10


# -- rank-one boost and Hilbert-domain correction --------------------------

def test_rank_one_boost_attaining_fixed_point():
    T = make_operator(np.diag([1.0, 0.5]), L2_2, L2_2)
    St, ht, diag = rank_one_boost(T, np.array([1.0, 0.0]), 0.3)
    assert np.allclose(np.abs(ht), [1.0, 0.0], atol=1e-12)
    assert op_norm(St).value == pytest.approx(1.0, abs=1e-12)
    assert not diag["heuristic"]


def test_rank_one_boost_bound_arithmetic():
    T = make_operator(np.diag([1.0, 0.9]), L2_2, L2_2)
    h0 = np.array([math.cos(0.3), math.sin(0.3)])
    img = np.linalg.norm(T.matrix @ h0)
    assert img == pytest.approx(math.sqrt(math.cos(0.3) ** 2
                                          + 0.81 * math.sin(0.3) ** 2), abs=1e-15)
    St, ht, diag = rank_one_boost(T, h0, 0.3)
    lower = 1.0 - (1.0 - img) / 0.3
    assert diag["alignment_guarantee"] == pytest.approx(lower, abs=1e-12)
    assert float(ht @ h0) >= lower - 1e-12
    assert np.linalg.norm(ht - h0) <= math.sqrt(2 * (1 - lower)) + 1e-12
    d = op_norm(make_operator(St.matrix - T.matrix, L2_2, L2_2)).value
    assert d <= 2 * 0.3 + (1 - img) + 1e-9


def test_rank_one_boost_c_one_valid():
    T = make_operator(np.diag([1.0, 0.9]), L2_2, L2_2)
    h0 = np.array([math.cos(0.3), math.sin(0.3)])
    St, ht, diag = rank_one_boost(T, h0, 1.0)
    img = np.linalg.norm(T.matrix @ h0)
    assert diag["distance_guarantee"] == pytest.approx(2.0 + (1 - img))
    with pytest.raises(CorrectionRejected):
        rank_one_boost(T, h0, 1.5)


def test_hilbert_domain_correction_examples():
    T = make_operator(np.diag([1.0, 0.5]), L2_2, L2_2)
    S, cert = hilbert_domain_correction(T, np.array([1.0, 0.0]), 0.5)
    assert cert.distance <= 1e-9  # already attaining

    T2 = make_operator(np.diag([1.0, 0.9]), L2_2, L2_2)
    h0 = np.array([math.cos(0.3), math.sin(0.3)])
    S2, cert2 = hilbert_domain_correction(T2, h0, 0.6)
    assert cert2.holds()
    assert L2_2.norm(S2.matrix @ h0) == pytest.approx(1.0, abs=1e-9)
    assert cert2.distance < 0.6
    ok, rep = verify_certificate(cert2.to_payload())
    assert ok, rep


def test_hilbert_correction_cross_path_with_beta():
    # codomain linf: both the Euclidean-domain and the beta route certify
    rng = np.random.default_rng(4)
    x0 = L2_2.sphere_point(rng)
    M = np.outer([1.0, 0.4], x0)
    M[0] *= (1 - 1e-4)
    T = make_operator(M, L2_2, LI_2)
    nv = op_norm(T).value
    T = make_operator(M / max(nv, 1.0), L2_2, LI_2)
    _, cert_h = hilbert_domain_correction(T, x0, 0.5)
    _, cert_b = beta_perturbation(T, x0, 0.5, BetaStructure.canonical_linf(LI_2))
    assert cert_h.holds() and cert_b.holds()


def test_lp_rank_one_assembly():
    rng = np.random.default_rng(7)
    M = rng.standard_normal((2, 2))
    T = make_operator(M, L4_2, L2_2)
    T = make_operator(M / op_norm(T).value, L4_2, L2_2)
    w = op_norm(T).witness.point
    x0 = w + 0.02 * rng.standard_normal(2)
    x0 = x0 / L4_2.norm(x0)
    U, cert = lp_rank_one_assembly(T, x0, 0.5)
    assert cert.holds()
    ok, rep = verify_certificate(cert.to_payload())
    assert ok, rep


def test_lp_assembly_rejects_flat_direction():
    # at the axis point of an l4 sphere any attaining operator must kill the
    # tangent column, so a far-from-rank-one input cannot be corrected
    T = make_operator(np.array([[0.98, 0.0], [0.0, 0.9]]), L4_2, L2_2)
    with pytest.raises(CorrectionRejected):
        lp_rank_one_assembly(T, np.array([1.0, 0.0]), 0.05)


def test_monotone_budget_reuse():
    # a certificate earned at eps stays valid at every looser eps'
    T = make_operator([[0.95, 0.0], [0.0, 1.0]], L2_2, LI_2)
    beta = BetaStructure.canonical_linf(LI_2)
    U, cert = beta_perturbation(T, np.array([1.0, 0.0]), 0.4, beta)
    for loose in (0.5, 0.8, 1.5):
        assert cert.distance < loose
        U2, cert2 = beta_perturbation(T, np.array([1.0, 0.0]), loose, beta)
        assert cert2.holds()


def test_eta_hilbert_internal_policy():
    for eps in (0.25, 0.5, 1.0):
        g = _eta_hilbert_internal(eps)
        assert 0 < g < 1
        c = min(max(math.sqrt(g * 0.9), 1e-6), eps / 8.0)
        assert 2 * c + g * 0.9 < eps / 2  # boost budget
        assert math.sqrt(2 * g * 0.9 / c) < eps / 2 + 1e-9  # point budget
