import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bpbpp import spaces as sp
from bpbpp.spaces import (BoxBallSumBody, SpaceError, direct_sum, gauge_space,
                          lp_space, make_space, modulus_convexity,
                          modulus_smoothness, polyhedral_space,
                          smoothness_defect, weighted_lp_space)

import oracles


def kinds_pool():
    return [
        lp_space(1, 2), lp_space(2, 2), lp_space(2, 3), lp_space(4, 2),
        lp_space(math.inf, 2), lp_space(3, 3),
        weighted_lp_space(2, [1.0, 2.0]),
        polyhedral_space([[1, 0], [0, 1], [1, 1]]),
        gauge_space(BoxBallSumBody(2, 0.5, 0.5)),
        direct_sum([lp_space(2, 2), lp_space(1, 2)], "linf"),
        direct_sum([lp_space(2, 2), lp_space(2, 2)], "l1"),
    ]


# -- make_space ---------------------------------------------------------

def test_make_space_examples():
    l2 = make_space({"kind": "lp", "p": 2, "dim": 3})
    assert l2.norm([3, 4, 0]) == pytest.approx(5.0, abs=1e-12)
    li = make_space({"kind": "lp", "p": "inf", "dim": 2})
    assert li.norm([1, -0.3]) == pytest.approx(1.0, abs=1e-12)
    poly = make_space({"kind": "polyhedral", "dim": 2,
                       "generators": [[1, 0], [0, 1], [-1, 0], [0, -1]]})
    # dual generators of the cross shape give the max norm
    assert poly.norm([2, 3]) == pytest.approx(3.0, abs=1e-12)
    V = poly.ball_vertices()
    assert sorted(map(tuple, V)) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_make_space_rejects():
    with pytest.raises(SpaceError):
        make_space({"kind": "lp", "p": 0.5, "dim": 2})
    with pytest.raises(SpaceError):
        make_space({"kind": "nope"})
    with pytest.raises(SpaceError):
        make_space({"kind": "polyhedral", "dim": 2, "generators": [[1, 0]]})
    with pytest.raises(SpaceError):
        direct_sum([], "l1")
    with pytest.raises(SpaceError):
        make_space({"kind": "lp", "p": 2})


def test_descriptor_round_trip():
    for space in kinds_pool():
        again = make_space(space.to_descriptor())
        v = np.array([0.3, -1.2, 0.7, 0.1][: space.dim])
        assert again.norm(v) == pytest.approx(space.norm(v), abs=1e-12)


# -- norm oracle --------------------------------------------------------

def test_norm_examples():
    assert lp_space(1, 2).norm([0.9, 0.1]) == pytest.approx(1.0, abs=1e-12)
    ss = gauge_space(BoxBallSumBody(2, 0.5, 0.5))
    assert ss.norm([1, 0]) == pytest.approx(1.0, abs=1e-11)
    l4 = lp_space(4, 2)
    assert l4.norm([1, 1]) == pytest.approx(2 ** 0.25, abs=1e-12)
    # cross-check the closed form against the gauge bisection on the polar
    dual_twice = l4.dual().dual()
    assert dual_twice.norm([1, 1]) == pytest.approx(2 ** 0.25, abs=1e-12)


def test_gauge_bisection_matches_support_form():
    # strip the closed form off the body: dual norm must fall back to ascent
    body = BoxBallSumBody(2, 0.6, 0.4)

    class Opaque(sp.GaugeBody):
        dim = 2
        smooth = True

        def contains(self, v, tol=0.0):
            return body.contains(v, tol)

        def params(self):
            return {"family": "box-ball-sum", "boxRadius": 0.6,
                    "ballRadius": 0.4}

        def label(self):
            return "opaque"

    space = gauge_space(Opaque())
    ref = gauge_space(body)
    rng = np.random.default_rng(0)
    for _ in range(25):
        v = rng.standard_normal(2)
        assert space.norm(v) == pytest.approx(ref.norm(v), rel=1e-10)
        f = rng.standard_normal(2)
        assert space.dual_norm(f) == pytest.approx(ref.dual_norm(f), rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, len(kinds_pool()) - 1), st.integers(0, 2 ** 32 - 1))
def test_norm_axioms(idx, seed):
    space = kinds_pool()[idx]
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(space.dim)
    v = rng.standard_normal(space.dim)
    a = rng.standard_normal()
    assert space.norm(np.zeros(space.dim)) == 0.0
    assert space.norm(u) >= 0.0
    assert space.norm(a * u) == pytest.approx(abs(a) * space.norm(u), abs=1e-12,
                                              rel=1e-10)
    assert space.norm(u + v) <= space.norm(u) + space.norm(v) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, len(kinds_pool()) - 1), st.integers(0, 2 ** 32 - 1))
def test_gauge_consistency_and_duality(idx, seed):
    space = kinds_pool()[idx]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(space.dim)
    nv = space.norm(v)
    assert space.norm(v / nv) == pytest.approx(1.0, abs=1e-10)
    face = space.support_functionals(v)
    for f in face.vertices:
        assert space.dual_norm(f) == pytest.approx(1.0, abs=1e-10)
        assert float(f @ (v / nv)) == pytest.approx(1.0, abs=1e-10)


def test_dual_norm_examples():
    assert lp_space(2, 3).dual_norm([3, 4, 0]) == pytest.approx(5.0, abs=1e-12)
    assert lp_space(1, 2).dual_norm([1, -1]) == pytest.approx(1.0, abs=1e-12)
    l4 = lp_space(4, 2)
    f = np.array([2 ** -0.75, 2 ** -0.75])
    assert l4.dual_norm(f) == pytest.approx(1.0, abs=1e-10)
    # sup over a dense sphere grid can only fall below the dual norm
    D = oracles.circle_grid(1e-4)
    X = D / l4.norm_many(D)[:, None]
    grid = float(np.max(X @ f))
    assert grid == pytest.approx(1.0, abs=1e-6)
    assert grid <= l4.dual_norm(f) + 1e-12


def test_dual_norm_brute_force_small_dims():
    # a 1e-4 angle grid undershoots by O(step) at polygon corners, so the
    # check is one-sided tight and two-sided loose
    rng = np.random.default_rng(5)
    for space in (lp_space(1.5, 2), polyhedral_space([[1, 0], [0, 1], [1, 1]]),
                  weighted_lp_space(3, [0.5, 2.0])):
        for _ in range(5):
            f = rng.standard_normal(2)
            D = oracles.circle_grid(1e-4)
            X = D / space.norm_many(D)[:, None]
            grid = float(np.max(np.abs(X @ f)))
            dn = space.dual_norm(f)
            assert dn >= grid - 1e-10
            assert dn == pytest.approx(grid, abs=5e-4)


def test_holder_inequality_bulk():
    rng = np.random.default_rng(11)
    for space in (lp_space(1, 3), lp_space(2, 3), lp_space(4, 3),
                  lp_space(math.inf, 3)):
        V = rng.standard_normal((10_000, 3))
        F = rng.standard_normal((10_000, 3))
        lhs = np.abs(np.sum(V * F, axis=1))
        rhs = space.norm_many(V) * np.array([space.dual_norm(f) for f in F])
        assert np.all(lhs <= rhs + 1e-10)


# -- support functionals ------------------------------------------------

def test_support_examples():
    l2 = lp_space(2, 2)
    s = l2.support_functionals([0.6, 0.8])
    assert s.is_singleton
    assert np.allclose(s.vertices[0], [0.6, 0.8], atol=1e-12)

    linf = lp_space(math.inf, 2)
    s2 = linf.support_functionals([1, 1])
    assert not s2.is_singleton
    assert sorted(map(tuple, np.round(s2.vertices, 9))) == [(0, 1), (1, 0)]

    l1 = lp_space(1, 2)
    s3 = l1.support_functionals([1, 0])
    assert not s3.is_singleton
    assert sorted(map(tuple, np.round(s3.vertices, 9))) == [(1, -1), (1, 1)]


def test_support_rejects_zero():
    with pytest.raises(SpaceError):
        lp_space(2, 2).support_functionals([0, 0])
    with pytest.raises(SpaceError):
        lp_space(2, 2).norming_point([0, 0])


def test_lp_support_uniqueness():
    rng = np.random.default_rng(3)
    for p in (1.5, 2, 4, 7):
        space = lp_space(p, 3)
        for _ in range(20):
            x = rng.standard_normal(3)
            assert space.support_functionals(x).is_singleton


def test_norming_point_attains():
    rng = np.random.default_rng(9)
    for space in kinds_pool():
        for _ in range(10):
            f = rng.standard_normal(space.dim)
            x = space.norming_point(f)
            assert space.norm(x) == pytest.approx(1.0, abs=1e-9)
            assert float(f @ x) == pytest.approx(space.dual_norm(f), abs=1e-9)


# -- direct sums --------------------------------------------------------

def test_direct_sum_examples():
    s1 = direct_sum([sp.scalar_space(), sp.scalar_space()], "linf")
    assert s1.norm([1, -0.3]) == pytest.approx(1.0)
    s2 = direct_sum([lp_space(2, 2), lp_space(2, 2)], "l1")
    assert s2.norm([1, 0, 0, 1]) == pytest.approx(2.0, abs=1e-12)
    s3 = direct_sum([lp_space(2, 2), lp_space(1, 2)], "linf")
    assert s3.norm([0.6, 0.8, 0.3, 0.3]) == pytest.approx(1.0, abs=1e-12)


def test_direct_sum_duality():
    s = direct_sum([lp_space(2, 2), lp_space(1, 2)], "linf")
    d = s.dual()
    assert d.sum_kind == "l1"
    rng = np.random.default_rng(2)
    for _ in range(20):
        f = rng.standard_normal(4)
        # dual of the linf-sum is the l1-sum of the duals
        manual = np.linalg.norm(f[:2]) + np.max(np.abs(f[2:]))
        assert s.dual_norm(f) == pytest.approx(manual, abs=1e-12)
        assert d.norm(f) == pytest.approx(manual, abs=1e-12)


# -- moduli -------------------------------------------------------------

def test_modulus_convexity_euclidean():
    l2 = lp_space(2, 2)
    est = modulus_convexity(l2, 1.0)
    assert est.bound_kind == "exact"
    assert est.value == pytest.approx(1 - math.sqrt(3) / 2, abs=1e-12)
    assert modulus_convexity(l2, 2.0).value == pytest.approx(1.0, abs=1e-12)
    grid = oracles.convexity_grid(l2, 1.0, step=2e-3)
    assert est.value == pytest.approx(grid, abs=1e-3)


def test_modulus_convexity_flat():
    linf = lp_space(math.inf, 2)
    est = modulus_convexity(linf, 1.0, budget=400, seed=1)
    assert est.bound_kind == "upper"
    assert est.value <= 1e-9  # pair (1,1), (1,0) shares the right edge


def test_modulus_convexity_rejects():
    with pytest.raises(SpaceError):
        modulus_convexity(lp_space(2, 2), 0.0)
    with pytest.raises(SpaceError):
        modulus_convexity(lp_space(2, 2), 2.5)
    with pytest.raises(SpaceError):
        modulus_smoothness(lp_space(2, 2), 0.0)


def test_modulus_smoothness_values():
    l1 = lp_space(1, 2)
    est = modulus_smoothness(l1, 0.5, budget=300, seed=0)
    assert est.bound_kind == "lower"
    assert est.value == pytest.approx(0.5, abs=1e-12)  # witness (e1, e2)
    l2 = lp_space(2, 2)
    est2 = modulus_smoothness(l2, 0.5)
    assert est2.value == pytest.approx(math.sqrt(1.25) - 1, abs=1e-12)
    assert est2.value == pytest.approx(oracles.smoothness_grid(l2, 0.5), abs=1e-3)


def test_smoothness_vanishing_slope():
    # smooth norms: rho(tau)/tau -> 0 monotonically on a shrinking grid
    for space in (lp_space(2, 2), lp_space(4, 2)):
        r1 = modulus_smoothness(space, 0.1, budget=200, seed=0).value / 0.1
        r2 = modulus_smoothness(space, 0.01, budget=200, seed=0).value / 0.01
        assert r2 < r1
        assert r2 < 0.02


# -- smoothness defect ---------------------------------------------------

def test_defect_values():
    assert smoothness_defect(lp_space(2, 3)) == 0.0
    for p in (1.5, 4, 7):
        assert smoothness_defect(lp_space(p, 3)) == 0.0
    assert smoothness_defect(lp_space(1, 2)) == pytest.approx(2.0, abs=1e-9)
    assert smoothness_defect(lp_space(math.inf, 2)) == pytest.approx(2.0, abs=1e-9)
    assert smoothness_defect(lp_space(1, 2)) > 1.9
    assert smoothness_defect(lp_space(math.inf, 2)) > 1.9


def test_defect_gauge_kinds():
    ss = gauge_space(BoxBallSumBody(2, 0.5, 0.5))
    assert smoothness_defect(ss, budget=80, seed=0) < 1e-6
    # its dual has corners, and the probe must see them
    assert smoothness_defect(ss.dual(), budget=80, seed=0) > 0.1


def test_smoothness_flags():
    assert lp_space(2, 2).is_smooth()
    assert lp_space(4, 2).is_smooth()
    assert not lp_space(1, 2).is_smooth()
    assert not lp_space(math.inf, 2).is_smooth()
    assert gauge_space(BoxBallSumBody(2, 0.5, 0.5)).is_smooth()
    assert not gauge_space(BoxBallSumBody(2, 0.5, 0.5)).dual().is_smooth()
    assert not direct_sum([lp_space(2, 2), lp_space(2, 2)], "l1").is_smooth()
