"""Seeded theorem-suite batches: each runner exercises one result family on
fixed seeds and aggregates pass/fail counts for the cli front end."""
from __future__ import annotations

import math

import numpy as np

from .bilinear import (FormField, bilinear_norm, bilinear_point_correction_xh,
                       ck_bilinear_correction, make_form, op_from_bilinear)
from .certificates import CorrectionRejected
from .corrections import (BetaStructure, beta_perturbation, eta_functional,
                          functional_point_correction,
                          hilbert_domain_correction, hilbert_rotation)
from .operators import make_operator, op_norm
from .probe import counterexample_search, sum_propagation_suite
from .spaces import lp_space, scalar_space


def _tally(checks):
    passed = sum(1 for ok, _ in checks if ok)
    return {"passed": passed, "failed": len(checks) - passed,
            "checks": [{"name": name, "ok": bool(ok)} for ok, name in checks]}


def _near_attaining_functional(space, eta, rng):
    x0 = space.sphere_point(rng)
    J = space.support_functionals(x0).vertices[0]
    g = rng.standard_normal(space.dim)
    g = g / space.dual_norm(g)
    t = rng.uniform(0.0, 1.0)
    for _ in range(40):
        f = (1.0 - t) * J + t * g
        dn = space.dual_norm(f)
        f = f / dn
        if float(f @ x0) > 1.0 - eta:
            return x0, f
        t *= 0.5
    return x0, J


def suite_smoothness_characterization(seed: int = 0, budget: int = 800):
    """Smooth domains certify scalar corrections; kinked ones produce
    certified witnesses and refuse corrections."""
    rng = np.random.default_rng(seed)
    checks = []
    for space in (lp_space(2, 2), lp_space(4, 2), lp_space(3, 3)):
        ok = True
        for eps in (0.25, 0.5):
            eta = eta_functional(space, eps, seed=seed).eta
            for _ in range(max(10, budget // 40)):
                x0, f = _near_attaining_functional(space, eta, rng)
                try:
                    _, cert = functional_point_correction(space, f, x0, eps,
                                                          seed=seed)
                    ok &= cert.holds()
                except CorrectionRejected:
                    ok = False
        checks.append((ok, f"{space.label()} scalar corrections certify"))
    for space in (lp_space(1, 2), lp_space(math.inf, 2)):
        w = counterexample_search(space, "scalar", 1.0, 1e-2,
                                  budget=budget, seed=seed)
        checks.append((w is not None and w.distance >= 1.0 - 1e-8,
                       f"{space.label()} witness found"))
        try:
            functional_point_correction(space, np.ones(space.dim) / space.dim,
                                        space.sphere_point(rng), 0.5, seed=seed)
            checks.append((False, f"{space.label()} refused"))
        except CorrectionRejected:
            checks.append((True, f"{space.label()} refused"))
    return _tally(checks)


def _near_attaining_operator(dom, cod, eta, rng):
    x0 = dom.sphere_point(rng)
    J = dom.support_functionals(x0).vertices[0]
    y = cod.sphere_point(rng)
    M = np.outer(y, J)
    R = rng.standard_normal(M.shape)
    R = R / op_norm(make_operator(R, dom, cod), budget=128).value
    theta = min(0.25 * eta, 0.05)
    T = make_operator((1.0 - theta) * M + theta * R, dom, cod)
    return x0, T


def suite_beta(seed: int = 0, budget: int = 800):
    rng = np.random.default_rng(seed)
    checks = []
    trials = max(10, budget // 40)
    for dom in (lp_space(2, 2), lp_space(2, 3), lp_space(4, 2)):
        for m, rho in ((2, 0.0), (3, 0.0), (2, 0.3)):
            cod = lp_space(math.inf, m)
            beta = (BetaStructure.canonical_linf(cod) if rho == 0.0
                    else BetaStructure.skewed_linf(cod, rho))
            ok = True
            for _ in range(trials):
                eps = float(rng.choice([0.25, 0.5]))
                from .corrections import largest_xi
                eta = eta_functional(dom, largest_xi(eps, rho), seed=seed).eta
                x0, T = _near_attaining_operator(dom, cod, eta, rng)
                try:
                    _, cert = beta_perturbation(T, x0, eps, beta, seed=seed)
                    ok &= cert.holds()
                except CorrectionRejected:
                    ok = False
            checks.append((ok, f"{dom.label()} -> linf^{m} rho={rho}"))
    # the solved 2x2 instance
    T = make_operator([[0.95, 0.0], [0.0, 1.0]], lp_space(2, 2),
                      lp_space(math.inf, 2))
    U, cert = beta_perturbation(T, np.array([1.0, 0.0]), 0.4,
                                BetaStructure.canonical_linf(lp_space(math.inf, 2)))
    checks.append((abs(cert.distance - (1.0 - 1.0 / 1.1)) < 1e-9,
                   "2x2 boost distance matches"))
    return _tally(checks)


def suite_hilbert(seed: int = 0, budget: int = 800):
    rng = np.random.default_rng(seed)
    checks = []
    ok = True
    for _ in range(max(50, budget // 4)):
        n = int(rng.integers(2, 7))
        h0 = lp_space(2, n).sphere_point(rng)
        h1 = lp_space(2, n).sphere_point(rng)
        R = hilbert_rotation(h0, h1)
        ok &= np.abs(R.matrix.T @ R.matrix - np.eye(n)).max() <= 1e-12
        ok &= np.abs(R.matrix @ h0 - h1).max() <= 1e-12
        gap = abs(np.linalg.svd(R.matrix - np.eye(n))[1][0]
                  - np.linalg.norm(h0 - h1))
        ok &= gap <= 1e-10
    checks.append((ok, "rotation isometry properties"))
    ok = True
    from .corrections import _eta_hilbert_internal
    for dom_dim in (2, 3):
        dom = lp_space(2, dom_dim)
        for cod in (lp_space(2, 2), lp_space(math.inf, 2), lp_space(1, 2)):
            for _ in range(max(5, budget // 120)):
                eps = 0.5
                gap = rng.uniform(0.0, 0.9 * _eta_hilbert_internal(eps))
                x0, T = _near_attaining_operator(dom, cod, gap + 1e-12, rng)
                try:
                    _, cert = hilbert_domain_correction(T, x0, eps, seed=seed)
                    ok &= cert.holds()
                except CorrectionRejected:
                    ok = False
    checks.append((ok, "Euclidean-domain corrections certify"))
    return _tally(checks)


def suite_bilinear(seed: int = 0, budget: int = 800):
    rng = np.random.default_rng(seed)
    checks = []
    iso_ok, corr_ok = True, True
    for X in (lp_space(2, 2), lp_space(4, 2)):
        H = lp_space(2, 2)
        for _ in range(max(10, budget // 40)):
            M = rng.standard_normal((X.dim, H.dim))
            B = make_form(M, X, H)
            nv = bilinear_norm(B).value
            B = B.scaled(1.0 / nv)
            iso_ok &= abs(op_norm(op_from_bilinear(B)).value
                          - bilinear_norm(B).value) <= 1e-8
            wx, wy = bilinear_norm(B).witness
            x0 = wx + 0.02 * rng.standard_normal(X.dim)
            x0 = x0 / X.norm(x0)
            eps = float(rng.choice([0.3, 0.5]))
            try:
                _, cert = bilinear_point_correction_xh(B, x0, wy, eps, seed=seed)
                corr_ok &= cert.holds() and cert.distance < 3.0 * eps
            except CorrectionRejected:
                corr_ok = False
    checks.append((iso_ok, "operator identification is isometric"))
    checks.append((corr_ok, "X x H corrections certify within 3 eps"))
    return _tally(checks)


def suite_ck(seed: int = 0, budget: int = 800):
    rng = np.random.default_rng(seed)
    checks = []
    ok = True
    for _ in range(max(10, budget // 80)):
        m = int(rng.integers(2, 6))
        X = lp_space(2, 2)
        Y = lp_space(2, int(rng.integers(2, 4)))
        x0 = X.sphere_point(rng)
        y0 = Y.sphere_point(rng)
        forms = []
        for k in range(m):
            M = rng.standard_normal((X.dim, Y.dim))
            f = make_form(M, X, Y)
            forms.append(f.scaled(rng.uniform(0.3, 0.95)
                                  / bilinear_norm(f).value))
        peak = make_form(np.outer(x0, y0) * 0.999, X, Y)
        forms[0] = peak.scaled(1.0 / bilinear_norm(peak).value * 0.9999)
        fld = FormField([f"t{k}" for k in range(m)], forms)
        try:
            _, cert = ck_bilinear_correction(fld, x0, y0, 0.4, seed=seed)
            ok &= cert.holds()
        except CorrectionRejected:
            ok = False
    checks.append((ok, "field corrections certify on seeded batches"))
    # the two-point worked instance
    l2 = lp_space(2, 2)
    fld = FormField(["t1", "t2"], [make_form([[0.98, 0], [0, 0]], l2, l2),
                                   make_form([[0, 0], [0, 0.5]], l2, l2)])
    _, cert = ck_bilinear_correction(fld, [1.0, 0.0], [1.0, 0.0], 0.3, seed=seed)
    checks.append((abs(cert.distance - 0.02) <= 1e-10, "two-point field distance"))
    return _tally(checks)


def suite_sums(seed: int = 0, budget: int = 800):
    checks = []
    X = lp_space(2, 2)
    rep = sum_propagation_suite(X, [scalar_space(), scalar_space()], "linf",
                                0.5, budget=max(100, budget // 4), seed=seed)
    checks.append((rep.sum_estimate.eta_upper is None
                   or rep.sum_estimate.eta_upper > 1e-6,
                   "linf sum keeps a positive modulus bracket"))
    checks.append((all(l["gap_matches"] and l["no_smaller"]
                       for l in rep.liftings) if rep.liftings else True,
                   "child witnesses lift blockwise"))
    rep1 = sum_propagation_suite(X, [scalar_space(), scalar_space()], "l1",
                                 0.5, budget=60, seed=seed)
    checks.append((not rep1.converse_checked,
                   "l1 sum records data without asserting the converse"))
    return _tally(checks)
