"""Empirical estimation of the point-property modulus and adversarial
counterexample search, plus the built-in failure families on l1-type
domains and the smooth-but-not-strictly-convex two-dimensional space.

A failure witness is a pair (functional-or-operator, point) that almost
attains its norm at the point while every exactly-attaining object stays
far away; witnesses carry a certified distance and replay from their
serialized form alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import CorrectionRejected
from .corrections import eta_functional
from .operators import dist_to_pointwise_na, make_operator
from .spaces import (BoxBallSumBody, NormedSpace, SpaceError, gauge_space,
                     make_space, scalar_space, _unit)

DIST_TOL = 1e-8


@dataclass
class FailureWitness:
    """A near-attaining pair whose distance to pointwise attainment is large."""

    space: dict              # domain descriptor
    codomain: dict | str
    functional: list         # matrix rows (1 x n for the scalar case)
    point: list
    value_gap: float
    distance: float
    epsilon: float
    certification: str       # "face-exact" | "brute-force" | "penalized-upper"

    def replay(self) -> dict:
        """Recompute gap and distance from the serialized fields alone."""
        X = make_space(self.space)
        cod = scalar_space() if self.codomain == "scalar" else make_space(self.codomain)
        T = make_operator(np.asarray(self.functional, dtype=float), X, cod)
        x0 = np.asarray(self.point, dtype=float)
        opn = T.norm().value
        gap = opn - cod.norm(T.matrix @ x0)
        d = dist_to_pointwise_na(T, x0)
        return {"gap": float(gap), "distance": float(d.distance),
                "norm": float(opn), "bound_kind": d.bound_kind,
                "gap_error": abs(float(gap) - self.value_gap),
                "distance_error": abs(float(d.distance) - self.distance)}


@dataclass
class EtaEstimate:
    """Bracket for the point-property modulus of a pair at one epsilon."""

    pair: tuple
    epsilon: float
    eta_lower: float
    eta_upper: float | None
    witnesses: list
    trials: int
    seed: int
    flagged: bool = False


def smoothed_square_space(rounding: float) -> NormedSpace:
    """The 2-d gauge space whose ball is (1-r) B_inf + r B_2: a uniformly
    smooth norm whose sphere still contains flat edges of length 2(1-r)."""
    if not (0.0 < rounding < 1.0):
        raise SpaceError("rounding parameter must lie in (0, 1)")
    return gauge_space(BoxBallSumBody(dim=2, box_radius=1.0 - rounding,
                                      ball_radius=rounding))


@dataclass
class BilinearFailureWitness:
    """A near-attaining form/point pair far from pointwise attainment."""

    x_space: dict
    y_space: dict
    coefficients: list
    point_x: list
    point_y: list
    value_gap: float
    distance: float
    epsilon: float
    certification: str

    def replay(self) -> dict:
        from .bilinear import bilinear_norm, make_form

        X = make_space(self.x_space)
        Y = make_space(self.y_space)
        B = make_form(np.asarray(self.coefficients, dtype=float), X, Y)
        res = bilinear_norm(B)
        gap = res.value - abs(B.scalar(self.point_x, self.point_y))
        return {"norm": res.value, "gap": float(gap),
                "gap_error": abs(float(gap) - self.value_gap)}


def l1_bilinear_failure_witness(s: float, t: float | None = None) -> BilinearFailureWitness:
    """The exact failure family for forms on the l1 x l1 plane pair.

    At x0 = (1-s, s), y0 = (1-t, t) all four product weights are positive,
    so a unit form attaining there must have every coefficient equal to the
    same sign: the only attaining forms are +-(all-ones).  The coefficient
    pattern [[1,-1],[-1,-1]] has gap 2(s + t - s t) at the pair but stays at
    sup-coefficient distance 2 from both, for every s, t.
    """
    t = s if t is None else t
    if not (0.0 < s < 0.5 and 0.0 < t < 0.5):
        raise SpaceError("witness parameters must lie in (0, 1/2)")
    X = make_space({"kind": "lp", "p": 1, "dim": 2})
    A = np.array([[1.0, -1.0], [-1.0, -1.0]])
    x0 = [1.0 - s, s]
    y0 = [1.0 - t, t]
    # distance to the two attaining forms, exactly
    dist = min(np.max(np.abs(A - sign)) for sign in (1.0, -1.0))
    gap = 2.0 * (s + t - s * t)
    return BilinearFailureWitness(
        x_space=X.to_descriptor(), y_space=X.to_descriptor(),
        coefficients=A.tolist(), point_x=x0, point_y=y0,
        value_gap=gap, distance=float(dist), epsilon=1.0,
        certification="face-exact")


def l1_failure_witness(s: float) -> FailureWitness:
    """The exact failure family on the two-dimensional l1 space.

    x0 = (1-s, s) is a smooth sphere point whose unique attaining functional
    is (1, 1); the functional (1, -1) has gap 2s there but stays at sup-norm
    distance 2 from attainment.
    """
    if not (0.0 < s < 0.5):
        raise SpaceError("witness parameter must lie in (0, 1/2)")
    X = make_space({"kind": "lp", "p": 1, "dim": 2})
    x0 = np.array([1.0 - s, s])
    f = np.array([[1.0, -1.0]])
    T = make_operator(f, X, scalar_space())
    d = dist_to_pointwise_na(T, x0)
    return FailureWitness(space=X.to_descriptor(), codomain="scalar",
                          functional=f.tolist(), point=x0.tolist(),
                          value_gap=2.0 * s, distance=float(d.distance),
                          epsilon=1.0, certification="face-exact")


# ---------------------------------------------------------------------------
# adversarial search
# ---------------------------------------------------------------------------

def _structured_candidates(X: NormedSpace, eta: float, rng, budget: int):
    """(x0, f) pairs near sphere kinks paired with far dual-ball vertices."""
    V = X.ball_vertices()
    W = X.dual().ball_vertices()
    if V is None or W is None:
        return
    scales = [0.45 * eta, 0.2 * eta, 0.05 * eta, 0.8 * eta]
    for v in V[: min(len(V), 16)]:
        for _ in range(max(2, budget // (8 * len(V)))):
            t = scales[rng.integers(0, len(scales))]
            u = rng.standard_normal(X.dim)
            x0 = v + t * u / max(np.linalg.norm(u), 1e-12)
            n = X.norm(x0)
            if n < 1e-9:
                continue
            x0 = x0 / n
            for g in W:
                val = float(g @ x0)
                f = g if val >= 0 else -g
                yield x0, f
        for i in range(min(X.dim, 4)):  # axis slides off the vertex
            for t in scales:
                x0 = v + t * _unit(X.dim, i)
                n = X.norm(x0)
                if n < 1e-9:
                    continue
                x0 = x0 / n
                for g in W:
                    val = float(g @ x0)
                    yield x0, (g if val >= 0 else -g)


def _random_candidates(X: NormedSpace, rng, budget: int):
    for _ in range(budget):
        x0 = X.sphere_point(rng)
        g = rng.standard_normal(X.dim)
        dn = X.dual_norm(g)
        if dn < 1e-12:
            continue
        f = g / dn
        if f @ x0 < 0:
            f = -f
        yield x0, f


def counterexample_search(X: NormedSpace, Y: NormedSpace | str, eps: float,
                          eta: float, budget: int = 2000,
                          seed: int = 0) -> FailureWitness | None:
    """First witness violating the point-property contract at (eps, eta).

    A witness is a unit-norm functional/operator with gap < eta at its point
    while every operator attaining exactly at that point stays at distance
    >= eps.  Absence of a witness within the budget is a legitimate outcome
    (returns None), not an error.
    """
    if not (0.0 < eps < 2.0) or not (eta > 0.0):
        raise SpaceError("counterexample search needs eps in (0,2) and eta > 0")
    scalar = isinstance(Y, str) and Y == "scalar"
    cod = scalar_space() if scalar else Y
    rng = np.random.default_rng(seed)
    if scalar or cod.dim == 1:
        gens = _structured_candidates(X, eta, rng, budget)
        seen = 0
        for x0, f in gens:
            seen += 1
            if seen > 4 * budget:
                break
            w = _check_scalar_witness(X, x0, f, eps, eta)
            if w is not None:
                return w
        for x0, f in _random_candidates(X, rng, budget):
            w = _check_scalar_witness(X, x0, f, eps, eta)
            if w is not None:
                return w
        return None
    # operator pairs: sampled search, distance by the certified path if any;
    # uncertified (penalized) distance probes are rationed, they are data only
    certified = _has_certified_dist(cod)
    dist_budget = budget if certified else 8
    for _ in range(budget):
        if dist_budget <= 0:
            break
        M = rng.standard_normal((cod.dim, X.dim))
        T = make_operator(M, X, cod)
        opn = T.norm().value
        if opn < 1e-9:
            continue
        T = make_operator(M / opn, X, cod)
        x0 = X.sphere_point(rng)
        gap = 1.0 - cod.norm(T.matrix @ x0)
        if gap >= eta:
            continue
        d = dist_to_pointwise_na(T, x0, seed=seed, budget=256)
        if not certified:
            dist_budget -= 1
        if d.bound_kind == "certified" and d.distance >= eps - DIST_TOL:
            return FailureWitness(space=X.to_descriptor(),
                                  codomain=cod.to_descriptor(),
                                  functional=T.matrix.tolist(), point=x0.tolist(),
                                  value_gap=float(gap), distance=float(d.distance),
                                  epsilon=eps, certification="row-face-exact")
    return None


def _has_certified_dist(cod: NormedSpace) -> bool:
    if cod.dim == 1:
        return True
    if cod.kind == "lp" and cod.p == math.inf:
        return True
    if cod.kind == "direct_sum" and cod.sum_kind == "linf":
        return all(_has_certified_dist(c) for c in cod.children)
    return False


def _check_scalar_witness(X, x0, f, eps, eta):
    val = float(f @ x0)
    gap = 1.0 - val
    if gap >= eta or gap < 0:
        return None
    T = make_operator(f.reshape(1, -1), X, scalar_space())
    d = dist_to_pointwise_na(T, x0)
    if d.distance >= eps - DIST_TOL:
        return FailureWitness(space=X.to_descriptor(), codomain="scalar",
                              functional=T.matrix.tolist(), point=x0.tolist(),
                              value_gap=float(gap), distance=float(d.distance),
                              epsilon=eps, certification="face-exact")
    return None


def estimate_eta_pair(X: NormedSpace, Y: NormedSpace | str, eps: float,
                      budget: int = 2000, seed: int = 0) -> EtaEstimate:
    """Adversarial bracket for the modulus eta(eps) of a pair.

    eta_upper is the least gap among found violating witnesses (the modulus
    cannot exceed it); eta_lower is the largest tested level at which no
    violation appeared, floored by the analytic policy on smooth domains.
    """
    scalar = isinstance(Y, str) and Y == "scalar"
    cod = scalar_space() if scalar else Y
    rng = np.random.default_rng(seed)
    witnesses = []
    min_gap = None
    trials = 0
    level = 0.5
    levels = 10 if (scalar or _has_certified_dist(cod)) else 3
    for _ in range(levels):  # shrink the probe level toward the least violating gap
        w = counterexample_search(X, "scalar" if scalar or cod.dim == 1 else cod,
                                  eps, level, budget=max(64, budget // 10),
                                  seed=seed + trials)
        trials += 1
        if w is None:
            break
        witnesses.append(w)
        min_gap = w.value_gap if min_gap is None else min(min_gap, w.value_gap)
        level = max(w.value_gap * 0.5, 1e-9)
    analytic_floor = 0.0
    if (scalar or cod.dim == 1) and X.is_smooth():
        try:
            analytic_floor = eta_functional(X, eps, seed=seed).eta
        except CorrectionRejected:
            analytic_floor = 0.0
    if min_gap is None:
        eta_upper = None
        eta_lower = max(analytic_floor, level)
        flagged = analytic_floor == 0.0
    else:
        # the modulus cannot exceed the least witnessed gap; stored witnesses
        # must all violate at eta_upper, so it sits just above that gap
        eta_upper = min_gap * (1.0 + 1e-9) + 1e-300
        witnesses = [w for w in witnesses if w.value_gap < eta_upper]
        eta_lower = max(analytic_floor, min_gap * (1.0 - 1e-9))
        flagged = False
        if analytic_floor > eta_upper:
            raise RuntimeError(
                "search contradicts the analytic policy: a found witness has "
                f"gap {min_gap} below the guaranteed threshold {analytic_floor}")
    return EtaEstimate(pair=(X.label(), "scalar" if scalar else cod.label()),
                       epsilon=eps, eta_lower=float(eta_lower),
                       eta_upper=None if eta_upper is None else float(eta_upper),
                       witnesses=witnesses, trials=trials, seed=seed,
                       flagged=flagged)


# ---------------------------------------------------------------------------
# direct-sum propagation
# ---------------------------------------------------------------------------

@dataclass
class SumPropagationReport:
    sum_kind: str
    child_estimates: list
    sum_estimate: EtaEstimate
    liftings: list = field(default_factory=list)
    converse_checked: bool = False
    notes: str = ""


def _lift_witness(X: NormedSpace, children, sum_space, j: int,
                  w: FailureWitness) -> dict:
    """Embed a child witness blockwise into the sum and re-certify."""
    child = children[j]
    Tj = np.asarray(w.functional, dtype=float)
    M = np.zeros((sum_space.dim, X.dim))
    offs = [0]
    for c in children:
        offs.append(offs[-1] + c.dim)
    M[offs[j]:offs[j + 1], :] = Tj
    T = make_operator(M, X, sum_space)
    x0 = np.asarray(w.point, dtype=float)
    opn = T.norm().value
    gap = opn - sum_space.norm(T.matrix @ x0)
    d = dist_to_pointwise_na(T, x0)
    return {"child": j, "gap": float(gap), "gap_matches": abs(gap - w.value_gap) < 1e-9,
            "distance": float(d.distance), "bound_kind": d.bound_kind,
            "no_smaller": d.distance >= w.distance - 1e-6}


def sum_propagation_suite(X: NormedSpace, children, sum_kind: str, eps: float,
                          budget: int = 800, seed: int = 0) -> SumPropagationReport:
    """Modulus estimates for (X, child) and (X, sum) plus witness lifting.

    For linf-type sums both directions are checked by explicit lifting of
    stored witnesses; for l1-type sums only the forward direction is checked
    and the data on the open converse is recorded without any assertion.
    """
    from .spaces import direct_sum

    kids = list(children)
    sum_space = direct_sum(kids, sum_kind)
    child_estimates = []
    for j, c in enumerate(kids):
        y = "scalar" if c.dim == 1 else c
        child_estimates.append(estimate_eta_pair(X, y, eps, budget=budget,
                                                 seed=seed + j))
    sum_estimate = estimate_eta_pair(X, sum_space, eps, budget=budget,
                                     seed=seed + 97)
    liftings = []
    if sum_kind == "linf":
        for j, est in enumerate(child_estimates):
            for w in est.witnesses[:2]:
                liftings.append(_lift_witness(X, kids, sum_space, j, w))
    notes = ("two-sided consistency checked by lifting" if sum_kind == "linf"
             else "forward direction only; converse data recorded, no claim")
    return SumPropagationReport(sum_kind=sum_kind,
                                child_estimates=child_estimates,
                                sum_estimate=sum_estimate, liftings=liftings,
                                converse_checked=(sum_kind == "linf"),
                                notes=notes)
