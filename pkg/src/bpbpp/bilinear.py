"""Bilinear maps as coefficient tensors: norms, the operator identification,
and the point-property corrections for forms on X x H, for property-beta
codomains, and for finite sup-norm-valued fields of forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificates import BpbCertificate, CorrectionRejected
from .corrections import (BetaStructure, hilbert_domain_correction,
                          hilbert_rotation, largest_xi, lp_rank_one_assembly)
from .operators import Operator, make_operator, op_norm
from .spaces import NormedSpace, SpaceError, lp_space, scalar_space, _unit

DEFAULT_BUDGET = 2000


@dataclass(eq=False)
class BilinearMap:
    """An order-3 coefficient tensor from X x Y into Z (dim Z = 1 for forms)."""

    tensor: np.ndarray  # (dim Z, dim X, dim Y)
    x_space: NormedSpace
    y_space: NormedSpace
    z_space: NormedSpace
    _norm_cache: "BilinearNormResult | None" = field(default=None, repr=False)

    def __post_init__(self):
        T = np.asarray(self.tensor, dtype=float)
        if T.ndim == 2:
            T = T[None, :, :]
        if T.shape != (self.z_space.dim, self.x_space.dim, self.y_space.dim):
            raise SpaceError(f"tensor shape {T.shape} does not match the spaces")
        self.tensor = T

    @property
    def is_scalar(self) -> bool:
        return self.z_space.dim == 1

    def value(self, x, y) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.tensor, np.asarray(x, float),
                         np.asarray(y, float))

    def scalar(self, x, y) -> float:
        return float(self.value(x, y)[0]) if self.is_scalar else \
            self.z_space.norm(self.value(x, y))

    def x_collapsed(self, x) -> np.ndarray:
        """Matrix of y -> B(x, y), shape (dim Z, dim Y)."""
        return np.einsum("kij,i->kj", self.tensor, np.asarray(x, float))

    def y_collapsed(self, y) -> np.ndarray:
        """Matrix of x -> B(x, y), shape (dim Z, dim X)."""
        return np.einsum("kij,j->ki", self.tensor, np.asarray(y, float))

    def norm(self, budget: int = DEFAULT_BUDGET, seed: int = 0):
        if self._norm_cache is None:
            self._norm_cache = bilinear_norm(self, budget=budget, seed=seed)
        return self._norm_cache

    def minus(self, other: "BilinearMap") -> "BilinearMap":
        return BilinearMap(self.tensor - other.tensor, self.x_space,
                           self.y_space, self.z_space)

    def scaled(self, a: float) -> "BilinearMap":
        return BilinearMap(a * self.tensor, self.x_space, self.y_space, self.z_space)


def make_form(matrix, x_space: NormedSpace, y_space: NormedSpace) -> BilinearMap:
    """Scalar form B(x, y) = x^T A y from its coefficient matrix."""
    A = np.asarray(matrix, dtype=float)
    return BilinearMap(A[None, :, :], x_space, y_space, scalar_space())


@dataclass
class BilinearNormResult:
    value: float
    witness: tuple[np.ndarray, np.ndarray]
    method: str
    exact: bool


def bilinear_norm(B: BilinearMap, budget: int = DEFAULT_BUDGET,
                  seed: int = 0) -> BilinearNormResult:
    """sup of |B(x, y)| over the two unit balls, with a witness pair.

    Exact for Euclidean x Euclidean scalar forms (singular value), for any
    scalar form whose X ball is a polytope (vertex sweep + dual norm), and
    for linf-type codomains (max over coordinate slices); otherwise
    alternating norming-point maximization with multi-start.
    """
    X, Y, Z = B.x_space, B.y_space, B.z_space
    if B.is_scalar:
        A = B.tensor[0]
        if X.kind == "lp" and X.p == 2 and Y.kind == "lp" and Y.p == 2:
            U, s, Vt = np.linalg.svd(A)
            x = U[:, 0]
            y = Vt[0]
            if B.scalar(x, y) < 0:
                y = -y
            return BilinearNormResult(float(s[0]), (x, y), "singular-value", True)
        VX = X.ball_vertices()
        if VX is not None and len(VX) <= 4096:
            best, wit = -1.0, None
            for v in VX:
                g = v @ A  # the functional B(v, .)
                val = Y.dual_norm(g)
                if val > best + 1e-15:
                    best = val
                    wit = (v, Y.norming_point(g) if val > 1e-14 else
                           _unit(Y.dim, 0) / Y.norm(_unit(Y.dim, 0)))
            return BilinearNormResult(float(best), wit, "vertex-dual", True)
        VY = Y.ball_vertices()
        if VY is not None and len(VY) <= 4096:
            best, wit = -1.0, None
            for w in VY:
                g = A @ w
                val = X.dual_norm(g)
                if val > best + 1e-15:
                    best = val
                    wit = (X.norming_point(g) if val > 1e-14 else
                           _unit(X.dim, 0) / X.norm(_unit(X.dim, 0)), w)
            return BilinearNormResult(float(best), wit, "vertex-dual", True)
        return _alternating_norm(B, budget=budget, seed=seed)
    if Z.kind == "lp" and Z.p == math.inf:
        best, wit = -1.0, None
        exact = True
        for k in range(Z.dim):
            sub = make_form(B.tensor[k], X, Y)
            res = bilinear_norm(sub, budget=budget, seed=seed)
            exact &= res.exact
            if res.value > best:
                best, wit = res.value, res.witness
        return BilinearNormResult(float(best), wit, "slice-max", exact)
    return _alternating_norm(B, budget=budget, seed=seed)


def _alternating_norm(B: BilinearMap, budget: int, seed: int,
                      starts: int = 16, sweeps: int = 200) -> BilinearNormResult:
    """Alternating maximization; each half-step is a dual-norm evaluation for
    scalar forms and an operator-norm call for vector-valued maps."""
    X, Y, Z = B.x_space, B.y_space, B.z_space
    rng = np.random.default_rng(seed)
    cands = []
    for i in range(min(X.dim, 3)):
        for j in range(min(Y.dim, 3)):
            cands.append((_unit(X.dim, i), _unit(Y.dim, j)))
    while len(cands) < starts + 9:
        cands.append((X.sphere_point(rng), Y.sphere_point(rng)))

    def y_step(x):
        if B.is_scalar:
            g = B.x_collapsed(x)[0]
            if not np.any(g):
                return None, 0.0
            return Y.norming_point(g), Y.dual_norm(g)
        res = op_norm(Operator(B.x_collapsed(x), Y, Z), budget=128, seed=seed)
        return res.witness.point, res.value

    def x_step(y):
        if B.is_scalar:
            g = B.y_collapsed(y)[0]
            if not np.any(g):
                return None, 0.0
            return X.norming_point(g), X.dual_norm(g)
        res = op_norm(Operator(B.y_collapsed(y), X, Z), budget=128, seed=seed)
        return res.witness.point, res.value

    best_val, best_wit = -1.0, None
    for x0, y0 in cands[: starts + 9]:
        x = x0 / X.norm(x0)
        y = y0 / Y.norm(y0)
        val = abs(B.scalar(x, y)) if B.is_scalar else Z.norm(B.value(x, y))
        for _ in range(sweeps):
            ny, vy = y_step(x)
            if ny is not None:
                y, valn = ny, vy
            nx, vx = x_step(y)
            if nx is not None:
                x, valn = nx, vx
            if nx is None and ny is None:
                break
            if valn <= val * (1.0 + 1e-12):
                val = max(val, valn)
                break
            val = valn
        if val > best_val:
            best_val, best_wit = val, (x, y)
    return BilinearNormResult(float(best_val), best_wit, "alternating-max", False)


def op_from_bilinear(B: BilinearMap) -> Operator:
    """The operator X -> Y* with T(x)(y) = B(x, y); an isometry for the norm."""
    if not B.is_scalar:
        raise SpaceError("operator identification needs a scalar form")
    return make_operator(B.tensor[0].T, B.x_space, B.y_space.dual())


def form_from_operator(T: Operator, y_space: NormedSpace) -> BilinearMap:
    return make_form(T.matrix.T, T.domain, y_space)


def retract_to_ball(B: BilinearMap, budget: int = DEFAULT_BUDGET,
                    seed: int = 0) -> BilinearMap:
    """Radial retraction onto the unit ball of forms: C if |C| <= 1 else C/|C|.

    A few-ulp dead zone above 1 keeps the retraction exactly idempotent after
    the division re-evaluates the norm.
    """
    val = bilinear_norm(B, budget=budget, seed=seed).value
    if val <= 1.0 + 1e-14:
        return B
    return B.scaled(1.0 / val)


# ---------------------------------------------------------------------------
# corrections
# ---------------------------------------------------------------------------

def _hilbert_modulus(eps: float) -> float:
    return 1.0 - math.sqrt(max(0.0, 1.0 - eps * eps / 4.0))


def bilinear_point_correction_xh(B: BilinearMap, x0, h0, eps: float, *,
                                 seed: int = 0, budget: int = DEFAULT_BUDGET):
    """Correction for scalar forms on X x H with H Euclidean.

    Identifies the form with an operator X -> H, corrects that operator so it
    attains at x0, rotates H so the new norming direction of S x0 comes back
    to h0, and certifies |A(x0, h0)| = |A| = 1 with |A - B| < 3 eps.
    """
    X, H = B.x_space, B.y_space
    if not B.is_scalar:
        raise CorrectionRejected("X x H correction applies to scalar forms")
    if not (H.kind == "lp" and H.p == 2):
        raise CorrectionRejected("second factor must be Euclidean", factor=H.label())
    x0 = np.asarray(x0, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    if abs(X.norm(x0) - 1.0) > 1e-9 or abs(H.norm(h0) - 1.0) > 1e-9:
        raise CorrectionRejected("base pair must lie on the unit spheres")
    bnorm = B.norm(budget=budget, seed=seed)
    if bnorm.value > 1.0 + 1e-9:
        raise CorrectionRejected("form must satisfy |B| <= 1", norm=bnorm.value)
    val0 = float(B.value(x0, h0)[0])
    delta = _hilbert_modulus(eps)
    T = op_from_bilinear(B)  # X -> H* = H
    # operator step: try the convexity-argument budget first, then relax to eps
    S = None
    for target in (delta, eps):
        try:
            if X.kind == "lp" and X.p == 2:
                S, inner = hilbert_domain_correction(T, x0, target, seed=seed,
                                                     budget=budget)
            else:
                S, inner = lp_rank_one_assembly(T, x0, target, seed=seed,
                                                budget=budget)
            break
        except CorrectionRejected:
            continue
    if S is None:
        raise CorrectionRejected(
            "operator step failed at every budget", gap=1.0 - abs(val0), eps=eps)
    img = S.matrix @ x0
    h1 = img / np.linalg.norm(img)
    if val0 < 0:
        h1 = -h1
    shift = float(np.linalg.norm(h0 - h1))
    if not (shift < eps):
        raise CorrectionRejected(
            "norming direction moved beyond eps (solver failure, not a math "
            "failure)", point_shift=shift, eps=eps)
    R = hilbert_rotation(h0, h1)
    # A(x, h) = <S x, R h>, so the coefficient matrix is S^T R
    A = make_form(S.matrix.T @ R.matrix, X, H)
    a_norm = bilinear_norm(A, budget=budget, seed=seed)
    attain = abs(abs(float(A.value(x0, h0)[0])) - 1.0)
    unit = abs(a_norm.value - 1.0)
    dist = bilinear_norm(A.minus(B), budget=budget, seed=seed).value
    bound = 3.0 * eps
    if dist >= bound - 1e-12 or attain > 1e-8 or unit > 1e-9:
        raise CorrectionRejected("form correction failed a-posteriori checks",
                                 distance=dist, bound=bound,
                                 attainment_residual=attain, unit_residual=unit)
    cert = BpbCertificate(
        kind="bilinear-xh",
        domain=X.to_descriptor(), codomain=H.to_descriptor(),
        point=[x0.tolist(), h0.tolist()],
        original=B.tensor.tolist(), corrected=A.tensor.tolist(),
        epsilon=eps, distance=float(dist), distance_bound=bound,
        attainment_residual=float(attain), unit_norm_residual=float(unit),
        eta=min(delta, delta * delta / 2.0), eta_provenance="analytic-hilbert",
        seed=seed,
        diagnostics={"point_shift": shift, "operator_distance": inner.distance,
                     "hilbert_modulus": delta, "value": val0})
    return A, cert


def default_forms_corrector(form: BilinearMap, x0, y0, target: float, *,
                            seed: int = 0, budget: int = DEFAULT_BUDGET):
    """Adapter running the X x H correction inside a distance budget of
    ``target`` (its own guarantee is 3 eps, so it is called at target/3)."""
    return bilinear_point_correction_xh(form, x0, y0, target / 3.0, seed=seed,
                                        budget=budget)


def beta_bilinear_correction(B: BilinearMap, x0, y0, eps: float,
                             beta: BetaStructure, forms_corrector=None, *,
                             seed: int = 0, budget: int = DEFAULT_BUDGET):
    """Correction for maps into a property-beta codomain.

    Corrects the dominant scalar slice z_a* o B with the supplied forms
    corrector, then boosts that slice so the norm is attained exactly at
    (x0, y0); C = A/(1 + eps/4) certifies |C - B| < 2 eps.
    """
    Z = B.z_space
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    corrector = forms_corrector or default_forms_corrector
    bnorm = B.norm(budget=budget, seed=seed)
    if bnorm.value > 1.0 + 1e-9:
        raise CorrectionRejected("map must satisfy |B| <= 1", norm=bnorm.value)
    xi = largest_xi(eps, beta.rho)
    vals = beta.functionals @ B.value(x0, y0)
    alpha = int(np.argmax(np.abs(vals)))
    s = 1.0 if vals[alpha] >= 0 else -1.0
    z = s * beta.points[alpha]
    zstar = s * beta.functionals[alpha]
    G = BilinearMap(np.einsum("k,kij->ij", zstar, B.tensor)[None], B.x_space,
                    B.y_space, scalar_space())
    try:
        Atilde, inner = corrector(G, x0, y0, xi, seed=seed, budget=budget)
    except CorrectionRejected as exc:
        raise CorrectionRejected(
            f"scalar slice correction failed within xi ({exc.reason})",
            xi=xi, **exc.diagnostics) from exc
    coeff = (1.0 + eps / 4.0) * Atilde.tensor[0] - G.tensor[0]
    A_tensor = B.tensor + np.einsum("k,ij->kij", z, coeff)
    C = BilinearMap(A_tensor / (1.0 + eps / 4.0), B.x_space, B.y_space, Z)
    c_norm = bilinear_norm(C, budget=budget, seed=seed)
    attain = abs(Z.norm(C.value(x0, y0)) - c_norm.value)
    unit = abs(c_norm.value - 1.0)
    dist = bilinear_norm(C.minus(B), budget=budget, seed=seed).value
    bound = 2.0 * eps
    if dist >= bound - 1e-12 or attain > 1e-8 or unit > 1e-9:
        raise CorrectionRejected("beta bilinear correction failed verification",
                                 distance=dist, bound=bound,
                                 attainment_residual=attain, unit_residual=unit)
    cert = BpbCertificate(
        kind="bilinear-beta",
        domain=B.x_space.to_descriptor(), codomain=Z.to_descriptor(),
        point=[x0.tolist(), y0.tolist()],
        original=B.tensor.tolist(), corrected=C.tensor.tolist(),
        epsilon=eps, distance=float(dist), distance_bound=bound,
        attainment_residual=float(attain), unit_norm_residual=float(unit),
        seed=seed,
        diagnostics={"xi": xi, "alpha": alpha, "rho": beta.rho,
                     "y_space": B.y_space.to_descriptor(),
                     "slice_distance": inner.distance})
    return C, cert


# ---------------------------------------------------------------------------
# fields of forms (finite sup-norm-valued bilinear maps)
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FormField:
    """A finite family of scalar forms indexed by point labels; models a
    continuous-function-valued bilinear map over a finite index set."""

    points: list[str]
    forms: list[BilinearMap]

    def __post_init__(self):
        if len(self.points) != len(self.forms) or not self.forms:
            raise SpaceError("field needs one form per labelled point")
        X, Y = self.forms[0].x_space, self.forms[0].y_space
        for f in self.forms:
            if not f.is_scalar or f.x_space.dim != X.dim or f.y_space.dim != Y.dim:
                raise SpaceError("field forms must be scalar on common factors")

    @property
    def x_space(self):
        return self.forms[0].x_space

    @property
    def y_space(self):
        return self.forms[0].y_space

    def to_bilinear(self) -> BilinearMap:
        Z = lp_space(math.inf, len(self.forms))
        tensor = np.stack([f.tensor[0] for f in self.forms])
        return BilinearMap(tensor, self.x_space, self.y_space, Z)

    def value(self, x, y) -> np.ndarray:
        return np.array([f.scalar(x, y) for f in self.forms])

    def norm(self, budget: int = DEFAULT_BUDGET, seed: int = 0) -> float:
        return max(bilinear_norm(f, budget=budget, seed=seed).value
                   for f in self.forms)


def ck_bilinear_correction(field_: FormField, x0, y0, eps: float,
                           forms_corrector=None, *, seed: int = 0,
                           budget: int = DEFAULT_BUDGET):
    """Correction for fields of forms over a finite index set.

    Corrects the slice with the largest value at (x0, y0) within eps/2, adds
    the same shift to every slice, and retracts each back to the unit ball;
    the result attains its sup norm exactly at (x0, y0) with |A - B| < eps.
    """
    corrector = forms_corrector or default_forms_corrector
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    norms = [bilinear_norm(f, budget=budget, seed=seed).value for f in field_.forms]
    total = max(norms)
    if total > 1.0 + 1e-9:
        raise CorrectionRejected("field must satisfy |B| <= 1", norm=total)
    vals = field_.value(x0, y0)
    t0 = int(np.argmax(np.abs(vals)))
    try:
        Btilde, inner = corrector(field_.forms[t0], x0, y0, eps / 2.0, seed=seed,
                                  budget=budget)
    except CorrectionRejected as exc:
        raise CorrectionRejected(
            f"peak-slice correction failed within eps/2 ({exc.reason})",
            **exc.diagnostics) from exc
    shift = Btilde.tensor[0] - field_.forms[t0].tensor[0]
    psi = []
    for f in field_.forms:
        cand = make_form(f.tensor[0] + shift, field_.x_space, field_.y_space)
        psi.append(retract_to_ball(cand, budget=budget, seed=seed))
    A = FormField(list(field_.points), psi)
    dist = max(bilinear_norm(p.minus(f), budget=budget, seed=seed).value
               for p, f in zip(psi, field_.forms))
    a_norm = A.norm(budget=budget, seed=seed)
    attain = abs(float(np.max(np.abs(A.value(x0, y0)))) - a_norm)
    unit = abs(a_norm - 1.0)
    if dist >= eps - 1e-12 or attain > 1e-8 or unit > 1e-9:
        raise CorrectionRejected("field correction failed verification",
                                 distance=dist, bound=eps,
                                 attainment_residual=attain, unit_residual=unit)
    cert = BpbCertificate(
        kind="bilinear-ck-field",
        domain=field_.x_space.to_descriptor(),
        codomain=field_.y_space.to_descriptor(),
        point=[x0.tolist(), y0.tolist()],
        original=[f.tensor[0].tolist() for f in field_.forms],
        corrected=[p.tensor[0].tolist() for p in psi],
        epsilon=eps, distance=float(dist), distance_bound=eps,
        attainment_residual=float(attain), unit_norm_residual=float(unit),
        seed=seed,
        diagnostics={"peak_index": t0, "points": list(field_.points),
                     "slice_distance": inner.distance})
    return A, cert
