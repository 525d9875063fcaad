"""Finite-dimensional real normed spaces with certified geometry oracles.

Every space carries four oracles: the norm, the dual norm, the support
functionals (duality map) at a nonzero point, and a norming point for a
dual vector.  Supported kinds:

* ``lp`` / ``weighted_lp`` -- closed forms for all four oracles,
* ``polyhedral`` -- norm as a max over symmetric dual generators, dual
  norm by unit-ball vertex enumeration, support sets as exact faces,
* ``gauge`` -- Minkowski functional of a symmetric convex body with an
  exact membership test, evaluated by ray bisection,
* ``direct_sum`` -- l1 or linf combination of child norms, all oracles
  composed blockwise.

Moduli of convexity/smoothness and the smoothness-defect probe return
labelled bounds; closed forms are used only where they are exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

GAUGE_REL_TOL = 1e-12
FACE_TOL = 1e-10
_DEDUP_DIGITS = 9


class SpaceError(ValueError):
    """Malformed space descriptor or operand of the wrong shape."""


def _as_vector(v, dim: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape[0] != dim:
        raise SpaceError(f"expected a vector of length {dim}, got {arr.shape[0]}")
    return arr


def _lp_norm(v: np.ndarray, p: float) -> float:
    if p == 1:
        return float(np.sum(np.abs(v)))
    if p == math.inf:
        return float(np.max(np.abs(v))) if v.size else 0.0
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((np.abs(v) / scale) ** p) ** (1.0 / p))


def _conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# gauge bodies
# ---------------------------------------------------------------------------

class GaugeBody:
    """Symmetric convex body with 0 in its interior and an exact membership test."""

    dim: int
    smooth: bool | None = None

    def contains(self, v: np.ndarray, tol: float = 0.0) -> bool:
        raise NotImplementedError

    def support(self, f: np.ndarray) -> float | None:
        """Closed-form support function sup{<f,v> : v in body}, if known."""
        return None

    def support_point(self, f: np.ndarray) -> np.ndarray | None:
        """A boundary maximizer of <f, .> over the body, if known."""
        return None

    def normal_functional(self, v: np.ndarray) -> np.ndarray | None:
        """The unique support functional at a boundary point, if single-valued."""
        return None

    def gauge_closed_form(self, v: np.ndarray) -> float | None:
        return None

    def flat_edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return []

    def params(self) -> dict:
        raise NotImplementedError

    def label(self) -> str:
        raise NotImplementedError


def gauge_bisect(body: GaugeBody, v: np.ndarray, rel_tol: float = GAUGE_REL_TOL) -> float:
    """Minkowski gauge of ``body`` at ``v`` by bisection on the ray through v."""
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return 0.0
    t = nv
    # bracket: grow/shrink by factors of two until membership flips
    if body.contains(v / t):
        lo = 0.0
        hi = t
        while hi > 1e-300:
            if body.contains(v / (hi / 2.0)):
                hi /= 2.0
            else:
                lo = hi / 2.0
                break
        else:  # pragma: no cover - v would be 0
            return 0.0
    else:
        while not body.contains(v / t):
            t *= 2.0
            if t > 1e300:
                raise SpaceError("gauge bracket failed; body looks empty")
        lo, hi = t / 2.0, t
    for _ in range(200):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if body.contains(v / mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class BoxBallSumBody(GaugeBody):
    """Minkowski sum of a box and a Euclidean ball: box_r*B_inf + ball_r*B_2.

    Outer parallel body of the box, so the boundary is C^1 (smooth) while the
    box facets survive as flat faces: uniformly smooth but not strictly convex.
    """

    dim: int
    box_radius: float
    ball_radius: float

    def __post_init__(self):
        if self.box_radius < 0 or self.ball_radius <= 0:
            raise SpaceError("box-ball body needs box_radius >= 0 and ball_radius > 0")
        object.__setattr__(self, "smooth", True)

    def contains(self, v: np.ndarray, tol: float = 0.0) -> bool:
        clipped = np.clip(v, -self.box_radius, self.box_radius)
        return float(np.linalg.norm(v - clipped)) <= self.ball_radius + tol

    def support(self, f: np.ndarray) -> float:
        return self.box_radius * float(np.sum(np.abs(f))) + self.ball_radius * float(
            np.linalg.norm(f)
        )

    def support_point(self, f: np.ndarray) -> np.ndarray:
        nf = float(np.linalg.norm(f))
        if nf == 0.0:
            raise SpaceError("support point of the zero direction is undefined")
        return self.box_radius * np.sign(f) + self.ball_radius * f / nf

    def normal_functional(self, v: np.ndarray) -> np.ndarray | None:
        theta = v - np.clip(v, -self.box_radius, self.box_radius)
        nt = float(np.linalg.norm(theta))
        if nt < 1e-13:
            return None
        return theta / self.support(theta)

    def flat_edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        if self.box_radius == 0.0:
            return []
        edges = []
        out = self.box_radius + self.ball_radius
        for i in range(self.dim):
            for j in range(self.dim):
                if j == i:
                    continue
                a = np.zeros(self.dim)
                a[i] = out
                b = a.copy()
                a[j] = self.box_radius
                b[j] = -self.box_radius
                edges.append((a, b))
        return edges

    def params(self) -> dict:
        return {
            "family": "box-ball-sum",
            "boxRadius": self.box_radius,
            "ballRadius": self.ball_radius,
        }

    def label(self) -> str:
        return f"boxball(b={self.box_radius:g},r={self.ball_radius:g})"


@dataclass(frozen=True, eq=False)
class PolarBody(GaugeBody):
    """Polar of another body; the unit ball of the dual of a gauge space."""

    base: GaugeBody

    def __post_init__(self):
        object.__setattr__(self, "dim", self.base.dim)
        # polar of a body with flat faces has corners, and conversely
        object.__setattr__(self, "smooth", None)

    def contains(self, f: np.ndarray, tol: float = 0.0) -> bool:
        s = self.base.support(f)
        if s is None:
            raise SpaceError("polar membership needs a support form on the base body")
        return s <= 1.0 + tol

    def gauge_closed_form(self, f: np.ndarray) -> float | None:
        return self.base.support(f)

    def support(self, x: np.ndarray) -> float:
        g = self.base.gauge_closed_form(x)
        return g if g is not None else gauge_bisect(self.base, x)

    def support_point(self, x: np.ndarray) -> np.ndarray | None:
        return self.base.normal_functional(x / self.support(x))

    def normal_functional(self, f: np.ndarray) -> np.ndarray | None:
        # support set of the polar space at f = maximizers of <f,.> over the
        # base body; single-valued only off the base body's flat directions
        if isinstance(self.base, BoxBallSumBody) and np.all(np.abs(f) > 1e-13):
            return self.base.support_point(f)
        return None

    def params(self) -> dict:
        return {"family": "polar", "base": self.base.params()}

    def label(self) -> str:
        return f"polar({self.base.label()})"


_BODY_FAMILIES = {}


def body_from_params(params: dict) -> GaugeBody:
    family = params.get("family")
    if family == "box-ball-sum":
        dim = int(params.get("dim", 2))
        return BoxBallSumBody(dim=dim, box_radius=float(params["boxRadius"]),
                              ball_radius=float(params["ballRadius"]))
    if family == "polar":
        return PolarBody(base=body_from_params(params["base"]))
    raise SpaceError(f"unknown gauge body family {family!r}")


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormedSpace:
    """A finite-dimensional real normed space with norm/dual/support oracles.

    Immutable after construction; cached derived data (ball vertices, dual
    space) is computed once and then only read, so instances are safe to
    share across concurrent searches.
    """

    dim: int
    kind: str
    p: float = math.nan
    weights: np.ndarray | None = None
    generators: np.ndarray | None = None
    body: GaugeBody | None = None
    children: tuple["NormedSpace", ...] = ()
    sum_kind: str = ""
    smoothness_hint: str = "unknown"

    # -- construction -------------------------------------------------

    def __post_init__(self):
        if self.dim < 1:
            raise SpaceError("dim must be a positive integer")
        if self.kind in ("lp", "weighted_lp"):
            if not (self.p >= 1.0):
                raise SpaceError(f"lp exponent must satisfy p >= 1, got {self.p}")
        if self.kind == "weighted_lp":
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.dim,) or np.any(w <= 0):
                raise SpaceError("weighted_lp needs positive weights of length dim")
            object.__setattr__(self, "weights", w)
        if self.kind == "polyhedral":
            G = np.asarray(self.generators, dtype=float)
            if G.ndim != 2 or G.shape[1] != self.dim or G.shape[0] < self.dim:
                raise SpaceError("polyhedral generators must be a (m, dim) array, m >= dim")
            if np.linalg.matrix_rank(G) < self.dim:
                raise SpaceError("polyhedral generators must span the dual space")
            # store the symmetrized set once
            sym = np.vstack([G, -G])
            sym = np.unique(np.round(sym, _DEDUP_DIGITS), axis=0)
            object.__setattr__(self, "generators", sym)
        if self.kind == "gauge" and (self.body is None or self.body.dim != self.dim):
            raise SpaceError("gauge kind needs a body of matching dimension")
        if self.kind == "direct_sum":
            if not self.children:
                raise SpaceError("direct sum needs a nonempty child list")
            if self.sum_kind not in ("l1", "linf"):
                raise SpaceError("sum_kind must be 'l1' or 'linf'")
            if self.dim != sum(c.dim for c in self.children):
                raise SpaceError("direct sum dim must equal the sum of child dims")
        object.__setattr__(self, "_cache", {})

    # -- block helpers for sums ----------------------------------------

    def _offsets(self):
        offs = [0]
        for c in self.children:
            offs.append(offs[-1] + c.dim)
        return offs

    def split(self, v: np.ndarray) -> list[np.ndarray]:
        offs = self._offsets()
        return [v[offs[i]:offs[i + 1]] for i in range(len(self.children))]

    def embed_block(self, j: int, block: np.ndarray) -> np.ndarray:
        offs = self._offsets()
        out = np.zeros(self.dim)
        out[offs[j]:offs[j + 1]] = block
        return out

    # -- the four oracles ----------------------------------------------

    def norm(self, v) -> float:
        v = _as_vector(v, self.dim)
        if self.kind == "lp":
            return _lp_norm(v, self.p)
        if self.kind == "weighted_lp":
            if self.p == math.inf:
                return float(np.max(self.weights * np.abs(v)))
            return _lp_norm(self.weights ** (1.0 / self.p) * v, self.p)
        if self.kind == "polyhedral":
            return float(np.max(self.generators @ v))
        if self.kind == "gauge":
            g = self.body.gauge_closed_form(v)
            return float(g) if g is not None else gauge_bisect(self.body, v)
        if self.kind == "direct_sum":
            parts = [c.norm(b) for c, b in zip(self.children, self.split(v))]
            return float(sum(parts)) if self.sum_kind == "l1" else float(max(parts))
        raise SpaceError(f"unknown kind {self.kind!r}")

    def norm_many(self, V: np.ndarray) -> np.ndarray:
        """Vectorized norm of the rows of V (slow loop for gauge kinds)."""
        V = np.asarray(V, dtype=float)
        if self.kind == "lp":
            if self.p == 1:
                return np.sum(np.abs(V), axis=1)
            if self.p == math.inf:
                return np.max(np.abs(V), axis=1)
            if self.p == 2:
                return np.linalg.norm(V, axis=1)
            scale = np.max(np.abs(V), axis=1)
            safe = np.where(scale == 0.0, 1.0, scale)
            return scale * np.sum((np.abs(V) / safe[:, None]) ** self.p, axis=1) ** (1.0 / self.p)
        if self.kind == "weighted_lp":
            if self.p == math.inf:
                return np.max(self.weights * np.abs(V), axis=1)
            return type(self)._static_norm_many(self.weights ** (1.0 / self.p) * V, self.p)
        if self.kind == "polyhedral":
            return np.max(V @ self.generators.T, axis=1)
        if self.kind == "direct_sum":
            offs = self._offsets()
            parts = np.column_stack([
                c.norm_many(V[:, offs[i]:offs[i + 1]]) for i, c in enumerate(self.children)
            ])
            return np.sum(parts, axis=1) if self.sum_kind == "l1" else np.max(parts, axis=1)
        return np.array([self.norm(row) for row in V])

    @staticmethod
    def _static_norm_many(V, p):
        scale = np.max(np.abs(V), axis=1)
        safe = np.where(scale == 0.0, 1.0, scale)
        return scale * np.sum((np.abs(V) / safe[:, None]) ** p, axis=1) ** (1.0 / p)

    def dual_norm(self, f) -> float:
        f = _as_vector(f, self.dim)
        if self.kind == "lp":
            return _lp_norm(f, _conjugate(self.p))
        if self.kind == "weighted_lp":
            if self.p == 1:
                return float(np.max(np.abs(f) / self.weights))
            if self.p == math.inf:
                return float(np.sum(np.abs(f) / self.weights))
            q = _conjugate(self.p)
            return _lp_norm(self.weights ** (-1.0 / self.p) * f, q)
        if self.kind == "polyhedral":
            V = self.ball_vertices()
            if V is None:
                raise SpaceError("polyhedral dual norm needs an enumerable ball")
            return float(np.max(V @ f))
        if self.kind == "gauge":
            s = self.body.support(f)
            if s is not None:
                return float(s)
            return self._dual_norm_ascent(f)
        if self.kind == "direct_sum":
            parts = [c.dual_norm(b) for c, b in zip(self.children, self.split(f))]
            return float(max(parts)) if self.sum_kind == "l1" else float(sum(parts))
        raise SpaceError(f"unknown kind {self.kind!r}")

    def _dual_norm_ascent(self, f, starts: int = 16, iters: int = 300) -> float:
        # sup of <f, v> over the unit ball by normalized projected ascent;
        # only used for gauge bodies without a closed-form support function
        rng = np.random.default_rng(0)
        best, best_x = 0.0, None
        cands = [f.copy()] + [rng.standard_normal(self.dim) for _ in range(starts - 1)]
        sp = self.body.support_point(f)
        if sp is not None:
            cands.insert(0, np.asarray(sp, dtype=float))
        for x0 in cands:
            n0 = self.norm(x0)
            if n0 == 0.0:
                continue
            x = x0 / n0
            val = float(f @ x)
            step = 0.5
            for _ in range(iters):
                xn = x + step * f / (np.linalg.norm(f) or 1.0)
                nn = self.norm(xn)
                if nn == 0.0:
                    break
                xn /= nn
                vn = float(f @ xn)
                if vn > val + 1e-15:
                    x, val = xn, vn
                else:
                    step *= 0.5
                    if step < 1e-13:
                        break
            if val > best:
                best, best_x = val, x
        if best_x is not None:
            best = max(best, self._ascent_polish(f, best_x))
        return best

    def _ascent_polish(self, f, x) -> float:
        from scipy import optimize

        def value(v):
            n = self.norm(v)
            return float(f @ (v / n)) if n > 1e-14 else 0.0

        if self.dim == 2:
            th0 = math.atan2(x[1], x[0])
            res = optimize.minimize_scalar(
                lambda th: -value(np.array([math.cos(th), math.sin(th)])),
                bounds=(th0 - 0.05, th0 + 0.05), method="bounded",
                options={"xatol": 1e-14, "maxiter": 200})
            return -res.fun
        res = optimize.minimize(lambda v: -value(v), x, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15,
                                         "maxiter": 800})
        return -res.fun

    def support_functionals(self, x) -> "SupportSet":
        """All norm-one functionals attaining the norm at x (x != 0)."""
        x = _as_vector(x, self.dim)
        nx = self.norm(x)
        if nx == 0.0:
            raise SpaceError("support functionals of the zero vector are undefined")
        xhat = x / nx
        verts, complete = self._support_vertices(xhat)
        verts = np.atleast_2d(np.asarray(verts, dtype=float))
        verts = np.unique(np.round(verts, _DEDUP_DIGITS + 3), axis=0)
        return SupportSet(point=xhat, vertices=verts,
                          is_singleton=bool(verts.shape[0] == 1), complete=complete)

    def _support_vertices(self, xh: np.ndarray):
        kind, p = self.kind, self.p
        if self.dim == 1:
            return [np.array([math.copysign(1.0 / self.norm(np.ones(1)), xh[0])])], True
        if kind == "lp":
            if 1 < p < math.inf:
                if p == 2:
                    return [xh], True
                f = np.sign(xh) * np.abs(xh) ** (p - 1.0)
                return [f], True
            if p == 1:
                zeros = np.where(np.abs(xh) < FACE_TOL)[0]
                complete = len(zeros) <= 6
                picks = zeros[:6]
                base = np.sign(xh)
                verts = []
                for signs in itertools.product((-1.0, 1.0), repeat=len(picks)):
                    f = base.copy()
                    f[picks] = signs
                    verts.append(f)
                return verts, complete
            # p == inf
            active = np.where(np.abs(xh) >= 1.0 - FACE_TOL)[0]
            return [np.sign(xh[i]) * _unit(self.dim, i) for i in active], True
        if kind == "weighted_lp":
            w = self.weights
            if 1 < p < math.inf:
                f = w * np.sign(xh) * np.abs(xh) ** (p - 1.0)
                return [f], True
            if p == 1:
                zeros = np.where(np.abs(xh) < FACE_TOL)[0][:6]
                base = w * np.sign(xh)
                verts = []
                for signs in itertools.product((-1.0, 1.0), repeat=len(zeros)):
                    f = base.copy()
                    f[zeros] = w[zeros] * np.asarray(signs)
                    verts.append(f)
                return verts, True
            vals = w * np.abs(xh)
            active = np.where(vals >= np.max(vals) - FACE_TOL)[0]
            return [np.sign(xh[i]) * w[i] * _unit(self.dim, i) for i in active], True
        if kind == "polyhedral":
            vals = self.generators @ xh
            active = np.where(vals >= 1.0 - FACE_TOL)[0]
            if len(active) == 0:  # numerical guard: take the max
                active = [int(np.argmax(vals))]
            return [self.generators[i] for i in active], True
        if kind == "gauge":
            nf = self.body.normal_functional(xh)
            if nf is not None:
                return [nf], True
            if isinstance(self.body, PolarBody) and isinstance(self.body.base, BoxBallSumBody):
                base = self.body.base
                zeros = np.where(np.abs(xh) < 1e-13)[0][:6]
                verts = []
                for signs in itertools.product((-1.0, 1.0), repeat=len(zeros)):
                    d = xh.copy()
                    d[zeros] = 1e-30 * np.asarray(signs)
                    verts.append(base.support_point(d))
                return verts, True
            return [self._numerical_gradient(xh)], False
        if kind == "direct_sum":
            return self._sum_support_vertices(xh)
        raise SpaceError(f"unknown kind {self.kind!r}")

    def _numerical_gradient(self, xh: np.ndarray, h: float = 1e-7) -> np.ndarray:
        g = np.zeros(self.dim)
        for i in range(self.dim):
            e = _unit(self.dim, i) * h
            g[i] = (self.norm(xh + e) - self.norm(xh - e)) / (2 * h)
        dn = self.dual_norm(g)
        return g / dn if dn > 0 else g

    def _sum_support_vertices(self, xh: np.ndarray):
        blocks = self.split(xh)
        norms = [c.norm(b) for c, b in zip(self.children, blocks)]
        complete = True
        if self.sum_kind == "linf":
            top = max(norms)
            verts = []
            for j, (c, b, n) in enumerate(zip(self.children, blocks, norms)):
                if n >= top - FACE_TOL:
                    sub = c.support_functionals(b)
                    complete &= sub.complete
                    for fv in sub.vertices:
                        verts.append(self.embed_block(j, fv))
            return verts, complete
        # l1 sum: product of child faces; zero blocks range over the child dual ball
        factor_sets = []
        for j, (c, b, n) in enumerate(zip(self.children, blocks, norms)):
            if n > FACE_TOL:
                sub = c.support_functionals(b)
                complete &= sub.complete
                factor_sets.append(list(sub.vertices))
            else:
                dual_verts = c.dual().ball_vertices()
                if dual_verts is None:
                    # non-polytopal child dual ball: sample antipodal extremes only
                    e = _unit(c.dim, 0)
                    scale = c.dual_norm(e)
                    dual_verts = np.array([e / scale, -e / scale])
                    complete = False
                factor_sets.append(list(dual_verts))
        verts = []
        for combo in itertools.islice(itertools.product(*factor_sets), 128):
            verts.append(np.concatenate([np.asarray(v, dtype=float) for v in combo]))
        if len(list(itertools.product(*[range(len(s)) for s in factor_sets]))) > 128:
            complete = False
        return verts, complete

    def norming_point(self, f) -> np.ndarray:
        """A unit vector x with f(x) = dual_norm(f); lexicographic tie-break."""
        f = _as_vector(f, self.dim)
        dn = self.dual_norm(f)
        if dn == 0.0:
            raise SpaceError("norming point of the zero functional is undefined")
        kind, p = self.kind, self.p
        if kind == "lp":
            if p == 2:
                return f / dn
            if 1 < p < math.inf:
                q = _conjugate(p)
                x = np.sign(f) * np.abs(f) ** (q - 1.0)
                return x / self.norm(x)
            if p == 1:
                j = _lex_argmax(np.abs(f))
                return math.copysign(1.0, f[j]) * _unit(self.dim, j)
            x = np.sign(f)
            return x
        if kind == "weighted_lp":
            w = self.weights
            if 1 < p < math.inf:
                q = _conjugate(p)
                x = np.sign(f) * (np.abs(f) / w) ** (q - 1.0)
                return x / self.norm(x)
            if p == 1:
                j = _lex_argmax(np.abs(f) / w)
                return math.copysign(1.0, f[j]) * _unit(self.dim, j) / w[j]
            return np.sign(f) / w
        if kind == "polyhedral":
            V = self.ball_vertices()
            vals = V @ f
            return V[_lex_argmax(vals, V)]
        if kind == "gauge":
            sp = self.body.support_point(f)
            if sp is not None:
                return np.asarray(sp, dtype=float)
            # fall back to ascent and report the best point found
            rng = np.random.default_rng(0)
            best, best_val = None, -math.inf
            for x0 in [f] + [rng.standard_normal(self.dim) for _ in range(15)]:
                n0 = self.norm(x0)
                if n0 == 0:
                    continue
                x = x0 / n0
                val = float(f @ x)
                step = 0.5
                for _ in range(300):
                    xn = x + step * f / np.linalg.norm(f)
                    xn /= self.norm(xn)
                    vn = float(f @ xn)
                    if vn > val + 1e-15:
                        x, val = xn, vn
                    else:
                        step *= 0.5
                        if step < 1e-13:
                            break
                if val > best_val:
                    best, best_val = x, val
            return best
        if kind == "direct_sum":
            blocks = self.split(f)
            if self.sum_kind == "l1":
                duals = np.array([c.dual_norm(b) if np.any(b) else 0.0
                                  for c, b in zip(self.children, blocks)])
                j = _lex_argmax(duals)
                return self.embed_block(j, self.children[j].norming_point(blocks[j]))
            parts = []
            for c, b in zip(self.children, blocks):
                parts.append(c.norming_point(b) if np.any(b) else np.zeros(c.dim))
            return np.concatenate(parts)
        raise SpaceError(f"unknown kind {self.kind!r}")

    # -- derived structure ----------------------------------------------

    def ball_vertices(self) -> np.ndarray | None:
        """Extreme points of the unit ball when it is a polytope, else None."""
        cache = self._cache
        if "vertices" not in cache:
            cache["vertices"] = self._compute_vertices()
        return cache["vertices"]

    def _compute_vertices(self):
        kind, p = self.kind, self.p
        if self.dim == 1:
            s = 1.0 / self.norm(np.ones(1))
            return np.array([[-s], [s]])
        if kind == "lp":
            if p == 1:
                eye = np.eye(self.dim)
                return np.vstack([eye, -eye])
            if p == math.inf:
                if self.dim > 16:
                    return None
                return np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
            return None
        if kind == "weighted_lp":
            if p == 1:
                eye = np.eye(self.dim) / self.weights[:, None]
                return np.vstack([eye, -eye])
            if p == math.inf:
                if self.dim > 16:
                    return None
                signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
                return signs / self.weights[None, :]
            return None
        if kind == "polyhedral":
            return _enumerate_vertices(self.generators)
        if kind == "direct_sum":
            child_verts = [c.ball_vertices() for c in self.children]
            if any(v is None for v in child_verts):
                return None
            if self.sum_kind == "l1":
                rows = []
                for j, verts in enumerate(child_verts):
                    for v in verts:
                        rows.append(self.embed_block(j, v))
                return np.array(rows)
            total = 1
            for verts in child_verts:
                total *= len(verts)
            if total > 2 ** 16:
                return None
            rows = [np.concatenate(combo) for combo in itertools.product(*child_verts)]
            return np.array(rows)
        return None

    def dual(self) -> "NormedSpace":
        cache = self._cache
        if "dual" not in cache:
            cache["dual"] = self._compute_dual()
        return cache["dual"]

    def _compute_dual(self):
        kind, p = self.kind, self.p
        if kind == "lp":
            return NormedSpace(dim=self.dim, kind="lp", p=_conjugate(p))
        if kind == "weighted_lp":
            q = _conjugate(p)
            if p == 1:
                return NormedSpace(dim=self.dim, kind="weighted_lp", p=math.inf,
                                   weights=1.0 / self.weights)
            if p == math.inf:
                return NormedSpace(dim=self.dim, kind="weighted_lp", p=1.0,
                                   weights=1.0 / self.weights)
            return NormedSpace(dim=self.dim, kind="weighted_lp", p=q,
                               weights=self.weights ** (-q / p))
        if kind == "polyhedral":
            V = self.ball_vertices()
            return NormedSpace(dim=self.dim, kind="polyhedral", generators=V)
        if kind == "gauge":
            if isinstance(self.body, PolarBody):
                return NormedSpace(dim=self.dim, kind="gauge", body=self.body.base)
            return NormedSpace(dim=self.dim, kind="gauge", body=PolarBody(base=self.body))
        if kind == "direct_sum":
            duals = tuple(c.dual() for c in self.children)
            other = "linf" if self.sum_kind == "l1" else "l1"
            return NormedSpace(dim=self.dim, kind="direct_sum", children=duals,
                               sum_kind=other)
        raise SpaceError(f"unknown kind {self.kind!r}")

    def is_smooth(self) -> bool:
        """Whether the norm is everywhere differentiable away from 0."""
        if self.smoothness_hint == "smooth":
            return True
        if self.smoothness_hint == "nonsmooth":
            return False
        if self.dim == 1:
            return True
        kind, p = self.kind, self.p
        if kind in ("lp", "weighted_lp"):
            return 1 < p < math.inf
        if kind == "polyhedral":
            return False
        if kind == "gauge":
            if self.body.smooth is True:
                return True
            if isinstance(self.body, PolarBody):
                return False
            return smoothness_defect(self) < 1e-8
        if kind == "direct_sum":
            return len(self.children) == 1 and self.children[0].is_smooth()
        return False

    def sphere_point(self, rng: np.random.Generator) -> np.ndarray:
        for _ in range(64):
            g = rng.standard_normal(self.dim)
            n = self.norm(g)
            if n > 1e-12:
                return g / n
        raise SpaceError("could not sample a sphere point")

    # -- bookkeeping -----------------------------------------------------

    def label(self) -> str:
        kind, p = self.kind, self.p
        if kind == "lp":
            ptxt = "inf" if p == math.inf else f"{p:g}"
            return f"l{ptxt}^{self.dim}"
        if kind == "weighted_lp":
            ptxt = "inf" if p == math.inf else f"{p:g}"
            return f"wl{ptxt}^{self.dim}"
        if kind == "polyhedral":
            return f"poly^{self.dim}(m={len(self.generators) // 2})"
        if kind == "gauge":
            return f"gauge^{self.dim}[{self.body.label()}]"
        inner = ",".join(c.label() for c in self.children)
        return f"{self.sum_kind}-sum({inner})"

    def cache_key(self) -> str:
        return self.label() + repr(self.to_descriptor())

    def to_descriptor(self) -> dict:
        kind, p = self.kind, self.p
        if kind == "lp":
            return {"kind": "lp", "p": "inf" if p == math.inf else p, "dim": self.dim}
        if kind == "weighted_lp":
            return {"kind": "weighted-lp", "p": "inf" if p == math.inf else p,
                    "dim": self.dim, "weights": self.weights.tolist()}
        if kind == "polyhedral":
            return {"kind": "polyhedral", "dim": self.dim,
                    "generators": self.generators.tolist()}
        if kind == "gauge":
            params = dict(self.body.params())
            params["dim"] = self.dim
            return {"kind": "gauge", "dim": self.dim, "bodyParams": params}
        return {"kind": "direct-sum", "dim": self.dim, "sumKind": self.sum_kind,
                "children": [c.to_descriptor() for c in self.children]}


def _unit(dim: int, i: int) -> np.ndarray:
    e = np.zeros(dim)
    e[i] = 1.0
    return e


def _lex_argmax(vals: np.ndarray, tiebreak_rows: np.ndarray | None = None) -> int:
    """Index of the max value; ties resolved toward the lexicographically
    smallest tie-break row (or smallest index)."""
    vals = np.asarray(vals, dtype=float)
    top = np.max(vals)
    ties = np.where(vals >= top - 1e-12 * max(1.0, abs(top)))[0]
    if len(ties) == 1 or tiebreak_rows is None:
        return int(ties[0])
    rows = [tuple(np.round(tiebreak_rows[i], 12)) for i in ties]
    return int(ties[min(range(len(rows)), key=rows.__getitem__)])


def _enumerate_vertices(sym_generators: np.ndarray) -> np.ndarray | None:
    """Vertices of {v : <g, v> <= 1 for all symmetrized generators g}."""
    A = sym_generators
    m, d = A.shape
    if math.comb(m, d) > 200_000:
        return None
    verts = set()
    for idx in itertools.combinations(range(m), d):
        M = A[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, np.ones(d))
        if np.max(A @ v) <= 1.0 + 1e-9:
            verts.add(tuple(np.round(v, _DEDUP_DIGITS)))
    if not verts:
        return None
    out = np.array(sorted(verts))
    return out


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def lp_space(p: float, dim: int) -> NormedSpace:
    return NormedSpace(dim=dim, kind="lp", p=float(p))


def weighted_lp_space(p: float, weights) -> NormedSpace:
    w = np.asarray(weights, dtype=float)
    return NormedSpace(dim=w.shape[0], kind="weighted_lp", p=float(p), weights=w)


def polyhedral_space(generators) -> NormedSpace:
    G = np.asarray(generators, dtype=float)
    return NormedSpace(dim=G.shape[1], kind="polyhedral", generators=G)


def gauge_space(body: GaugeBody) -> NormedSpace:
    return NormedSpace(dim=body.dim, kind="gauge", body=body)


def scalar_space() -> NormedSpace:
    return lp_space(2.0, 1)


def direct_sum(children, sum_kind: str) -> NormedSpace:
    kids = tuple(children)
    if not kids:
        raise SpaceError("direct sum needs a nonempty child list")
    return NormedSpace(dim=sum(c.dim for c in kids), kind="direct_sum",
                       children=kids, sum_kind=sum_kind)


def make_space(desc) -> NormedSpace:
    """Build a space from a JSON-style descriptor (the cli problem schema)."""
    if isinstance(desc, NormedSpace):
        return desc
    if not isinstance(desc, dict):
        raise SpaceError("space descriptor must be a mapping")
    kind = desc.get("kind")
    if kind == "lp":
        p = desc.get("p")
        p = math.inf if p in ("inf", "Infinity") else p
        if p is None:
            raise SpaceError("lp descriptor needs a field 'p'")
        if not isinstance(desc.get("dim"), int) or isinstance(desc.get("dim"), bool):
            raise SpaceError("lp descriptor needs an integer 'dim'")
        return lp_space(float(p), desc["dim"])
    if kind == "weighted-lp":
        p = desc.get("p")
        p = math.inf if p in ("inf", "Infinity") else p
        return weighted_lp_space(float(p), desc["weights"])
    if kind == "polyhedral":
        return polyhedral_space(desc["generators"])
    if kind == "gauge":
        params = dict(desc.get("bodyParams") or {})
        params.setdefault("dim", desc.get("dim", 2))
        return gauge_space(body_from_params(params))
    if kind == "direct-sum":
        kids = [make_space(c) for c in desc.get("children", [])]
        sk = {"l1": "l1", "linf": "linf"}.get(desc.get("sumKind"))
        if sk is None:
            raise SpaceError("direct-sum descriptor needs sumKind 'l1' or 'linf'")
        return direct_sum(kids, sk)
    raise SpaceError(f"unknown space kind {kind!r}")


# ---------------------------------------------------------------------------
# support sets and moduli
# ---------------------------------------------------------------------------

@dataclass
class SupportSet:
    """The face of norm-one functionals attaining the norm at ``point``."""

    point: np.ndarray
    vertices: np.ndarray
    is_singleton: bool
    complete: bool = True

    def diameter(self, dual_norm) -> float:
        if self.vertices.shape[0] <= 1:
            return 0.0
        best = 0.0
        V = self.vertices
        for i in range(V.shape[0]):
            for j in range(i + 1, V.shape[0]):
                best = max(best, dual_norm(V[i] - V[j]))
        return best


@dataclass
class ModulusEstimate:
    """A labelled estimate of a convexity or smoothness modulus."""

    argument: float
    value: float
    bound_kind: str  # "lower" | "upper" | "exact"
    method: str
    trials: int = 0


def norm(space: NormedSpace, v) -> float:
    return space.norm(v)


def dual_norm(space: NormedSpace, f) -> float:
    return space.dual_norm(f)


def support_functionals(space: NormedSpace, x) -> SupportSet:
    return space.support_functionals(x)


def modulus_convexity(space: NormedSpace, eps: float, *, budget: int = 2000,
                      seed: int = 0) -> ModulusEstimate:
    """delta(eps) = inf{1 - |(x+y)/2| : x, y unit, |x-y| >= eps}.

    Exact for Euclidean kinds; otherwise multi-start minimization reported
    as an upper bound (a feasible pair only ever certifies 'delta <= value').
    """
    if not (0.0 < eps <= 2.0):
        raise SpaceError("convexity modulus needs eps in (0, 2]")
    if space.kind == "lp" and space.p == 2 and space.dim >= 2:
        return ModulusEstimate(eps, 1.0 - math.sqrt(max(0.0, 1.0 - eps * eps / 4.0)),
                               "exact", "euclidean-closed-form")
    if space.dim == 1:
        return ModulusEstimate(eps, 1.0, "exact", "dim-1-antipodal")
    if space.kind == "gauge":
        # two sphere points on one flat edge at separation eps have their
        # midpoint on the same edge, so delta(eps) = 0 with no numerics
        for a, b in space.body.flat_edges():
            if space.norm(a - b) >= eps - 1e-12:
                return ModulusEstimate(eps, 0.0, "upper", "flat-edge-pair",
                                       trials=len(space.body.flat_edges()))
    rng = np.random.default_rng(seed)
    best = 1.0
    best_pair = None
    candidates = []
    V = space.ball_vertices()
    if V is not None and len(V) <= 64:
        for i in range(len(V)):
            for j in range(i + 1, len(V)):
                candidates.append((V[i], V[j]))
    tries = 0
    while tries < budget:
        x = space.sphere_point(rng)
        y = space.sphere_point(rng)
        candidates.append((x, y))
        tries += 1
    for x, y in candidates:
        sep = space.norm(x - y)
        if sep < eps - 1e-12:
            continue
        val = 1.0 - space.norm(0.5 * (x + y))
        if val < best:
            best, best_pair = val, (x, y)
    best = _polish_convexity(space, eps, best, best_pair)
    return ModulusEstimate(eps, max(best, 0.0), "upper", "multi-start-min",
                           trials=len(candidates))


def _polish_convexity(space, eps, best, pair):
    if pair is None:
        return best
    from scipy import optimize

    d = space.dim

    def obj(z):
        x = z[:d]
        y = z[d:]
        nx, ny = space.norm(x), space.norm(y)
        if nx < 1e-9 or ny < 1e-9:
            return 1.0
        x, y = x / nx, y / ny
        pen = max(0.0, eps - space.norm(x - y))
        return 1.0 - space.norm(0.5 * (x + y)) + 100.0 * pen * pen

    z0 = np.concatenate(pair)
    res = optimize.minimize(obj, z0, method="Nelder-Mead",
                            options={"maxiter": 4000, "xatol": 1e-12, "fatol": 1e-14})
    x, y = res.x[:d], res.x[d:]
    nx, ny = space.norm(x), space.norm(y)
    if nx < 1e-9 or ny < 1e-9:
        return best
    x, y = x / nx, y / ny
    if space.norm(x - y) >= eps - 1e-9:
        return min(best, 1.0 - space.norm(0.5 * (x + y)))
    return best


def modulus_smoothness(space: NormedSpace, tau: float, *, budget: int = 2000,
                       seed: int = 0) -> ModulusEstimate:
    """rho(tau) = sup{(|x+tau y| + |x-tau y|)/2 - 1 : x unit, y in the ball}.

    Exact for Euclidean kinds; otherwise multi-start maximization reported as
    a lower bound.
    """
    if not (tau > 0.0):
        raise SpaceError("smoothness modulus needs tau > 0")
    if space.kind == "lp" and space.p == 2 and space.dim >= 2:
        return ModulusEstimate(tau, math.sqrt(1.0 + tau * tau) - 1.0,
                               "exact", "euclidean-closed-form")
    if space.dim == 1:
        return ModulusEstimate(tau, max(0.0, tau - 1.0), "exact", "dim-1")

    def value(x, y):
        return 0.5 * (space.norm(x + tau * y) + space.norm(x - tau * y)) - 1.0

    rng = np.random.default_rng(seed)
    cands = []
    for i in range(min(space.dim, 4)):
        for j in range(min(space.dim, 4)):
            if i != j:
                cands.append((_unit(space.dim, i), _unit(space.dim, j)))
    for _ in range(budget):
        cands.append((space.sphere_point(rng), space.sphere_point(rng)))
    best, best_pair = 0.0, None
    for x, y in cands:
        v = value(x, y)
        if v > best:
            best, best_pair = v, (x, y)
    if best_pair is not None:
        from scipy import optimize

        d = space.dim

        def negobj(z):
            x, y = z[:d], z[d:]
            nx = space.norm(x)
            if nx < 1e-9:
                return 1.0
            x = x / nx
            ny = space.norm(y)
            if ny > 1.0:
                y = y / ny
            return -value(x, y)

        res = optimize.minimize(negobj, np.concatenate(best_pair), method="Nelder-Mead",
                                options={"maxiter": 4000, "xatol": 1e-12, "fatol": 1e-14})
        x, y = res.x[:d], res.x[d:]
        nx, ny = space.norm(x), space.norm(y)
        if nx > 1e-9:
            x = x / nx
            if ny > 1.0:
                y = y / ny
            best = max(best, value(x, y))
    return ModulusEstimate(tau, best, "lower", "multi-start-max", trials=len(cands))


def smoothness_defect(space: NormedSpace, *, budget: int = 300, seed: int = 0) -> float:
    """sup over the sphere of the dual-norm diameter of the support set.

    Zero exactly when the norm is smooth.  Closed form 0 for smooth lp kinds,
    exact face enumeration for polytopal balls, and a sampled two-sided
    directional-derivative probe (Richardson-extrapolated) otherwise.
    """
    if space.dim == 1:
        return 0.0
    if space.kind in ("lp", "weighted_lp") and 1 < space.p < math.inf:
        return 0.0
    V = space.ball_vertices()
    if V is not None and space.kind in ("lp", "weighted_lp", "polyhedral"):
        # support faces are largest at ball vertices; diameters in the dual norm
        best = 0.0
        for v in V:
            face = space.support_functionals(v)
            best = max(best, face.diameter(space.dual_norm))
        return best
    return _sampled_defect(space, budget=budget, seed=seed)


def _sampled_defect(space: NormedSpace, *, budget: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    pts = [space.sphere_point(rng) for _ in range(budget)]
    # structured candidates: axis directions and diagonal kink suspects
    for i in range(space.dim):
        e = _unit(space.dim, i)
        pts.append(e / space.norm(e))
    for i in range(space.dim):
        for j in range(i + 1, min(space.dim, i + 3)):
            v = _unit(space.dim, i) + _unit(space.dim, j)
            pts.append(v / space.norm(v))
    if space.kind == "direct_sum":
        for j, c in enumerate(space.children):
            b = c.sphere_point(rng)
            pts.append(space.embed_block(j, b) / space.norm(space.embed_block(j, b)))
    dirs = [_unit(space.dim, i) for i in range(space.dim)]
    dirs += [space.sphere_point(rng) for _ in range(4)]
    best = 0.0
    if space.kind == "gauge":
        def N(v):
            g = space.body.gauge_closed_form(v)
            return g if g is not None else gauge_bisect(space.body, v, rel_tol=1e-14)
    else:
        N = space.norm
    t = 1e-5
    for x in pts:
        n0 = N(x)
        for u in dirs:
            d1 = (N(x + t * u) + N(x - t * u) - 2.0 * n0) / t
            d2 = (N(x + 0.5 * t * u) + N(x - 0.5 * t * u) - 2.0 * n0) / (0.5 * t)
            spread = 2.0 * d2 - d1  # Richardson: kills the O(t) smooth term
            if spread > best:
                best = spread
    return max(best, 0.0)
