"""Offline re-verification of certificates and witnesses.

Reconstructs spaces and objects from serialized payloads and replays every
claim through the norm oracles alone: no correction or adversarial search
runs here.
"""
from __future__ import annotations

import numpy as np

from .bilinear import BilinearMap, bilinear_norm, make_form
from .certificates import ATTAINMENT_TOL, STRICT_SLACK, UNIT_NORM_TOL, BpbCertificate
from .operators import Operator, make_operator, op_norm
from .spaces import make_space, scalar_space


def _space(desc):
    return scalar_space() if desc == "scalar" else make_space(desc)


def verify_certificate(payload: dict, budget: int = 2000) -> tuple[bool, dict]:
    """Recompute a certificate's residuals and distance from its payload."""
    cert = BpbCertificate.from_payload(payload) if not isinstance(payload, BpbCertificate) else payload
    dom = _space(cert.domain)
    kind = cert.kind
    report = {"kind": kind}
    if kind == "functional-point":
        x0 = np.asarray(cert.point, dtype=float)
        x1 = np.asarray(cert.corrected, dtype=float)
        x0s = np.asarray(cert.original, dtype=float)
        attain = abs(abs(float(x1 @ x0)) - 1.0)
        unit = abs(dom.dual_norm(x1) - 1.0)
        dist = dom.dual_norm(x1 - x0s)
    elif kind in ("operator-beta", "operator-hilbert", "operator-ck",
                  "operator-lp-rank-one"):
        cod = _space(cert.codomain)
        x0 = np.asarray(cert.point, dtype=float)
        U = make_operator(np.asarray(cert.corrected, dtype=float), dom, cod)
        T = make_operator(np.asarray(cert.original, dtype=float), dom, cod)
        val = op_norm(U, budget=budget).value
        attain = abs(cod.norm(U.matrix @ x0) - val)
        unit = abs(val - 1.0)
        dist = op_norm(Operator(U.matrix - T.matrix, dom, cod), budget=budget).value
    elif kind in ("bilinear-xh", "bilinear-beta"):
        x0 = np.asarray(cert.point[0], dtype=float)
        y0 = np.asarray(cert.point[1], dtype=float)
        A = np.asarray(cert.corrected, dtype=float)
        B = np.asarray(cert.original, dtype=float)
        if kind == "bilinear-xh":
            ys = _space(cert.codomain)
            Am = make_form(A[0], dom, ys)
            Bm = make_form(B[0], dom, ys)
            attain = abs(abs(float(Am.value(x0, y0)[0])) - 1.0)
        else:
            zs = _space(cert.codomain)
            ys = _space(cert.diagnostics["y_space"])
            Am = BilinearMap(A, dom, ys, zs)
            Bm = BilinearMap(B, dom, ys, zs)
            attain = abs(zs.norm(Am.value(x0, y0)) -
                         bilinear_norm(Am, budget=budget).value)
        val = bilinear_norm(Am, budget=budget).value
        unit = abs(val - 1.0)
        dist = bilinear_norm(Am.minus(Bm), budget=budget).value
        if kind == "bilinear-xh":
            attain = max(attain, abs(val - abs(float(Am.value(x0, y0)[0]))))
    elif kind == "bilinear-ck-field":
        ys = _space(cert.codomain)
        x0 = np.asarray(cert.point[0], dtype=float)
        y0 = np.asarray(cert.point[1], dtype=float)
        orig = [make_form(np.asarray(m, dtype=float), dom, ys) for m in cert.original]
        corr = [make_form(np.asarray(m, dtype=float), dom, ys) for m in cert.corrected]
        norms = [bilinear_norm(f, budget=budget).value for f in corr]
        val = max(norms)
        peak = max(abs(f.scalar(x0, y0)) for f in corr)
        attain = abs(peak - val)
        unit = abs(val - 1.0)
        dist = max(bilinear_norm(c.minus(o), budget=budget).value
                   for c, o in zip(corr, orig))
    else:
        return False, {"error": f"unknown certificate kind {kind!r}"}
    report.update({
        "attainment_residual": float(attain),
        "unit_norm_residual": float(unit),
        "distance": float(dist),
        "distance_bound": cert.distance_bound,
        "stored_distance": cert.distance,
    })
    ok = (attain <= ATTAINMENT_TOL
          and unit <= UNIT_NORM_TOL
          and dist < cert.distance_bound + STRICT_SLACK
          and abs(dist - cert.distance) <= 1e-7)
    return ok, report


def verify_witness(payload: dict) -> tuple[bool, dict]:
    """Replay a failure witness: gap and certified distance from scratch."""
    from .probe import FailureWitness

    w = payload if isinstance(payload, FailureWitness) else FailureWitness(**payload)
    rep = w.replay()
    ok = (rep["gap_error"] <= 1e-8 and rep["distance_error"] <= 1e-8
          and abs(rep["norm"] - 1.0) <= 1e-9
          and rep["distance"] >= w.epsilon - 1e-8)
    return ok, rep
