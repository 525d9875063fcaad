"""Correction certificates: serializable, independently re-verifiable records.

A certificate stores everything needed to replay its claims from oracles
alone: the input object and point, the corrected object, the attainment and
unit-norm residuals, the achieved distance, and the strict bound it was
certified against.  Verification lives in :mod:`bpbpp.verify`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

ATTAINMENT_TOL = 1e-8
UNIT_NORM_TOL = 1e-9
STRICT_SLACK = 1e-10


def _listify(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (list, tuple)):
        return [_listify(v) for v in x]
    return x


@dataclass
class BpbCertificate:
    """Verified record emitted by every correction operation."""

    kind: str                      # which correction produced it
    domain: dict                   # space descriptor of X
    codomain: dict | str           # descriptor of Y, or "scalar"
    point: list                    # base point(s); pair for bilinear kinds
    original: list                 # input functional / matrix / tensor
    corrected: list                # output functional / matrix / tensor
    epsilon: float
    distance: float
    distance_bound: float          # the strict bound certified (eps, 2 eps, 3 eps)
    attainment_residual: float
    unit_norm_residual: float
    eta: float | None = None
    eta_provenance: str | None = None
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def holds(self) -> bool:
        """Self-consistency of the stored numbers (no oracle calls)."""
        return (self.attainment_residual <= ATTAINMENT_TOL
                and self.unit_norm_residual <= UNIT_NORM_TOL
                and self.distance < self.distance_bound + STRICT_SLACK)

    def to_payload(self) -> dict:
        d = asdict(self)
        d["point"] = _listify(self.point)
        d["original"] = _listify(self.original)
        d["corrected"] = _listify(self.corrected)
        return d

    @classmethod
    def from_payload(cls, payload: dict) -> "BpbCertificate":
        fields = {k: payload[k] for k in cls.__dataclass_fields__ if k in payload}
        return cls(**fields)


class CorrectionRejected(RuntimeError):
    """A correction refused to emit a certificate; carries the reason."""

    def __init__(self, reason: str, **diagnostics):
        super().__init__(reason)
        self.reason = reason
        self.diagnostics = diagnostics
