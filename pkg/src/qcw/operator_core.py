"""The 2x2 Hermitian price operator and its closed-form eigen-decomposition.

The operator's two real eigenvalues are the ask and bid prices attainable at
the next trade. Their half-sum is the mid price and their difference the
bid-ask spread, so the decomposition is the bridge from matrix elements to
quoted levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .wave_dynamics import StateVector

__all__ = [
    "PriceOperator2",
    "PriceLevels",
    "eigenprices",
    "eigenprices_batch",
    "eigenvectors",
]


@dataclass(frozen=True)
class PriceOperator2:
    """Hermitian 2x2 price operator.

    Only the upper triangle is stored: the (2,1) element is implicitly
    conj(s12) and the diagonal is real, so Hermiticity holds by construction.
    s12 is kept complex even though the default model draws it real; nothing
    downstream assumes a zero imaginary part.
    """

    s11: float
    s22: float
    s12: complex = 0.0

    def __post_init__(self):
        s11 = float(self.s11)
        s22 = float(self.s22)
        s12 = complex(self.s12)
        if not (math.isfinite(s11) and math.isfinite(s22)):
            raise ValidationError("diagonal elements must be finite real prices")
        if not (math.isfinite(s12.real) and math.isfinite(s12.imag)):
            raise ValidationError("coupling element must be finite")
        object.__setattr__(self, "s11", s11)
        object.__setattr__(self, "s22", s22)
        object.__setattr__(self, "s12", s12)

    def matrix(self) -> np.ndarray:
        """Dense complex form [[s11, s12], [conj(s12), s22]]."""
        return np.array(
            [[self.s11, self.s12], [self.s12.conjugate(), self.s22]], dtype=complex
        )


@dataclass(frozen=True)
class PriceLevels:
    """Snapshot of the quoted levels derived from one operator.

    Invariants: s_ask >= s_bid, delta = s_ask - s_bid >= 0 and
    s_mid = (s_ask + s_bid) / 2 to arithmetic precision.
    """

    s_ask: float
    s_bid: float
    s_mid: float
    delta: float


def eigenprices(op: PriceOperator2) -> PriceLevels:
    """Eigenvalues of the price operator as ask/bid levels.

    s_ask/bid = (s11+s22)/2 +- sqrt(((s11-s22)/2)^2 + |s12|^2), i.e. the two
    prices sit symmetrically around the mid (half-trace) separated by the
    spread delta = sqrt((s11-s22)^2 + 4|s12|^2).
    """
    half_diff = 0.5 * (op.s11 - op.s22)
    half_delta = math.hypot(half_diff, abs(op.s12))
    s_mid = 0.5 * (op.s11 + op.s22)
    return PriceLevels(
        s_ask=s_mid + half_delta,
        s_bid=s_mid - half_delta,
        s_mid=s_mid,
        delta=2.0 * half_delta,
    )


def eigenprices_batch(s11, s22, s12):
    """Vectorized :func:`eigenprices` over arrays of matrix elements.

    Returns (s_ask, s_bid, s_mid, delta) as ndarrays. Same formula as the
    scalar path; used for bulk sweeps where per-call overhead matters.
    """
    s11 = np.asarray(s11, dtype=float)
    s22 = np.asarray(s22, dtype=float)
    half_diff = 0.5 * (s11 - s22)
    half_delta = np.hypot(half_diff, np.abs(s12))
    s_mid = 0.5 * (s11 + s22)
    return s_mid + half_delta, s_mid - half_delta, s_mid, 2.0 * half_delta


def _unit_eigenvector(op: PriceOperator2, s: float) -> StateVector:
    """Normalized eigenvector of ``op`` for eigenvalue ``s``.

    Two candidate null vectors of (op - s*I) exist, one per matrix row; the
    larger one is kept for numerical stability. Phase convention: the first
    component is made real and nonnegative (second component, if the first
    vanishes), which pins the otherwise arbitrary overall phase.
    """
    v1 = (op.s12, complex(s - op.s11))
    v2 = (complex(s - op.s22), op.s12.conjugate())
    n1 = abs(v1[0]) ** 2 + abs(v1[1]) ** 2
    n2 = abs(v2[0]) ** 2 + abs(v2[1]) ** 2
    a, b = v1 if n1 >= n2 else v2
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    a /= norm
    b /= norm
    anchor = a if abs(a) > 1e-12 else b
    phase = anchor / abs(anchor)
    return StateVector(a / phase, b / phase)


def eigenvectors(op: PriceOperator2) -> tuple[StateVector, StateVector]:
    """Unit eigenvectors (ask first) of the price operator.

    The two vectors are orthogonal; on the degenerate single-price operator
    (delta = 0) any orthonormal pair qualifies, so the canonical basis
    ((1,0), (0,1)) is returned for determinism.
    """
    levels = eigenprices(op)
    if levels.delta == 0.0:
        return StateVector(1.0, 0.0), StateVector(0.0, 1.0)
    return _unit_eigenvector(op, levels.s_ask), _unit_eigenvector(op, levels.s_bid)
