"""The color adjustment block: a white-point-preserving 3x3 matrix.

Six free parameters are the off-diagonal entries (phi_12, phi_13, phi_21,
phi_23, phi_31, phi_32). Each diagonal entry is derived as
1 - (sum of that row's off-diagonals), so every row sums to 1 by
construction and neutral pixels (R=G=B) are exact fixed points.

Both the off-diagonals and each row's derived diagonal deviation are kept
inside [-tau, tau] by `project`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, MatrixFormatError, RowSumError
from .image import RgbImage

# Canonical ordering of the free parameters.
PHI_KEYS = ("12", "13", "21", "23", "31", "32")

# Row index -> positions of its two off-diagonals in the flat 6-vector.
_ROW_SLOTS = ((0, 1), (2, 3), (4, 5))


@dataclass(frozen=True)
class CcmParams:
    """Six off-diagonal deviations plus the clip level tau."""

    off_diag: np.ndarray
    tau: float = 0.25

    def __post_init__(self):
        v = np.asarray(self.off_diag, dtype=np.float64).reshape(-1)
        if v.shape != (6,):
            raise ValueError(f"off_diag must have 6 entries, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("off_diag must be finite")
        if not (self.tau > 0):
            raise ValueError("tau must be > 0")
        object.__setattr__(self, "off_diag", v.copy())
        object.__setattr__(self, "tau", float(self.tau))

    @classmethod
    def zeros(cls, tau: float = 0.25) -> "CcmParams":
        return cls(np.zeros(6), tau)

    def is_feasible(self, atol: float = 0.0) -> bool:
        bound = self.tau + atol
        if np.any(np.abs(self.off_diag) > bound):
            return False
        for a, b in _ROW_SLOTS:
            if abs(self.off_diag[a] + self.off_diag[b]) > bound:
                return False
        return True

    def replace(self, off_diag) -> "CcmParams":
        return CcmParams(off_diag, self.tau)

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in zip(PHI_KEYS, self.off_diag)}


@dataclass(frozen=True)
class CcmMatrix:
    """Materialized 3x3 matrix, row-major; every row sums to 1."""

    m: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.m, dtype=np.float64)
        if a.shape != (3, 3):
            raise ValueError(f"matrix must be 3x3, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix must be finite")
        object.__setattr__(self, "m", a.copy())

    def row_sums(self) -> np.ndarray:
        return self.m.sum(axis=1)


def materialize(params: CcmParams) -> CcmMatrix:
    """Build the 3x3 matrix: M_ij = phi_ij off-diagonal, M_ii = 1 - row sum."""
    p = params.off_diag
    m = np.array([
        [1.0 - (p[0] + p[1]), p[0], p[1]],
        [p[2], 1.0 - (p[2] + p[3]), p[3]],
        [p[4], p[5], 1.0 - (p[4] + p[5])],
    ])
    return CcmMatrix(m)


def apply(matrix: CcmMatrix, img: RgbImage) -> RgbImage:
    """Per-pixel linear transform out_i = sum_j M_ij * in_j. No clamping."""
    out = np.einsum("ij,jhw->ihw", matrix.m, img.samples)
    return RgbImage(out)


def project(params: CcmParams) -> CcmParams:
    """Project onto the feasible set: box clip, then proportional row rescale.

    Step 1 clamps each off-diagonal to [-tau, tau]. Step 2 rescales each
    row's pair radially whenever the derived diagonal deviation
    |phi_ij + phi_ik| exceeds tau. The rescale loop runs to a fixed point
    so the result is feasible in exact float arithmetic and projecting
    twice is bit-identical to projecting once.
    """
    tau = params.tau
    v = np.clip(params.off_diag, -tau, tau)
    for a, b in _ROW_SLOTS:
        s = abs(v[a] + v[b])
        while s > tau:
            scale = tau / s
            v[a] *= scale
            v[b] *= scale
            s = abs(v[a] + v[b])
    return params.replace(v)


def pullback(img: RgbImage, cotangent: RgbImage) -> np.ndarray:
    """Adjoint of apply(materialize(phi), img) in the six free parameters.

    Given G = dL/d(output), returns dL/dphi_ij = sum_p G_i(p) * (X_j(p) - X_i(p))
    in PHI_KEYS order.
    """
    if cotangent.samples.shape != img.samples.shape:
        raise DimensionMismatchError(
            f"cotangent shape {cotangent.samples.shape} != image shape "
            f"{img.samples.shape}")
    x = img.samples
    g = cotangent.samples
    grads = np.empty(6)
    for slot, key in enumerate(PHI_KEYS):
        i = int(key[0]) - 1
        j = int(key[1]) - 1
        grads[slot] = np.sum(g[i] * (x[j] - x[i]))
    return grads


def matrix_to_json(matrix: CcmMatrix, params: CcmParams) -> str:
    """Serialize to the export schema: version, row-major matrix, phi, tau."""
    doc = {
        "version": 1,
        "matrix": [[float(v) for v in row] for row in matrix.m],
        "phi": params.as_dict(),
        "tau": params.tau,
    }
    return json.dumps(doc, sort_keys=True)


def matrix_from_json(text: str, row_sum_tol: float = 1e-6) -> CcmMatrix:
    """Parse the export schema; enforces unit row sums within row_sum_tol."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise MatrixFormatError("missing 'matrix' field")
    try:
        m = np.asarray(doc["matrix"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError(f"matrix is not numeric: {exc}") from exc
    if m.shape != (3, 3):
        raise MatrixFormatError(f"matrix must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MatrixFormatError("matrix entries must be finite")
    sums = m.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > row_sum_tol):
        raise RowSumError(
            f"rows must sum to 1 within {row_sum_tol}, got {sums.tolist()}")
    return CcmMatrix(m)
