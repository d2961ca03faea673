"""Embedding vector type and normalization helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

UNIT_NORM_TOL = 1e-6
_CANCEL_EPS = 1e-12


def l2_normalize(vec: np.ndarray, axis: int = -1) -> np.ndarray:
    """L2-normalize along an axis; raises on (near-)zero vectors."""
    vec = np.asarray(vec, dtype=np.float64) if vec.dtype == np.float64 else np.asarray(vec, dtype=np.float32)
    norms = np.linalg.norm(vec, axis=axis, keepdims=True)
    if np.any(norms < _CANCEL_EPS):
        raise DomainError("cannot normalize a zero vector")
    return vec / norms


@dataclass(frozen=True)
class Embedding:
    """A d-dimensional vector, optionally tagged as unit-norm."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise DomainError(f"embedding must be 1-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("embedding contains non-finite values")
        if self.normalized and abs(float(np.linalg.norm(values)) - 1.0) > UNIT_NORM_TOL:
            raise DomainError(f"normalized embedding has norm {np.linalg.norm(values)}")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def unit(cls, values: np.ndarray) -> "Embedding":
        return cls(values=l2_normalize(np.asarray(values)), normalized=True)

    @classmethod
    def raw(cls, values: np.ndarray) -> "Embedding":
        return cls(values=np.asarray(values), normalized=False)


def combine(overhead_raw: Embedding, dynamic_out: Embedding | None, use_meta: bool) -> Embedding:
    """Element-wise add the dynamic output onto the raw overhead vector, then
    L2-normalize; with use_meta off the dynamic output is ignored entirely.

    Exact cancellation (sum is the zero vector) is rejected rather than
    producing NaNs.
    """
    if use_meta and dynamic_out is not None:
        if dynamic_out.dim != overhead_raw.dim:
            raise DomainError(f"dimension mismatch: overhead {overhead_raw.dim} vs dynamic {dynamic_out.dim}")
        summed = overhead_raw.values + dynamic_out.values
    else:
        summed = overhead_raw.values
    return Embedding.unit(summed)
