"""Text query -> similarity grid -> normalized, clipped heatmap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encoders.model import CrossViewModel
from ..errors import DomainError
from ..geodata.tilemath import build_grid
from ..geodata.types import CaptureTime, GeoLocation, RegionSpec
from ..mapstore import RegionStore, combine_rows

# raw similarities landing within this of the 0.5 cut (after min-max) are
# snapped to exactly 0.5: float subtraction noise must not flip a midpoint
# value across the clip threshold
_HALF_SNAP = 1e-9


@dataclass(frozen=True)
class QueryRequest:
    """A text prompt plus optional date-time conditioning for one region."""

    text: str
    region_id: str = ""
    time: CaptureTime | None = None
    use_meta: bool = False
    raw: bool = False

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise DomainError("query text must be non-empty")


@dataclass
class Heatmap:
    """Per-cell values over a region grid.

    After normalize+clip every value is either 0 or in [0.5, 1]; with
    raw=True the values are unclipped cosine similarities instead.
    """

    values: np.ndarray  # (rows, cols)
    spec: RegionSpec
    query: str
    meta: CaptureTime | None = None
    raw: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise DomainError(f"heatmap grid must be 2-D and non-empty, got {self.values.shape}")
        if not self.raw:
            ok = (self.values == 0.0) | ((self.values >= 0.5) & (self.values <= 1.0))
            if not np.all(ok):
                raise DomainError("heatmap values must lie in {0} union [0.5, 1]")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def argmax_cell(self) -> tuple[int, int]:
        flat = int(np.argmax(self.values))  # ties: smallest row-major index
        return divmod(flat, self.cols)

    @property
    def argmax_location(self) -> GeoLocation:
        r, c = self.argmax_cell
        return build_grid(self.spec).cell_center(r, c)


def normalize_and_clip(similarities: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1], then zero out values below 0.5.

    A constant grid has no min-max scale and maps to all zeros. Values within
    1e-9 of the 0.5 boundary are snapped onto it before clipping.
    """
    sims = np.asarray(similarities, dtype=np.float64)
    lo, hi = float(sims.min()), float(sims.max())
    if hi - lo <= 1e-12:
        return np.zeros_like(sims)
    v = (sims - lo) / (hi - lo)
    v[np.abs(v - 0.5) < _HALF_SNAP] = 0.5
    v[v < 0.5] = 0.0
    return v


def query_heatmap(
    store: RegionStore,
    req: QueryRequest,
    model: CrossViewModel,
    text_adapter,
) -> Heatmap:
    """Cosine similarity of the text embedding against every cell embedding.

    With use_meta + a capture time, cells are re-conditioned on the fly from
    the stored raw overhead vectors (required to be present).
    """
    if store.status != "ready":
        raise DomainError(f"store {store.region_id} is not ready (status {store.status!r})")
    if req.use_meta and req.time is not None:
        if store.raw_embeddings is None:
            raise DomainError("metadata conditioning needs raw_embeddings.bin in the store")
        cells = combine_rows(model, store.raw_embeddings, store.grid, req.time)
    else:
        cells = store.embeddings
    text_vec = text_adapter.embed_texts([req.text])[0].astype(np.float64)
    text_vec /= np.linalg.norm(text_vec)
    if cells.shape[1] != text_vec.shape[0]:
        raise DomainError(
            f"store dimension {cells.shape[1]} does not match text encoder dimension {text_vec.shape[0]}"
        )
    cell_mat = cells.astype(np.float64)
    cell_mat = cell_mat / np.linalg.norm(cell_mat, axis=1, keepdims=True)
    sims = (cell_mat @ text_vec).reshape(store.rows, store.cols)
    values = sims if req.raw else normalize_and_clip(sims)
    return Heatmap(
        values=values,
        spec=store.spec,
        query=req.text,
        meta=req.time if req.use_meta else None,
        raw=req.raw,
    )


def localize(heatmap: Heatmap) -> tuple[tuple[int, int], GeoLocation]:
    """Highest-activation cell and its center; ties take the smallest
    row-major index."""
    return heatmap.argmax_cell, heatmap.argmax_location
