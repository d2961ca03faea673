"""Precomputed per-region embedding stores and their on-disk catalog.

Binary layout of embeddings.bin / raw_embeddings.bin (little-endian):

    magic "S2CEMB1" (7 bytes), format_version u8,
    rows u32, cols u32, dim u32,                     -> 20-byte header
    rows*cols*dim float32 values, row-major (row 0 = north).

manifest.json sits alongside with the spec and sha256 checksums of both
binary files. Combined embeddings are unit-norm; raw_embeddings.bin keeps the
pre-normalization overhead outputs so queries can re-condition on a different
date-time without re-fetching tiles.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import shutil
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .encoders.metadata import encode_metadata_batch
from .encoders.model import CrossViewModel
from .errors import DomainError, NotFoundError, StoreFormatError, TileFetchError
from .geodata.providers import TileCache, TileProvider, crop_centered_patch
from .geodata.tilemath import build_grid
from .geodata.types import CaptureTime, RegionSpec, TileGrid

STORE_MAGIC = b"S2CEMB1"
STORE_FORMAT_VERSION = 1
_HEADER = struct.Struct("<BIII")  # version, rows, cols, dim (after the 7-byte magic)

EMBEDDINGS_FILE = "embeddings.bin"
RAW_EMBEDDINGS_FILE = "raw_embeddings.bin"
MANIFEST_FILE = "manifest.json"
STATUS_FILE = "status.json"


@dataclass
class RegionStore:
    """A ready (or in-flight) grid of precomputed overhead embeddings."""

    region_id: str
    spec: RegionSpec
    rows: int
    cols: int
    embeddings: np.ndarray | None = None  # (rows*cols, d) float32, unit rows
    raw_embeddings: np.ndarray | None = None  # (rows*cols, d) float32, pre-norm
    meta: CaptureTime | None = None
    status: str = "pending"  # pending | ready | failed
    created_at: str = ""
    errors: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if not self.created_at:
            self.created_at = _dt.datetime.now(_dt.timezone.utc).isoformat()
        if self.status == "ready":
            self._check_ready()

    def _check_ready(self) -> None:
        if self.embeddings is None or self.embeddings.shape != (self.rows * self.cols, self.dim):
            raise DomainError("ready store must hold rows*cols embedding rows")
        norms = np.linalg.norm(self.embeddings, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-5):
            raise DomainError("ready store rows must be unit-norm")

    @property
    def dim(self) -> int:
        if self.embeddings is None:
            raise DomainError("store has no embeddings yet")
        return self.embeddings.shape[1]

    @property
    def grid(self) -> TileGrid:
        return build_grid(self.spec)


@dataclass(frozen=True)
class StoreManifest:
    format_version: int
    region_id: str
    spec: RegionSpec
    rows: int
    cols: int
    dim: int
    checksum: str
    raw_checksum: str | None
    meta: dict | None
    created_at: str

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "region_id": self.region_id,
            "spec": self.spec.to_dict(),
            "rows": self.rows,
            "cols": self.cols,
            "dim": self.dim,
            "checksum": self.checksum,
            "raw_checksum": self.raw_checksum,
            "meta": self.meta,
            "created_at": self.created_at,
        }


def _pack_embeddings(arr: np.ndarray, rows: int, cols: int) -> bytes:
    data = np.ascontiguousarray(arr, dtype="<f4")
    header = STORE_MAGIC + _HEADER.pack(STORE_FORMAT_VERSION, rows, cols, data.shape[1])
    return header + data.tobytes()


def _unpack_embeddings(blob: bytes) -> tuple[np.ndarray, int, int]:
    if len(blob) < len(STORE_MAGIC) + _HEADER.size:
        raise StoreFormatError("file shorter than the store header")
    if blob[: len(STORE_MAGIC)] != STORE_MAGIC:
        raise StoreFormatError(f"bad magic {blob[:len(STORE_MAGIC)]!r}")
    version, rows, cols, dim = _HEADER.unpack_from(blob, len(STORE_MAGIC))
    if version != STORE_FORMAT_VERSION:
        raise StoreFormatError(f"unsupported store format version {version}")
    payload = blob[len(STORE_MAGIC) + _HEADER.size :]
    expected = rows * cols * dim * 4
    if len(payload) != expected:
        raise StoreFormatError(f"payload is {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(rows * cols, dim).copy()
    return arr, rows, cols


def _meta_dict(meta: CaptureTime | None) -> dict | None:
    if meta is None:
        return None
    return {"year": meta.year, "month": meta.month, "day": meta.day, "hour": meta.hour}


def _meta_from_dict(d: dict | None) -> CaptureTime | None:
    if d is None:
        return None
    return CaptureTime(d["year"], d["month"], d["day"], d["hour"])


def save_store(store: RegionStore, path: str | Path) -> Path:
    """Write embeddings.bin (+ raw_embeddings.bin) and manifest.json into a
    directory; the round trip through load_store is bit-exact."""
    if store.status != "ready":
        raise DomainError(f"only ready stores can be saved, status is {store.status!r}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    blob = _pack_embeddings(store.embeddings, store.rows, store.cols)
    (path / EMBEDDINGS_FILE).write_bytes(blob)
    raw_checksum = None
    if store.raw_embeddings is not None:
        raw_blob = _pack_embeddings(store.raw_embeddings, store.rows, store.cols)
        (path / RAW_EMBEDDINGS_FILE).write_bytes(raw_blob)
        raw_checksum = hashlib.sha256(raw_blob).hexdigest()
    manifest = StoreManifest(
        format_version=STORE_FORMAT_VERSION,
        region_id=store.region_id,
        spec=store.spec,
        rows=store.rows,
        cols=store.cols,
        dim=store.dim,
        checksum=hashlib.sha256(blob).hexdigest(),
        raw_checksum=raw_checksum,
        meta=_meta_dict(store.meta),
        created_at=store.created_at,
    )
    _atomic_write_text(path / MANIFEST_FILE, json.dumps(manifest.to_dict(), indent=2))
    _write_status(path, "ready")
    return path


def load_store(path: str | Path) -> RegionStore:
    """Load and checksum-verify a saved store directory."""
    path = Path(path)
    manifest_path = path / MANIFEST_FILE
    if not manifest_path.exists():
        raise StoreFormatError(f"no manifest at {manifest_path}")
    m = json.loads(manifest_path.read_text(encoding="utf-8"))
    if m.get("format_version") != STORE_FORMAT_VERSION:
        raise StoreFormatError(f"unsupported manifest version {m.get('format_version')!r}")
    blob = (path / EMBEDDINGS_FILE).read_bytes()
    if hashlib.sha256(blob).hexdigest() != m["checksum"]:
        raise StoreFormatError("embeddings.bin checksum mismatch (truncated or corrupt)")
    embeddings, rows, cols = _unpack_embeddings(blob)
    if rows != m["rows"] or cols != m["cols"] or embeddings.shape[1] != m["dim"]:
        raise StoreFormatError("manifest grid shape disagrees with binary header")
    raw = None
    raw_path = path / RAW_EMBEDDINGS_FILE
    if m.get("raw_checksum") and raw_path.exists():
        raw_blob = raw_path.read_bytes()
        if hashlib.sha256(raw_blob).hexdigest() != m["raw_checksum"]:
            raise StoreFormatError("raw_embeddings.bin checksum mismatch")
        raw, _, _ = _unpack_embeddings(raw_blob)
    return RegionStore(
        region_id=m["region_id"],
        spec=RegionSpec.from_dict(m["spec"]),
        rows=rows,
        cols=cols,
        embeddings=embeddings,
        raw_embeddings=raw,
        meta=_meta_from_dict(m.get("meta")),
        status="ready",
        created_at=m.get("created_at", ""),
    )


def _atomic_write_text(path: Path, text: str) -> None:
    """Readers polling these files must never see a torn write."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _write_status(path: Path, status: str, errors: list[dict] | None = None) -> None:
    path.mkdir(parents=True, exist_ok=True)
    payload = {"status": status, "updated_at": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    if errors:
        payload["errors"] = errors
    _atomic_write_text(path / STATUS_FILE, json.dumps(payload, indent=2))


def _read_status(path: Path) -> dict:
    status_path = path / STATUS_FILE
    try:
        return json.loads(status_path.read_text(encoding="utf-8"))
    except (FileNotFoundError, json.JSONDecodeError):
        return {"status": "pending"}


def combine_rows(model: CrossViewModel, raw: np.ndarray, grid: TileGrid, meta: CaptureTime | None) -> np.ndarray:
    """normalize(raw + dynamic(meta per cell)) rows; plain normalize without meta."""
    raw_t = torch.from_numpy(np.ascontiguousarray(raw, dtype=np.float32))
    if meta is not None:
        if model.dynamic is None:
            raise DomainError("metadata conditioning requested but model has no dynamic encoder")
        centers = [grid.cell_center(i // grid.cols, i % grid.cols) for i in range(raw.shape[0])]
        feats = torch.from_numpy(encode_metadata_batch(centers, [meta] * len(centers)))
        with torch.no_grad():
            combined = model.combined(raw_t, feats, use_meta=True)
    else:
        with torch.no_grad():
            combined = model.combined(raw_t, None, use_meta=False)
    return combined.numpy().astype(np.float32)


def precompute_region(
    spec: RegionSpec,
    model: CrossViewModel,
    provider: TileProvider,
    region_dir: str | Path,
    region_id: str | None = None,
    meta: CaptureTime | None = None,
    batch_size: int = 32,
    attempts: int = 3,
    backoff_s: float = 0.05,
) -> RegionStore:
    """Fetch + embed every grid cell, resumably, into region_dir.

    Progress (raw rows embedded so far) is flushed after every batch; a rerun
    resumes at the first missing cell, so an interrupted-then-resumed run
    produces bit-identical output to an uninterrupted one. On provider failure
    beyond retries the store is marked failed with a per-cell error list.
    """
    region_dir = Path(region_dir)
    region_dir.mkdir(parents=True, exist_ok=True)
    region_id = region_id or derive_region_id("region", spec)
    if (region_dir / MANIFEST_FILE).exists():
        try:
            return load_store(region_dir)  # idempotent: already ready
        except StoreFormatError:
            pass
    grid = build_grid(spec)
    n = grid.n_cells
    cache = TileCache(region_dir / "tiles")
    partial_path = region_dir / "partial_raw.npy"
    progress_path = region_dir / "progress.json"
    done = 0
    raw_rows: list[np.ndarray] = []
    if partial_path.exists() and progress_path.exists():
        done = json.loads(progress_path.read_text())["done"]
        partial = np.load(partial_path)
        raw_rows = [partial[i] for i in range(done)]
    _write_status(region_dir, "pending")

    errors: list[dict] = []
    idx = done
    while idx < n:
        batch_refs = []
        batch_end = min(idx + batch_size, n)
        try:
            for i in range(idx, batch_end):
                r, c = divmod(i, grid.cols)
                center_px = grid.cell_center_px(r, c)
                patch = crop_centered_patch(
                    provider,
                    center_px,
                    spec.zoom,
                    spec.tile_px,
                    cache=cache,
                    attempts=attempts,
                    backoff_s=backoff_s,
                )
                batch_refs.append(patch)
        except TileFetchError as exc:
            r, c = divmod(idx + len(batch_refs), grid.cols)
            errors.append({"cell": [r, c], "error": str(exc)})
            _flush_partial(partial_path, progress_path, raw_rows)
            _write_status(region_dir, "failed", errors)
            return RegionStore(
                region_id=region_id, spec=spec, rows=grid.rows, cols=grid.cols,
                status="failed", errors=errors,
            )
        _, raw = model.embed_tiles(batch_refs, return_raw=True)
        raw_rows.extend(raw.astype(np.float32))
        idx = batch_end
        _flush_partial(partial_path, progress_path, raw_rows)

    raw_all = np.stack(raw_rows)
    combined = combine_rows(model, raw_all, grid, meta)
    store = RegionStore(
        region_id=region_id,
        spec=spec,
        rows=grid.rows,
        cols=grid.cols,
        embeddings=combined,
        raw_embeddings=raw_all,
        meta=meta,
        status="ready",
    )
    save_store(store, region_dir)
    partial_path.unlink(missing_ok=True)
    progress_path.unlink(missing_ok=True)
    return store


def _flush_partial(partial_path: Path, progress_path: Path, raw_rows: list[np.ndarray]) -> None:
    if not raw_rows:
        return
    tmp = partial_path.with_suffix(".tmp.npy")
    np.save(tmp, np.stack(raw_rows))
    tmp.replace(partial_path)
    _atomic_write_text(progress_path, json.dumps({"done": len(raw_rows)}))


def derive_region_id(name: str, spec: RegionSpec) -> str:
    digest = hashlib.sha256(f"{name}|{json.dumps(spec.to_dict(), sort_keys=True)}".encode()).hexdigest()
    return digest[:12]


class Catalog:
    """Directory of region stores: <root>/<region_id>/{manifest,status,bins}."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def region_dir(self, region_id: str) -> Path:
        return self.root / region_id

    def list(self) -> list[dict]:
        entries = []
        for child in sorted(self.root.iterdir()):
            if not child.is_dir():
                continue
            status = _read_status(child)
            entry = {"region_id": child.name, "status": status.get("status", "pending")}
            manifest_path = child / MANIFEST_FILE
            if manifest_path.exists():
                m = json.loads(manifest_path.read_text(encoding="utf-8"))
                entry["spec"] = m["spec"]
                entry["rows"], entry["cols"] = m["rows"], m["cols"]
            elif (child / "spec.json").exists():
                entry["spec"] = json.loads((child / "spec.json").read_text(encoding="utf-8"))
            entries.append(entry)
        return entries

    def status(self, region_id: str) -> dict:
        path = self.region_dir(region_id)
        if not path.exists():
            raise NotFoundError(region_id)
        return _read_status(path)

    def get(self, region_id: str) -> RegionStore:
        path = self.region_dir(region_id)
        if not path.exists():
            raise NotFoundError(region_id)
        return load_store(path)

    def delete(self, region_id: str) -> None:
        path = self.region_dir(region_id)
        if not path.exists():
            raise NotFoundError(region_id)
        shutil.rmtree(path)

    def note_spec(self, region_id: str, spec: RegionSpec) -> None:
        """Record the spec before ingestion finishes so listings can show it."""
        path = self.region_dir(region_id)
        path.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(path / "spec.json", json.dumps(spec.to_dict()))

    def mark(self, region_id: str, status: str, errors: list[dict] | None = None) -> None:
        _write_status(self.region_dir(region_id), status, errors)

    def ingest(
        self,
        name: str,
        spec: RegionSpec,
        model: CrossViewModel,
        provider: TileProvider,
        meta: CaptureTime | None = None,
        **precompute_kwargs,
    ) -> RegionStore:
        """Synchronous ingest; returns the (ready or failed) store."""
        region_id = derive_region_id(name, spec)
        self.note_spec(region_id, spec)
        return precompute_region(
            spec,
            model,
            provider,
            region_dir=self.region_dir(region_id),
            region_id=region_id,
            meta=meta,
            **precompute_kwargs,
        )
