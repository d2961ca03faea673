import hashlib

import numpy as np
import pytest

from groundcast.encoders import CrossViewModel, toy_encoder_config
from groundcast.errors import DomainError, NotFoundError, StoreFormatError, TileFetchError
from groundcast.geodata import (
    CaptureTime,
    FixtureTileProvider,
    GeoLocation,
    RegionSpec,
    build_grid,
    latlon_to_pixel,
    pixel_to_latlon,
)
from groundcast.mapstore import (
    EMBEDDINGS_FILE,
    Catalog,
    RegionStore,
    derive_region_id,
    load_store,
    precompute_region,
    save_store,
)

from conftest import unit_rows


def _spec_for_grid(rows, cols, zoom=13):
    origin = latlon_to_pixel(GeoLocation(20.0, 10.0), zoom)
    nw = pixel_to_latlon(origin[0], origin[1], zoom)
    se = pixel_to_latlon(origin[0] + cols * 256, origin[1] + rows * 256, zoom)
    return RegionSpec(bbox=(se.lat, nw.lon, nw.lat, se.lon), zoom=zoom)


def _ready_store(rng, rows, cols, d=16, region_id="r-test", with_raw=True):
    raw = rng.standard_normal((rows * cols, d)).astype(np.float32)
    emb = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    return RegionStore(
        region_id=region_id,
        spec=_spec_for_grid(rows, cols),
        rows=rows,
        cols=cols,
        embeddings=emb.astype(np.float32),
        raw_embeddings=raw if with_raw else None,
        status="ready",
    )


class InterruptingProvider:
    """Delegates to a fixture provider but dies after a fetch budget."""

    def __init__(self, budget: int, seed: int = 0):
        self.budget = budget
        self.inner = FixtureTileProvider(seed=seed)

    def fetch(self, x, y, z):
        if self.budget <= 0:
            raise TileFetchError("interrupted")
        self.budget -= 1
        return self.inner.fetch(x, y, z)


class TestSaveLoad:
    def test_bit_exact_roundtrip(self, tmp_path, rng):
        store = _ready_store(rng, 3, 5)
        save_store(store, tmp_path)
        loaded = load_store(tmp_path)
        assert loaded.embeddings.tobytes() == store.embeddings.tobytes()
        assert loaded.raw_embeddings.tobytes() == store.raw_embeddings.tobytes()
        assert loaded.spec == store.spec
        assert loaded.region_id == store.region_id

    def test_payload_size_formula(self, tmp_path, rng):
        store = _ready_store(rng, 8, 8, d=64)
        save_store(store, tmp_path)
        size = (tmp_path / EMBEDDINGS_FILE).stat().st_size
        assert size == 8 * 8 * 64 * 4 + 20

    def test_truncated_file_reports_checksum_error(self, tmp_path, rng):
        store = _ready_store(rng, 2, 2)
        save_store(store, tmp_path)
        blob = (tmp_path / EMBEDDINGS_FILE).read_bytes()
        (tmp_path / EMBEDDINGS_FILE).write_bytes(blob[:-7])
        with pytest.raises(StoreFormatError):
            load_store(tmp_path)

    def test_bad_magic_rejected(self, tmp_path, rng):
        store = _ready_store(rng, 2, 2)
        save_store(store, tmp_path)
        blob = bytearray((tmp_path / EMBEDDINGS_FILE).read_bytes())
        blob[0] = ord(b"X")
        (tmp_path / EMBEDDINGS_FILE).write_bytes(bytes(blob))
        with pytest.raises(StoreFormatError):
            load_store(tmp_path)

    def test_meta_roundtrip(self, tmp_path, rng):
        store = _ready_store(rng, 2, 2)
        store.meta = CaptureTime(2021, 7, 4, 9)
        save_store(store, tmp_path)
        assert load_store(tmp_path).meta == CaptureTime(2021, 7, 4, 9)

    def test_pending_store_not_saveable(self, tmp_path, rng):
        store = _ready_store(rng, 2, 2)
        store.status = "pending"
        with pytest.raises(DomainError):
            save_store(store, tmp_path)

    def test_non_unit_rows_rejected(self, rng):
        raw = rng.standard_normal((4, 8)).astype(np.float32) * 3
        with pytest.raises(DomainError):
            RegionStore(
                region_id="x",
                spec=_spec_for_grid(2, 2),
                rows=2,
                cols=2,
                embeddings=raw,
                status="ready",
            )


class TestPrecompute:
    def test_fixture_region_2x2(self, tmp_path, toy_model):
        spec = _spec_for_grid(2, 2)
        store = precompute_region(
            spec, toy_model, FixtureTileProvider(seed=1), region_dir=tmp_path, backoff_s=0
        )
        assert store.status == "ready"
        assert store.embeddings.shape == (4, 64)
        np.testing.assert_allclose(np.linalg.norm(store.embeddings, axis=1), 1.0, atol=1e-5)

    def test_row_major_cell_order(self, tmp_path, toy_model):
        """Embedding at index r*cols+c must come from cell (r, c)'s patch."""
        spec = _spec_for_grid(2, 3)
        grid = build_grid(spec)
        store = precompute_region(
            spec, toy_model, FixtureTileProvider(seed=2), region_dir=tmp_path, backoff_s=0
        )
        from groundcast.geodata import TileCache, crop_centered_patch

        cache = TileCache(tmp_path / "tiles")
        for r in range(grid.rows):
            for c in range(grid.cols):
                patch = crop_centered_patch(
                    FixtureTileProvider(seed=2), grid.cell_center_px(r, c), spec.zoom, spec.tile_px,
                    cache=cache, backoff_s=0,
                )
                expected = toy_model.embed_tiles([patch])[0]
                np.testing.assert_allclose(store.embeddings[r * grid.cols + c], expected, atol=1e-5)

    def test_interrupt_then_resume_identical(self, tmp_path, toy_model):
        spec = _spec_for_grid(3, 3)
        clean_dir = tmp_path / "clean"
        resumed_dir = tmp_path / "resumed"
        clean = precompute_region(
            spec, toy_model, FixtureTileProvider(seed=3), region_dir=clean_dir, batch_size=2, backoff_s=0
        )
        # tiles for 3x3 cells: budget of 9 slippy fetches dies about halfway
        first = precompute_region(
            spec,
            toy_model,
            InterruptingProvider(budget=9, seed=3),
            region_dir=resumed_dir,
            batch_size=2,
            attempts=1,
            backoff_s=0,
        )
        assert first.status == "failed"
        assert first.errors
        second = precompute_region(
            spec, toy_model, FixtureTileProvider(seed=3), region_dir=resumed_dir, batch_size=2, backoff_s=0
        )
        assert second.status == "ready"
        assert second.embeddings.tobytes() == clean.embeddings.tobytes()
        assert second.raw_embeddings.tobytes() == clean.raw_embeddings.tobytes()

    def test_idempotent_on_ready_store(self, tmp_path, toy_model):
        spec = _spec_for_grid(2, 2)
        first = precompute_region(spec, toy_model, FixtureTileProvider(seed=4), region_dir=tmp_path, backoff_s=0)
        again = precompute_region(spec, toy_model, FixtureTileProvider(seed=4), region_dir=tmp_path, backoff_s=0)
        assert again.embeddings.tobytes() == first.embeddings.tobytes()

    def test_meta_conditioning_changes_store(self, tmp_path, toy_model):
        spec = _spec_for_grid(2, 2)
        july = precompute_region(
            spec, toy_model, FixtureTileProvider(seed=5), region_dir=tmp_path / "july",
            meta=CaptureTime(2021, 7, 15, 12), backoff_s=0,
        )
        january = precompute_region(
            spec, toy_model, FixtureTileProvider(seed=5), region_dir=tmp_path / "january",
            meta=CaptureTime(2021, 1, 15, 12), backoff_s=0,
        )
        assert not np.allclose(july.embeddings, january.embeddings)
        # raw overhead vectors are meta-independent
        np.testing.assert_array_equal(july.raw_embeddings, january.raw_embeddings)


class TestCatalog:
    def test_ingest_then_list(self, tmp_path, toy_model):
        catalog = Catalog(tmp_path)
        spec = _spec_for_grid(2, 2)
        store = catalog.ingest("demo", spec, toy_model, FixtureTileProvider(seed=1), backoff_s=0)
        entries = catalog.list()
        assert len(entries) == 1
        assert entries[0]["region_id"] == store.region_id
        assert entries[0]["status"] == "ready"

    def test_get_delete_not_found(self, tmp_path, toy_model):
        catalog = Catalog(tmp_path)
        spec = _spec_for_grid(2, 2)
        store = catalog.ingest("demo", spec, toy_model, FixtureTileProvider(seed=1), backoff_s=0)
        assert catalog.get(store.region_id).embeddings is not None
        catalog.delete(store.region_id)
        with pytest.raises(NotFoundError):
            catalog.get(store.region_id)
        with pytest.raises(NotFoundError):
            catalog.status(store.region_id)

    def test_same_name_different_spec_distinct_ids(self):
        a = derive_region_id("demo", _spec_for_grid(2, 2))
        b = derive_region_id("demo", _spec_for_grid(2, 3))
        assert a != b

    def test_id_is_spec_name_hash(self):
        spec = _spec_for_grid(2, 2)
        import json

        expected = hashlib.sha256(f"demo|{json.dumps(spec.to_dict(), sort_keys=True)}".encode()).hexdigest()[:12]
        assert derive_region_id("demo", spec) == expected
