import hashlib
import math

import numpy as np
import pytest
import torch

from groundcast.embedding import Embedding, combine, l2_normalize
from groundcast.encoders import (
    METADATA_DIM,
    CrossViewModel,
    DynamicEncoder,
    EncoderConfig,
    HashedTextAdapter,
    MetadataEncoding,
    PixelTargetAdapter,
    SeededProjectionAdapter,
    encode_metadata,
    encode_metadata_batch,
    encode_text,
    load_checkpoint,
    preprocess_tiles,
    save_checkpoint,
    toy_encoder_config,
)
from groundcast.errors import ConfigError, DomainError
from groundcast.geodata import CaptureTime, GeoLocation


class TestMetadataEncoding:
    def test_dimension_and_layout(self):
        m = encode_metadata(GeoLocation(45.0, 10.0), CaptureTime(2016, 3, 14, 9))
        assert m.features.shape == (METADATA_DIM,) == (11,)

    def test_hour_six_block(self):
        m = encode_metadata(GeoLocation(0, 0), CaptureTime(2016, 1, 1, 6))
        np.testing.assert_allclose(m.block("hour"), [1.0, 0.0], atol=1e-7)

    def test_month_one_block(self):
        m = encode_metadata(GeoLocation(0, 0), CaptureTime(2016, 1, 10, 3))
        np.testing.assert_allclose(m.block("month"), [0.0, 1.0], atol=1e-7)

    def test_antimeridian_identical(self):
        a = encode_metadata(GeoLocation(0, -180), CaptureTime(2016, 1, 1, 0))
        b = encode_metadata(GeoLocation(0, 180), CaptureTime(2016, 1, 1, 0))
        np.testing.assert_array_equal(a.block("lon"), b.block("lon"))

    def test_cyclic_pairs_on_unit_circle(self):
        m = encode_metadata(GeoLocation(37.2, -122.1), CaptureTime(2013, 11, 27, 17))
        for name in ("hour", "day", "month", "lon", "lat"):
            assert float(np.sum(m.block(name) ** 2)) == pytest.approx(1.0, abs=1e-6)

    def test_month_wrap_rotation(self):
        m12 = encode_metadata(GeoLocation(0, 0), CaptureTime(2016, 12, 1, 0))
        angle = 2 * math.pi * 11 / 12
        np.testing.assert_allclose(m12.block("month"), [math.sin(angle), math.cos(angle)], atol=1e-7)

    def test_year_scaling(self):
        m = encode_metadata(GeoLocation(0, 0), CaptureTime(2016, 1, 1, 0))
        assert m.block("year")[0] == pytest.approx(0.16)

    def test_batch_matches_single(self):
        locs = [GeoLocation(1, 2), GeoLocation(-30, 100)]
        times = [CaptureTime(2011, 5, 6, 7), CaptureTime(2019, 12, 31, 23)]
        batch = encode_metadata_batch(locs, times)
        for i in range(2):
            np.testing.assert_array_equal(batch[i], encode_metadata(locs[i], times[i]).features)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            MetadataEncoding(features=np.zeros(7))


class TestDynamicEncoder:
    def test_zero_weights_give_zero_output(self):
        enc = DynamicEncoder(out_dim=16, hidden=(8,))
        with torch.no_grad():
            for p in enc.parameters():
                p.zero_()
        out = enc(torch.randn(3, METADATA_DIM))
        assert torch.all(out == 0)

    def test_distinct_inputs_distinct_outputs(self):
        torch.manual_seed(0)
        enc = DynamicEncoder(out_dim=16, hidden=(32, 32))
        a = encode_metadata(GeoLocation(10, 20), CaptureTime(2015, 7, 4, 12)).features
        b = encode_metadata(GeoLocation(10, 20), CaptureTime(2015, 1, 4, 0)).features
        out_a = enc(torch.from_numpy(a))
        out_b = enc(torch.from_numpy(b))
        assert not torch.allclose(out_a, out_b)

    def test_deterministic(self):
        torch.manual_seed(0)
        enc = DynamicEncoder(out_dim=16, hidden=(32,))
        x = torch.randn(2, METADATA_DIM)
        assert torch.equal(enc(x), enc(x))

    def test_dimension_mismatch(self):
        enc = DynamicEncoder(out_dim=16, hidden=(8,))
        with pytest.raises(ConfigError):
            enc(torch.randn(2, METADATA_DIM + 1))


class TestOverheadEncoder:
    def test_unit_norm(self, toy_model, rng):
        tile = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        emb = toy_model.embed_tiles([tile])
        assert np.linalg.norm(emb[0]) == pytest.approx(1.0, abs=1e-6)

    def test_identical_tiles_identical_embeddings(self, toy_model, rng):
        tile = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        out = toy_model.embed_tiles([tile, tile.copy()])
        np.testing.assert_array_equal(out[0], out[1])

    def test_batch_matches_single_calls(self, toy_model, rng):
        tiles = [rng.integers(0, 256, (32, 32, 3), dtype=np.uint8) for _ in range(5)]
        batch = toy_model.embed_tiles(tiles)
        singles = np.stack([toy_model.embed_tiles([t])[0] for t in tiles])
        np.testing.assert_allclose(batch, singles, atol=1e-5)

    def test_rejects_wrong_shape(self, toy_model):
        with pytest.raises(DomainError):
            toy_model.overhead_raw(torch.randn(1, 3, 16, 16))

    def test_preprocess_resizes_and_normalizes(self, toy_config, rng):
        tile = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
        batch = preprocess_tiles([tile], toy_config)
        assert batch.shape == (1, 3, 32, 32)
        assert batch.dtype == torch.float32


class TestFrozenAdapters:
    def test_projection_adapter_unit_norm_and_deterministic(self, rng):
        adapter = SeededProjectionAdapter(dim=64, seed=3)
        img = rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)
        e1 = adapter.embed_images([img])
        e2 = SeededProjectionAdapter(dim=64, seed=3).embed_images([img])
        np.testing.assert_array_equal(e1, e2)
        assert np.linalg.norm(e1[0]) == pytest.approx(1.0, abs=1e-6)

    def test_projection_checksum_tracks_params(self):
        a = SeededProjectionAdapter(dim=64, seed=3)
        b = SeededProjectionAdapter(dim=64, seed=4)
        assert a.checksum() != b.checksum()
        assert a.checksum() == hashlib.sha256(a.weight.tobytes()).hexdigest()

    def test_text_adapter_determinism_and_norm(self):
        adapter = HashedTextAdapter(dim=64)
        e1 = adapter.embed_texts(["cars stuck in traffic"])
        e2 = adapter.embed_texts(["cars stuck in traffic"])
        np.testing.assert_array_equal(e1, e2)
        assert np.linalg.norm(e1[0]) == pytest.approx(1.0, abs=1e-6)

    def test_distinct_prompts_not_collinear(self):
        adapter = HashedTextAdapter(dim=64)
        a, b = adapter.embed_texts(["people fishing on a boat", "farmers harvesting crops"])
        assert float(a @ b) < 0.99

    def test_empty_prompt_rejected(self):
        with pytest.raises(DomainError):
            encode_text(HashedTextAdapter(dim=16), "")

    def test_pixel_target_decodes_planted_vector(self, rng):
        target = rng.standard_normal(64)
        target /= np.linalg.norm(target)
        side = PixelTargetAdapter.image_side(64)
        flat = np.clip(np.round((target + 1) / 2 * 255), 0, 255).astype(np.uint8)
        img = np.stack([flat.reshape(side, side)] * 3, axis=-1)
        decoded = PixelTargetAdapter(dim=64).embed_images([img])[0]
        assert float(decoded @ target) > 0.999


class TestCombine:
    def test_zero_offset_is_identity(self, rng):
        o = Embedding.raw(rng.standard_normal(16))
        e = Embedding.raw(np.zeros(16))
        s = combine(o, e, use_meta=True)
        np.testing.assert_allclose(s.values, l2_normalize(o.values), atol=1e-7)

    def test_gate_off_ignores_offset(self, rng):
        o = Embedding.raw(rng.standard_normal(16))
        e = Embedding.raw(rng.standard_normal(16))
        s = combine(o, e, use_meta=False)
        np.testing.assert_allclose(s.values, l2_normalize(o.values), atol=1e-7)

    def test_unit_norm_and_direction(self, rng):
        o = Embedding.raw(rng.standard_normal(16))
        e = Embedding.raw(rng.standard_normal(16))
        s = combine(o, e, use_meta=True)
        assert np.linalg.norm(s.values) == pytest.approx(1.0, abs=1e-6)
        expected = l2_normalize(o.values + e.values)
        np.testing.assert_allclose(s.values, expected, atol=1e-6)

    def test_dim_mismatch(self, rng):
        with pytest.raises(DomainError):
            combine(Embedding.raw(rng.standard_normal(16)), Embedding.raw(rng.standard_normal(8)), True)

    def test_exact_cancellation_rejected(self, rng):
        v = rng.standard_normal(16)
        with pytest.raises(DomainError):
            combine(Embedding.raw(v), Embedding.raw(-v), use_meta=True)

    def test_model_combined_matches_functional(self, toy_model, rng):
        o_raw = torch.from_numpy(rng.standard_normal((3, 64)).astype(np.float32))
        out = toy_model.combined(o_raw, None, use_meta=False).numpy()
        for i in range(3):
            np.testing.assert_allclose(
                out[i], combine(Embedding.raw(o_raw[i].numpy()), None, False).values, atol=1e-6
            )


class TestEmbeddingType:
    def test_normalized_tag_enforced(self, rng):
        with pytest.raises(DomainError):
            Embedding(values=rng.standard_normal(8) * 3, normalized=True)

    def test_unit_constructor(self, rng):
        e = Embedding.unit(rng.standard_normal(8))
        assert e.normalized and np.linalg.norm(e.values) == pytest.approx(1.0, abs=1e-6)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            Embedding.raw(np.array([1.0, np.nan]))


class TestCheckpoint:
    def test_roundtrip_identical_embeddings(self, tmp_path, rng):
        config = toy_encoder_config()
        model = CrossViewModel.create(config, seed=11)
        path = save_checkpoint(model, tmp_path / "model.pt")
        loaded = load_checkpoint(path)
        tile = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
        np.testing.assert_array_equal(model.embed_tiles([tile]), loaded.embed_tiles([tile]))
        assert float(loaded.tau.detach()) == pytest.approx(float(model.tau.detach()))

    def test_config_survives(self, tmp_path):
        config = toy_encoder_config(embed_dim=32, dynamic_hidden=(16, 16))
        model = CrossViewModel.create(config, seed=11)
        loaded = load_checkpoint(save_checkpoint(model, tmp_path / "m.pt"))
        assert loaded.config == config

    def test_bad_version_rejected(self, tmp_path):
        config = toy_encoder_config()
        model = CrossViewModel.create(config, seed=11)
        path = save_checkpoint(model, tmp_path / "m.pt")
        payload = torch.load(path, weights_only=True)
        payload["format_version"] = 99
        torch.save(payload, path)
        from groundcast.errors import StoreFormatError

        with pytest.raises(StoreFormatError):
            load_checkpoint(path)


class TestSeededConstruction:
    def test_same_seed_same_weights(self):
        config = toy_encoder_config()
        a = CrossViewModel.create(config, seed=5)
        b = CrossViewModel.create(config, seed=5)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_overhead_weights_shared_with_dynamicless_twin(self):
        config = toy_encoder_config()
        with_dyn = CrossViewModel.create(config, seed=5)
        without_dyn = CrossViewModel.create(toy_encoder_config(use_dynamic=False), seed=5)
        for pa, pb in zip(with_dyn.overhead.parameters(), without_dyn.overhead.parameters()):
            assert torch.equal(pa, pb)


class TestEncoderConfig:
    def test_rejects_nonpositive_dims(self):
        with pytest.raises(ConfigError):
            EncoderConfig(embed_dim=0)

    def test_dict_roundtrip(self):
        config = toy_encoder_config()
        assert EncoderConfig.from_dict(config.to_dict()) == config
