"""Synthetic desk-scale training pairs with a learnable cross-view task.

Each fixture tile paints a latent code into vertical pixel bands; the paired
ground image carries the target embedding directly in its pixels, so the
frozen pixel-target adapter recovers a target that is a fixed function of the
latent code (plus, optionally, a metadata-dependent shift). Everything is a
pure function of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..embedding import l2_normalize
from ..encoders.adapters import PixelTargetAdapter
from ..encoders.metadata import METADATA_DIM, encode_metadata
from ..errors import DomainError
from ..geodata.types import CaptureTime, GeoLocation, GeoSample

# two far-apart capture times for the metadata-shift variant
_TIME_A = CaptureTime(2018, 7, 15, 12)
_TIME_B = CaptureTime(2018, 1, 15, 0)


@dataclass
class FixtureDataset:
    samples: list[GeoSample]
    targets: np.ndarray  # exact pre-quantization targets, (n, d) unit rows
    latents: np.ndarray  # (n, latent_dim) in [0, 1]
    dim: int
    metadata_shift: bool

    def ground_embedding(self, index: int) -> np.ndarray:
        """Target as the frozen adapter will actually decode it (quantized)."""
        adapter = PixelTargetAdapter(dim=self.dim)
        return adapter.embed_images([self.samples[index].ground_image])[0]


def _encode_target_image(target: np.ndarray) -> np.ndarray:
    side = PixelTargetAdapter.image_side(target.shape[0])
    flat = np.full(side * side, 128, dtype=np.uint8)
    flat[: target.shape[0]] = np.clip(np.round((target + 1.0) / 2.0 * 255.0), 0, 255).astype(np.uint8)
    gray = flat.reshape(side, side)
    return np.stack([gray] * 3, axis=-1)


def _encode_latent_tile(latent: np.ndarray, image_size: int) -> np.ndarray:
    m = latent.shape[0]
    band = image_size // m
    if band < 1:
        raise DomainError(f"image_size {image_size} too small for {m} latent bands")
    tile = np.zeros((image_size, image_size), dtype=np.uint8)
    for j, v in enumerate(latent):
        lo = j * band
        hi = image_size if j == m - 1 else (j + 1) * band
        tile[:, lo:hi] = int(round(float(v) * 255.0))
    return np.stack([tile] * 3, axis=-1)


def generate_fixture_pairs(
    n: int,
    d: int,
    seed: int,
    metadata_shift: bool = False,
    image_size: int = 32,
    latent_dim: int = 8,
    meta_scale: float = 0.25,
    out_dir: str | Path | None = None,
) -> FixtureDataset:
    """n GeoSamples whose overhead tiles encode latents and whose ground
    images encode targets.

    With metadata_shift, samples come in pairs sharing one tile but carrying
    two distinct capture times, and the target gains a metadata-dependent
    component: only a metadata-conditioned model can tell pair members apart.
    """
    if n < 1:
        raise DomainError(f"need n >= 1 fixture pairs, got {n}")
    if metadata_shift and n % 2 != 0:
        raise DomainError("metadata_shift fixtures need an even n (two times per tile)")
    rng = np.random.Generator(np.random.PCG64(seed))
    latent_proj = rng.standard_normal((latent_dim, d))
    meta_proj = rng.standard_normal((METADATA_DIM, d))

    n_tiles = n // 2 if metadata_shift else n
    tile_latents = rng.uniform(0.0, 1.0, size=(n_tiles, latent_dim))
    tile_locs = [
        GeoLocation(lat=float(rng.uniform(-60, 60)), lon=float(rng.uniform(-180, 180)))
        for _ in range(n_tiles)
    ]

    samples: list[GeoSample] = []
    latents: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    for t in range(n_tiles):
        tile = _encode_latent_tile(tile_latents[t], image_size)
        base = (tile_latents[t] - 0.5) @ latent_proj
        times = (_TIME_A, _TIME_B) if metadata_shift else (_TIME_A,)
        for which, time in enumerate(times):
            vec = base
            if metadata_shift:
                phi = encode_metadata(tile_locs[t], time).features.astype(np.float64)
                vec = base + meta_scale * (phi @ meta_proj)
            target = l2_normalize(vec.astype(np.float64)).astype(np.float32)
            suffix = ("a", "b")[which] if metadata_shift else "a"
            samples.append(
                GeoSample(
                    id=f"fx{t:04d}{suffix}",
                    ground_image=_encode_target_image(target),
                    overhead_tile=tile,
                    location=tile_locs[t],
                    time=time,
                )
            )
            latents.append(tile_latents[t])
            targets.append(target)

    dataset = FixtureDataset(
        samples=samples,
        targets=np.stack(targets),
        latents=np.stack(latents),
        dim=d,
        metadata_shift=metadata_shift,
    )
    if out_dir is not None:
        _materialize(dataset, Path(out_dir))
    return dataset


def _materialize(dataset: FixtureDataset, out_dir: Path) -> None:
    from ..geodata.pairing import write_manifest

    ground_dir = out_dir / "ground"
    tile_dir = out_dir / "tiles"
    ground_dir.mkdir(parents=True, exist_ok=True)
    tile_dir.mkdir(parents=True, exist_ok=True)
    for s in dataset.samples:
        g_path = ground_dir / f"{s.id}.png"
        t_path = tile_dir / f"{s.id}.png"
        Image.fromarray(np.asarray(s.ground_image)).save(g_path)
        Image.fromarray(np.asarray(s.overhead_tile)).save(t_path)
        s.ground_image = g_path
        s.overhead_tile = t_path
    write_manifest(dataset.samples, out_dir / "manifest.jsonl")
