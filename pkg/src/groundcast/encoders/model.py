"""The trainable cross-view model: overhead ViT + dynamic encoder + temperature.

Frozen ground/text adapters live outside the nn.Module (plain numpy), so no
optimizer can ever touch them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
from PIL import Image

from ..contrastive import TemperatureParam
from ..embedding import Embedding
from ..errors import ConfigError, DomainError, StoreFormatError
from ..geodata.types import CaptureTime, GeoLocation, ImageRef
from .adapters import create_ground_adapter, create_text_adapter, load_image_array
from .dynamic import DynamicEncoder
from .metadata import METADATA_DIM, encode_metadata_batch
from .vit import VisionTransformer

CHECKPOINT_FORMAT_VERSION = 1
DEFAULT_MODEL_SEED = 7


@dataclass(frozen=True)
class EncoderConfig:
    """Dimensions for the overhead backbone, dynamic encoder, and adapters."""

    embed_dim: int = 512
    image_size: int = 224
    patch_size: int = 32
    width: int = 768
    depth: int = 12
    heads: int = 12
    mlp_ratio: float = 4.0
    use_dynamic: bool = True
    dynamic_hidden: tuple[int, ...] = (512, 512)
    ground_adapter: str = "seeded-projection"
    text_adapter: str = "hashed-text"
    adapter_seed: int = 0
    pixel_mean: tuple[float, float, float] = (0.5, 0.5, 0.5)
    pixel_std: tuple[float, float, float] = (0.25, 0.25, 0.25)

    def __post_init__(self):
        for name in ("embed_dim", "image_size", "patch_size", "width", "depth", "heads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        object.__setattr__(self, "dynamic_hidden", tuple(self.dynamic_hidden))
        object.__setattr__(self, "pixel_mean", tuple(self.pixel_mean))
        object.__setattr__(self, "pixel_std", tuple(self.pixel_std))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(**d)


def toy_encoder_config(**overrides) -> EncoderConfig:
    """Small profile that trains in seconds on a CPU; used throughout tests."""
    base = dict(
        embed_dim=64,
        image_size=32,
        patch_size=8,
        width=64,
        depth=2,
        heads=4,
        mlp_ratio=2.0,
        dynamic_hidden=(64, 64),
        ground_adapter="pixel-target",
    )
    base.update(overrides)
    return EncoderConfig(**base)


def preprocess_tiles(tiles: Sequence[ImageRef], config: EncoderConfig) -> torch.Tensor:
    """Resize to the model input size and normalize by the configured mean/std."""
    mean = torch.tensor(config.pixel_mean).view(1, 3, 1, 1)
    std = torch.tensor(config.pixel_std).view(1, 3, 1, 1)
    arrays = []
    size = (config.image_size, config.image_size)
    for ref in tiles:
        arr = load_image_array(ref)
        if arr.shape[:2] != size:
            arr = np.asarray(Image.fromarray(arr).resize(size, Image.BILINEAR))
        arrays.append(arr)
    batch = torch.from_numpy(np.stack(arrays)).float().permute(0, 3, 1, 2) / 255.0
    return (batch - mean) / std


class CrossViewModel(nn.Module):
    """Overhead encoder g, optional dynamic encoder h, and learnable log-tau."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.overhead = VisionTransformer(
            image_size=config.image_size,
            patch_size=config.patch_size,
            width=config.width,
            depth=config.depth,
            heads=config.heads,
            out_dim=config.embed_dim,
            mlp_ratio=config.mlp_ratio,
        )
        self.dynamic = (
            DynamicEncoder(out_dim=config.embed_dim, hidden=config.dynamic_hidden, in_dim=METADATA_DIM)
            if config.use_dynamic
            else None
        )
        self.temperature = TemperatureParam(0.07)

    @classmethod
    def create(cls, config: EncoderConfig, seed: int = DEFAULT_MODEL_SEED) -> "CrossViewModel":
        """Seeded construction: identical seeds give identical parameters.

        The overhead encoder is built before the dynamic encoder, so two
        models differing only in use_dynamic share overhead weights.
        """
        torch.manual_seed(seed)
        return cls(config)

    @property
    def tau(self) -> torch.Tensor:
        return self.temperature.tau

    def overhead_raw(self, images: torch.Tensor) -> torch.Tensor:
        return self.overhead(images)

    def dynamic_offset(self, meta_features: torch.Tensor) -> torch.Tensor:
        if self.dynamic is None:
            raise ConfigError("model was built without a dynamic encoder")
        return self.dynamic(meta_features)

    def combined(self, o_raw: torch.Tensor, meta_features: torch.Tensor | None, use_meta: bool) -> torch.Tensor:
        """normalize(O_raw + E) when metadata is used, else normalize(O_raw)."""
        if use_meta and self.dynamic is not None and meta_features is not None:
            summed = o_raw + self.dynamic(meta_features)
        else:
            summed = o_raw
        norms = summed.norm(dim=-1, keepdim=True)
        if torch.any(norms < 1e-12):
            raise DomainError("combined embedding cancelled to the zero vector")
        return summed / norms

    @torch.no_grad()
    def embed_tiles(
        self,
        tiles: Sequence[ImageRef],
        locations: Sequence[GeoLocation] | None = None,
        times: Sequence[CaptureTime] | None = None,
        use_meta: bool = False,
        batch_size: int = 64,
        return_raw: bool = False,
    ) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
        """Inference-mode unit-norm embeddings for a tile sequence.

        With use_meta=True, per-tile metadata (location, time) conditions the
        embedding through the dynamic encoder.
        """
        was_training = self.training
        self.eval()
        try:
            combined_rows, raw_rows = [], []
            meta = None
            if use_meta:
                if self.dynamic is None:
                    raise ConfigError("metadata requested but model has no dynamic encoder")
                if locations is None or times is None:
                    raise DomainError("use_meta=True requires locations and times")
                meta = torch.from_numpy(encode_metadata_batch(locations, times))
            for start in range(0, len(tiles), batch_size):
                chunk = list(tiles[start : start + batch_size])
                x = preprocess_tiles(chunk, self.config)
                o_raw = self.overhead_raw(x)
                m = meta[start : start + len(chunk)] if meta is not None else None
                combined_rows.append(self.combined(o_raw, m, use_meta).numpy())
                if return_raw:
                    raw_rows.append(o_raw.numpy())
            combined = np.concatenate(combined_rows).astype(np.float32)
            if return_raw:
                return combined, np.concatenate(raw_rows).astype(np.float32)
            return combined
        finally:
            self.train(was_training)


def encode_overhead(model: CrossViewModel, tile: ImageRef) -> Embedding:
    """Unit-norm overhead embedding of a single tile (no metadata)."""
    return Embedding(model.embed_tiles([tile])[0], normalized=True)


def dynamic_encode(model: CrossViewModel, location: GeoLocation, time: CaptureTime) -> Embedding:
    """Raw (un-normalized) dynamic-encoder output for one metadata record."""
    feats = torch.from_numpy(encode_metadata_batch([location], [time]))
    with torch.no_grad():
        out = model.dynamic_offset(feats)[0].numpy()
    return Embedding.raw(out)


def encode_ground(adapter, photo: ImageRef) -> Embedding:
    return Embedding(adapter.embed_images([photo])[0], normalized=True)


def encode_text(adapter, prompt: str) -> Embedding:
    if not prompt:
        raise DomainError("prompt must be non-empty")
    return Embedding(adapter.embed_texts([prompt])[0], normalized=True)


def save_checkpoint(model: CrossViewModel, path: str | Path) -> Path:
    """Single-archive checkpoint: config, overhead + dynamic weights, log-tau."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "overhead_state": model.overhead.state_dict(),
        "dynamic_state": model.dynamic.state_dict() if model.dynamic is not None else None,
        "log_tau": model.temperature.log_tau.detach().clone(),
    }
    torch.save(payload, path)
    return path


def load_checkpoint(path: str | Path) -> CrossViewModel:
    path = Path(path)
    if not path.exists():
        raise StoreFormatError(f"checkpoint {path} does not exist")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise StoreFormatError(f"unsupported checkpoint format version {version!r}")
    config = EncoderConfig.from_dict(payload["config"])
    model = CrossViewModel(config)
    model.overhead.load_state_dict(payload["overhead_state"])
    if model.dynamic is not None:
        if payload["dynamic_state"] is None:
            raise StoreFormatError("checkpoint missing dynamic encoder weights")
        model.dynamic.load_state_dict(payload["dynamic_state"])
    with torch.no_grad():
        model.temperature.log_tau.copy_(payload["log_tau"])
    model.eval()
    return model


def adapters_for(config: EncoderConfig):
    """Frozen (ground, text) adapter pair matching the model's embed space."""
    ground = create_ground_adapter(config.ground_adapter, dim=config.embed_dim, seed=config.adapter_seed)
    text = create_text_adapter(config.text_adapter, dim=config.embed_dim, seed=config.adapter_seed)
    return ground, text
