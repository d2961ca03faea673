"""Frozen image/text embedding adapters.

The shipped adapters are deterministic and dependency-free so the full suite
runs without pretrained downloads:

* seeded-projection: downsample pixels, project through a fixed seeded matrix.
* pixel-target: decode a target vector baked directly into the image pixels
  (used by the synthetic training fixtures).
* hashed-text: hash the prompt to a seed, draw a fixed gaussian vector.

A production image-text encoder drops in by registering a class with the same
embed_* / checksum surface. Adapter parameters are plain numpy, structurally
out of reach of any optimizer.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
from PIL import Image

from ..embedding import Embedding, l2_normalize
from ..errors import ConfigError, DomainError
from ..geodata.types import ImageRef


class GroundImageAdapter(Protocol):
    name: str
    dim: int

    def embed_images(self, images: Sequence[ImageRef]) -> np.ndarray: ...
    def checksum(self) -> str: ...


class TextAdapter(Protocol):
    name: str
    dim: int

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray: ...
    def checksum(self) -> str: ...


def load_image_array(ref: ImageRef) -> np.ndarray:
    """Resolve an image reference (path or in-memory array) to uint8 HWC RGB."""
    if isinstance(ref, np.ndarray):
        arr = ref
        if arr.ndim == 2:
            arr = np.stack([arr] * 3, axis=-1)
        return np.ascontiguousarray(arr.astype(np.uint8))
    path = Path(ref)
    if not path.exists():
        raise DomainError(f"image reference {path} does not resolve")
    return np.asarray(Image.open(path).convert("RGB"))


class SeededProjectionAdapter:
    """Deterministic stand-in for a frozen pretrained image encoder."""

    name = "seeded-projection"
    _side = 16

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed
        rng = np.random.Generator(np.random.PCG64(seed))
        self.weight = rng.standard_normal((self._side * self._side * 3, dim)).astype(np.float32)

    def embed_images(self, images: Sequence[ImageRef]) -> np.ndarray:
        feats = []
        for ref in images:
            arr = load_image_array(ref)
            small = Image.fromarray(arr).resize((self._side, self._side), Image.BILINEAR)
            x = np.asarray(small, dtype=np.float32).reshape(-1) / 255.0 - 0.5
            feats.append(x)
        return l2_normalize(np.stack(feats) @ self.weight)

    def checksum(self) -> str:
        return hashlib.sha256(self.weight.tobytes()).hexdigest()


class PixelTargetAdapter:
    """Reads a target embedding directly out of the image pixels.

    The first `dim` values of the flattened first channel are mapped from
    uint8 to [-1, 1] and L2-normalized. Training fixtures bake their target
    vectors into ground images this way.
    """

    name = "pixel-target"

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed  # unused; kept for a uniform factory signature

    @staticmethod
    def image_side(dim: int) -> int:
        return math.ceil(math.sqrt(dim))

    def embed_images(self, images: Sequence[ImageRef]) -> np.ndarray:
        rows = []
        for ref in images:
            arr = load_image_array(ref)
            flat = arr[..., 0].reshape(-1).astype(np.float32)
            if flat.size < self.dim:
                raise DomainError(f"image too small to decode a {self.dim}-dim target")
            rows.append(flat[: self.dim] / 255.0 * 2.0 - 1.0)
        return l2_normalize(np.stack(rows))

    def checksum(self) -> str:
        return hashlib.sha256(f"pixel-target:{self.dim}".encode()).hexdigest()


class HashedTextAdapter:
    """Deterministic stand-in for a frozen text encoder; prompts hash to
    seeded gaussian vectors, so distinct prompts are (almost surely) distinct."""

    name = "hashed-text"

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        rows = []
        for text in texts:
            if not text:
                raise DomainError("prompt must be non-empty")
            digest = hashlib.sha256(f"{self.seed}|{text}".encode("utf-8")).digest()
            rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))
            rows.append(rng.standard_normal(self.dim).astype(np.float32))
        return l2_normalize(np.stack(rows))

    def embed_text(self, text: str) -> Embedding:
        return Embedding(self.embed_texts([text])[0], normalized=True)

    def checksum(self) -> str:
        return hashlib.sha256(f"hashed-text:{self.dim}:{self.seed}".encode()).hexdigest()


GROUND_ADAPTERS = {
    "seeded-projection": SeededProjectionAdapter,
    "pixel-target": PixelTargetAdapter,
}

TEXT_ADAPTERS = {
    "hashed-text": HashedTextAdapter,
}


def create_ground_adapter(name: str, dim: int, seed: int = 0) -> GroundImageAdapter:
    try:
        return GROUND_ADAPTERS[name](dim=dim, seed=seed)
    except KeyError:
        raise ConfigError(f"unknown ground adapter {name!r}; known: {sorted(GROUND_ADAPTERS)}") from None


def create_text_adapter(name: str, dim: int, seed: int = 0) -> TextAdapter:
    try:
        return TEXT_ADAPTERS[name](dim=dim, seed=seed)
    except KeyError:
        raise ConfigError(f"unknown text adapter {name!r}; known: {sorted(TEXT_ADAPTERS)}") from None
