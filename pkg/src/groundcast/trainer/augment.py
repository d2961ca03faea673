"""Overhead tile augmentation: random resized crop plus a pluggable policy."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
import torch
from PIL import Image

AugmentPolicy = Optional[Callable[[np.ndarray, torch.Generator], np.ndarray]]


def _resize(arr: np.ndarray, size: int) -> np.ndarray:
    if arr.shape[:2] == (size, size):
        return arr
    return np.asarray(Image.fromarray(arr).resize((size, size), Image.BILINEAR))


def augment_overhead(
    tile: np.ndarray,
    out_size: int,
    generator: torch.Generator,
    enabled: bool = True,
    scale_min: float = 0.8,
    policy: AugmentPolicy = None,
) -> np.ndarray:
    """Random resized crop (area scale in [scale_min, 1]) to out_size.

    Randomness comes only from `generator`, so a fixed generator state gives a
    fixed output. Disabled augmentation is a plain resize. `policy` slots in
    an extra augmentation pass (e.g. a RandAugment implementation) after the
    crop.
    """
    tile = np.asarray(tile)
    if not enabled:
        return _resize(tile, out_size)
    h, w = tile.shape[:2]
    u = torch.rand(3, generator=generator).tolist()
    scale = scale_min + (1.0 - scale_min) * u[0]
    side = max(1, int(round(min(h, w) * float(np.sqrt(scale)))))
    top = int(u[1] * (h - side + 1))
    left = int(u[2] * (w - side + 1))
    crop = tile[top : top + side, left : left + side]
    out = _resize(crop, out_size)
    if policy is not None:
        out = policy(out, generator)
    return out
