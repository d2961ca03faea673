"""Tile providers, disk cache, and centered-patch extraction.

Providers implement a single method, fetch(tile_x, tile_y, zoom) -> PNG bytes.
Retry policy is applied in one place (fetch_tile) so every provider gets the
same 3-attempt exponential backoff; HttpXYZProvider.fetch is single-shot.
"""

from __future__ import annotations

import hashlib
import io
import os
import time
from pathlib import Path
from typing import Protocol

import numpy as np
from PIL import Image

from ..errors import TileFetchError
from .tilemath import BASE_TILE_PX

DEFAULT_FETCH_ATTEMPTS = 3


class TileProvider(Protocol):
    def fetch(self, tile_x: int, tile_y: int, zoom: int) -> bytes:
        """Return PNG-encoded tile bytes; raise TileFetchError on failure."""
        ...


def _stable_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


class FixtureTileProvider:
    """Deterministic synthetic tiles for tests and demos.

    Pixel content is a pure function of (seed, zoom, x, y), stable across
    processes, so two runs against the same fixture world agree bit-for-bit.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def fetch(self, tile_x: int, tile_y: int, zoom: int) -> bytes:
        rng = np.random.Generator(np.random.PCG64(_stable_seed("fixture", self.seed, zoom, tile_x, tile_y)))
        pixels = rng.integers(0, 256, size=(BASE_TILE_PX, BASE_TILE_PX, 3), dtype=np.uint8)
        buf = io.BytesIO()
        Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


class HttpXYZProvider:
    """Generic XYZ tile server client; url_template uses {z}/{x}/{y}."""

    def __init__(self, url_template: str, timeout: float = 10.0, headers: dict | None = None):
        self.url_template = url_template
        self.timeout = timeout
        self.headers = headers or {"User-Agent": "groundcast/0.1"}

    def fetch(self, tile_x: int, tile_y: int, zoom: int) -> bytes:
        import requests

        url = self.url_template.format(z=zoom, x=tile_x, y=tile_y)
        try:
            resp = requests.get(url, timeout=self.timeout, headers=self.headers)
        except requests.RequestException as exc:
            raise TileFetchError(f"GET {url} failed: {exc}") from exc
        if resp.status_code != 200:
            raise TileFetchError(f"GET {url} returned {resp.status_code}")
        return resp.content


def fetch_tile(
    provider: TileProvider,
    tile_x: int,
    tile_y: int,
    zoom: int,
    attempts: int = DEFAULT_FETCH_ATTEMPTS,
    backoff_s: float = 0.1,
) -> bytes:
    """Fetch with exponential backoff; raises TileFetchError after `attempts`."""
    last: Exception | None = None
    for attempt in range(attempts):
        try:
            return provider.fetch(tile_x, tile_y, zoom)
        except TileFetchError as exc:
            last = exc
            if attempt + 1 < attempts and backoff_s > 0:
                time.sleep(backoff_s * (2**attempt))
    raise TileFetchError(f"tile {zoom}/{tile_x}/{tile_y} failed after {attempts} attempts: {last}")


class TileCache:
    """Disk cache keyed by zoom/x/y; writes are atomic (tmp + rename)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path_for(self, tile_x: int, tile_y: int, zoom: int) -> Path:
        return self.root / str(zoom) / str(tile_x) / f"{tile_y}.png"

    def get_or_fetch(
        self,
        provider: TileProvider,
        tile_x: int,
        tile_y: int,
        zoom: int,
        attempts: int = DEFAULT_FETCH_ATTEMPTS,
        backoff_s: float = 0.1,
    ) -> bytes:
        path = self.path_for(tile_x, tile_y, zoom)
        if path.exists():
            return path.read_bytes()
        data = fetch_tile(provider, tile_x, tile_y, zoom, attempts=attempts, backoff_s=backoff_s)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp-{os.getpid()}")
        tmp.write_bytes(data)
        tmp.replace(path)
        return data


def _decode_tile(data: bytes) -> np.ndarray:
    arr = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
    if arr.shape[:2] != (BASE_TILE_PX, BASE_TILE_PX):
        img = Image.fromarray(arr).resize((BASE_TILE_PX, BASE_TILE_PX), Image.BILINEAR)
        arr = np.asarray(img)
    return arr


def patch_window(center_px: tuple[float, float], patch_px: int) -> tuple[int, int]:
    """Top-left corner of a patch_px square centered within half a pixel."""
    left = int(round(center_px[0])) - patch_px // 2
    top = int(round(center_px[1])) - patch_px // 2
    return left, top


def crop_centered_patch(
    provider: TileProvider,
    center_px: tuple[float, float],
    zoom: int,
    patch_px: int,
    cache: TileCache | None = None,
    attempts: int = DEFAULT_FETCH_ATTEMPTS,
    backoff_s: float = 0.1,
) -> np.ndarray:
    """Assemble the slippy tiles under a window and crop a centered patch.

    x wraps around the antimeridian; y is clamped at the mercator edges
    (edge rows duplicate, only reachable for tiny zooms).
    """
    n_tiles = 1 << zoom
    left, top = patch_window(center_px, patch_px)
    tx0, tx1 = left // BASE_TILE_PX, (left + patch_px - 1) // BASE_TILE_PX
    ty0, ty1 = top // BASE_TILE_PX, (top + patch_px - 1) // BASE_TILE_PX
    mosaic = np.zeros(((ty1 - ty0 + 1) * BASE_TILE_PX, (tx1 - tx0 + 1) * BASE_TILE_PX, 3), dtype=np.uint8)
    for ty in range(ty0, ty1 + 1):
        ty_clamped = min(max(ty, 0), n_tiles - 1)
        for tx in range(tx0, tx1 + 1):
            tx_wrapped = tx % n_tiles
            if cache is not None:
                data = cache.get_or_fetch(provider, tx_wrapped, ty_clamped, zoom, attempts=attempts, backoff_s=backoff_s)
            else:
                data = fetch_tile(provider, tx_wrapped, ty_clamped, zoom, attempts=attempts, backoff_s=backoff_s)
            r0 = (ty - ty0) * BASE_TILE_PX
            c0 = (tx - tx0) * BASE_TILE_PX
            mosaic[r0 : r0 + BASE_TILE_PX, c0 : c0 + BASE_TILE_PX] = _decode_tile(data)
    row = top - ty0 * BASE_TILE_PX
    col = left - tx0 * BASE_TILE_PX
    return mosaic[row : row + patch_px, col : col + patch_px].copy()
