"""Pair ground photos with centered overhead patches; dataset split and manifest."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from ..errors import DomainError, PairRejected
from .providers import DEFAULT_FETCH_ATTEMPTS, TileCache, TileProvider, crop_centered_patch
from .tilemath import latlon_to_pixel, zoom_for_resolution
from .types import MERCATOR_MAX_LAT, CaptureTime, GeoLocation, GeoSample, ImageRef


@dataclass
class PhotoRecord:
    """A source photo before pairing; location is None when not geotagged."""

    id: str
    image: ImageRef
    location: GeoLocation | None
    time: CaptureTime


@dataclass
class PairingStats:
    paired: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    def reject(self, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1


def pair_sample(
    photo: PhotoRecord,
    provider: TileProvider,
    target_m_per_px: float = 0.6,
    patch_px: int = 256,
    cache: TileCache | None = None,
    patch_dir: str | Path | None = None,
    attempts: int = DEFAULT_FETCH_ATTEMPTS,
    backoff_s: float = 0.1,
) -> GeoSample:
    """Fetch an overhead patch centered on the photo's location.

    The zoom is the smallest one meeting target_m_per_px at the photo's
    latitude; the patch center lands within half a pixel of the location.
    Photos without a geotag (or beyond the mercator latitude limit) raise
    PairRejected with a reason code.
    """
    if photo.location is None:
        raise PairRejected("not_geotagged", f"photo {photo.id} has no geotag")
    if abs(photo.location.lat) > MERCATOR_MAX_LAT:
        raise PairRejected("beyond_mercator", f"photo {photo.id} at lat {photo.location.lat}")
    zoom = zoom_for_resolution(photo.location.lat, target_m_per_px)
    center_px = latlon_to_pixel(photo.location, zoom)
    patch = crop_centered_patch(
        provider, center_px, zoom, patch_px, cache=cache, attempts=attempts, backoff_s=backoff_s
    )
    tile_ref: ImageRef = patch
    if patch_dir is not None:
        patch_dir = Path(patch_dir)
        patch_dir.mkdir(parents=True, exist_ok=True)
        tile_path = patch_dir / f"{photo.id}.png"
        Image.fromarray(patch).save(tile_path)
        tile_ref = tile_path
    return GeoSample(
        id=photo.id,
        ground_image=photo.image,
        overhead_tile=tile_ref,
        location=photo.location,
        time=photo.time,
    )


def pair_samples(
    photos: Iterable[PhotoRecord],
    provider: TileProvider,
    max_workers: int = 1,
    **kwargs,
) -> tuple[list[GeoSample], PairingStats]:
    """Pair a photo stream, counting rejections by reason code.

    With max_workers > 1 fetches run in a bounded thread pool (the provider
    must be safe for concurrent fetches); output order follows input order.
    """
    stats = PairingStats()
    photos = list(photos)
    results: list[GeoSample | None] = [None] * len(photos)

    def one(i: int) -> None:
        try:
            results[i] = pair_sample(photos[i], provider, **kwargs)
        except PairRejected as exc:
            stats.reject(exc.reason)

    if max_workers <= 1:
        for i in range(len(photos)):
            one(i)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(one, range(len(photos))))
    samples = [s for s in results if s is not None]
    stats.paired = len(samples)
    return samples, stats


def split_dataset(samples: Sequence, test_count: int, seed: int) -> tuple[list, list]:
    """Disjoint, exhaustive, seed-deterministic train/test split."""
    if test_count < 0 or test_count > len(samples):
        raise DomainError(f"test_count {test_count} outside [0, {len(samples)}]")
    order = list(range(len(samples)))
    random.Random(seed).shuffle(order)
    test_idx = set(order[:test_count])
    train = [samples[i] for i in order[test_count:]]
    test = [samples[i] for i in order[:test_count]]
    assert len(train) + len(test) == len(samples) and not test_idx.intersection(order[test_count:])
    return train, test


def _ref_to_str(ref: ImageRef) -> str:
    if isinstance(ref, np.ndarray):
        raise DomainError("in-memory image cannot be written to a manifest; pass patch_dir when pairing")
    return str(ref)


def write_manifest(samples: Iterable[GeoSample], path: str | Path) -> int:
    """Write one line-delimited JSON record per sample; returns the count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for s in samples:
            record = {
                "id": s.id,
                "ground_path": _ref_to_str(s.ground_image),
                "tile_path": _ref_to_str(s.overhead_tile),
                "lat": s.location.lat,
                "lon": s.location.lon,
                "year": s.time.year,
                "month": s.time.month,
                "day": s.time.day,
                "hour": s.time.hour,
            }
            fh.write(json.dumps(record) + "\n")
            n += 1
    return n


def read_manifest(path: str | Path) -> list[GeoSample]:
    samples = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            r = json.loads(line)
            samples.append(
                GeoSample(
                    id=r["id"],
                    ground_image=r["ground_path"],
                    overhead_tile=r["tile_path"],
                    location=GeoLocation(r["lat"], r["lon"]),
                    time=CaptureTime(r["year"], r["month"], r["day"], r["hour"]),
                )
            )
    return samples
