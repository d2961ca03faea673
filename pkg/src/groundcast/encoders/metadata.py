"""Sin-cos encoding of capture time and location.

Layout (11 features, fixed order):
    sin/cos(2*pi * hour/24), sin/cos(2*pi * (day-1)/31),
    sin/cos(2*pi * (month-1)/12), (year-2000)/100,
    sin/cos(2*pi * lon/360), sin(lat), cos(lat)   [lat in radians]
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..geodata.types import CaptureTime, GeoLocation

FEATURE_LAYOUT = (
    "sin_hour",
    "cos_hour",
    "sin_day",
    "cos_day",
    "sin_month",
    "cos_month",
    "year_scaled",
    "sin_lon",
    "cos_lon",
    "sin_lat",
    "cos_lat",
)
METADATA_DIM = len(FEATURE_LAYOUT)


@dataclass(frozen=True)
class MetadataEncoding:
    features: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float32)
        if features.shape != (METADATA_DIM,):
            raise ValueError(f"expected {METADATA_DIM} features, got shape {features.shape}")
        object.__setattr__(self, "features", features)

    def block(self, name: str) -> np.ndarray:
        pairs = {"hour": (0, 2), "day": (2, 4), "month": (4, 6), "lon": (7, 9), "lat": (9, 11)}
        if name == "year":
            return self.features[6:7]
        lo, hi = pairs[name]
        return self.features[lo:hi]


def encode_metadata(location: GeoLocation, time: CaptureTime) -> MetadataEncoding:
    """Deterministic sin-cos features for one (location, time) pair."""
    hour_a = 2.0 * math.pi * time.hour / 24.0
    day_a = 2.0 * math.pi * (time.day - 1) / 31.0
    month_a = 2.0 * math.pi * (time.month - 1) / 12.0
    lon_a = 2.0 * math.pi * location.lon / 360.0
    lat_r = math.radians(location.lat)
    feats = np.array(
        [
            math.sin(hour_a),
            math.cos(hour_a),
            math.sin(day_a),
            math.cos(day_a),
            math.sin(month_a),
            math.cos(month_a),
            (time.year - 2000) / 100.0,
            math.sin(lon_a),
            math.cos(lon_a),
            math.sin(lat_r),
            math.cos(lat_r),
        ],
        dtype=np.float32,
    )
    return MetadataEncoding(features=feats)


def encode_metadata_batch(locations: Sequence[GeoLocation], times: Sequence[CaptureTime]) -> np.ndarray:
    if len(locations) != len(times):
        raise ValueError("locations and times must have equal length")
    return np.stack([encode_metadata(loc, t).features for loc, t in zip(locations, times)])
