"""Geographic domain types: locations, capture times, samples, region grids."""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import DomainError

# Web-mercator is undefined beyond this latitude (atan(sinh(pi)) in degrees).
MERCATOR_MAX_LAT = 85.0511287798066

ImageRef = Union[str, Path, np.ndarray]


def _normalize_lon(lon: float) -> float:
    """Wrap a longitude in degrees into [-180, 180)."""
    wrapped = (float(lon) + 180.0) % 360.0 - 180.0
    # The modulo can return +180.0 for inputs like -180 - 1e-15.
    return -180.0 if wrapped == 180.0 else wrapped


@dataclass(frozen=True, order=True)
class GeoLocation:
    """A WGS84 point; lat in [-90, 90], lon normalized into [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self):
        if not np.isfinite(self.lat) or not -90.0 <= self.lat <= 90.0:
            raise DomainError(f"latitude {self.lat!r} outside [-90, 90]")
        if not np.isfinite(self.lon):
            raise DomainError(f"longitude {self.lon!r} is not finite")
        object.__setattr__(self, "lat", float(self.lat))
        object.__setattr__(self, "lon", _normalize_lon(self.lon))


@dataclass(frozen=True)
class CaptureTime:
    """Calendar-valid capture timestamp at hour granularity (UTC)."""

    year: int
    month: int
    day: int
    hour: int

    def __post_init__(self):
        try:
            _dt.datetime(self.year, self.month, self.day)
        except ValueError as exc:
            raise DomainError(f"invalid calendar date {self.year}-{self.month}-{self.day}: {exc}") from exc
        if not 0 <= self.hour <= 23:
            raise DomainError(f"hour {self.hour} outside [0, 23]")

    @classmethod
    def from_datetime(cls, dt: _dt.datetime) -> "CaptureTime":
        """Build from a datetime; aware datetimes are converted to UTC first."""
        if dt.tzinfo is not None:
            dt = dt.astimezone(_dt.timezone.utc)
        return cls(dt.year, dt.month, dt.day, dt.hour)


@dataclass
class GeoSample:
    """A ground photo, its co-located overhead tile, and capture metadata."""

    id: str
    ground_image: ImageRef
    overhead_tile: ImageRef
    location: GeoLocation
    time: CaptureTime


@dataclass(frozen=True)
class RegionSpec:
    """A mercator-valid bounding box plus the zoom/tile size used to grid it.

    bbox is (min_lat, min_lon, max_lat, max_lon) in degrees.
    """

    bbox: tuple[float, float, float, float]
    zoom: int
    tile_px: int = 256

    def __post_init__(self):
        min_lat, min_lon, max_lat, max_lon = self.bbox
        if not (min_lat < max_lat and min_lon < max_lon):
            raise DomainError(f"bbox must have min < max on both axes, got {self.bbox}")
        if max(abs(min_lat), abs(max_lat)) > MERCATOR_MAX_LAT:
            raise DomainError(f"bbox latitude beyond mercator limit +/-{MERCATOR_MAX_LAT}")
        if not (-180.0 <= min_lon and max_lon <= 180.0):
            raise DomainError(f"bbox longitude outside [-180, 180], got {self.bbox}")
        if self.zoom < 0 or int(self.zoom) != self.zoom:
            raise DomainError(f"zoom must be a non-negative integer, got {self.zoom}")
        if self.tile_px < 1:
            raise DomainError(f"tile_px must be positive, got {self.tile_px}")
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        object.__setattr__(self, "zoom", int(self.zoom))
        object.__setattr__(self, "tile_px", int(self.tile_px))

    def to_dict(self) -> dict:
        return {"bbox": list(self.bbox), "zoom": self.zoom, "tile_px": self.tile_px}

    @classmethod
    def from_dict(cls, d: dict) -> "RegionSpec":
        return cls(bbox=tuple(d["bbox"]), zoom=int(d["zoom"]), tile_px=int(d.get("tile_px", 256)))


@dataclass
class TileGrid:
    """Non-overlapping adjacent pixel-space cells covering a RegionSpec.

    Row 0 is the northernmost row. The grid is centered on the bbox so every
    cell center falls strictly inside it; origin_px is the grid's top-left
    corner in global pixel coordinates at `region.zoom`.
    """

    region: RegionSpec
    rows: int
    cols: int
    origin_px: tuple[float, float] = field(repr=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("grid must have at least one cell")

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def cell_center_px(self, row: int, col: int) -> tuple[float, float]:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise DomainError(f"cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        t = self.region.tile_px
        return (self.origin_px[0] + (col + 0.5) * t, self.origin_px[1] + (row + 0.5) * t)

    def cell_center(self, row: int, col: int) -> GeoLocation:
        from .tilemath import pixel_to_latlon

        px, py = self.cell_center_px(row, col)
        return pixel_to_latlon(px, py, self.region.zoom)

    @property
    def cell_centers(self) -> list[list[GeoLocation]]:
        return [[self.cell_center(r, c) for c in range(self.cols)] for r in range(self.rows)]
