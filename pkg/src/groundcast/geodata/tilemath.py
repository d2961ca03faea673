"""Web-mercator (slippy map) pixel math with 256 px world tiles.

The world at zoom z is a square of 256 * 2**z pixels. Pixel x grows eastward
from lon=-180, pixel y grows southward from the mercator top edge
(lat = +85.0511...).
"""

from __future__ import annotations

import math

from ..errors import DomainError
from .types import MERCATOR_MAX_LAT, GeoLocation, RegionSpec, TileGrid

EARTH_RADIUS_M = 6378137.0
BASE_TILE_PX = 256
# meters per pixel at the equator, zoom 0: earth circumference / 256
_EQUATOR_M_PER_PX = 2.0 * math.pi * EARTH_RADIUS_M / BASE_TILE_PX


def _check_mercator_lat(lat: float) -> None:
    if not math.isfinite(lat) or abs(lat) > MERCATOR_MAX_LAT:
        raise DomainError(f"latitude {lat!r} beyond mercator limit +/-{MERCATOR_MAX_LAT}")


def ground_resolution(lat: float, zoom: int) -> float:
    """Meters of ground per pixel at a latitude and zoom level.

    (2*pi*6378137 / 256) * cos(lat) / 2**zoom; 156543.0339 m/px at the
    equator for zoom 0, halving with each zoom level.
    """
    _check_mercator_lat(lat)
    if zoom < 0 or int(zoom) != zoom:
        raise DomainError(f"zoom must be a non-negative integer, got {zoom}")
    return _EQUATOR_M_PER_PX * math.cos(math.radians(lat)) / (1 << int(zoom))


def zoom_for_resolution(lat: float, target_m_per_px: float) -> int:
    """Smallest zoom whose ground resolution at `lat` is <= the target."""
    if not (target_m_per_px > 0.0) or not math.isfinite(target_m_per_px):
        raise DomainError(f"target resolution must be positive, got {target_m_per_px!r}")
    base = ground_resolution(lat, 0)
    if base <= target_m_per_px:
        return 0
    zoom = max(0, math.ceil(math.log2(base / target_m_per_px)))
    # guard the float log against boundary rounding
    while ground_resolution(lat, zoom) > target_m_per_px:
        zoom += 1
    while zoom > 0 and ground_resolution(lat, zoom - 1) <= target_m_per_px:
        zoom -= 1
    return zoom


def latlon_to_pixel(loc: GeoLocation, zoom: int) -> tuple[float, float]:
    """Global pixel coordinates of a location at a zoom level."""
    _check_mercator_lat(loc.lat)
    if zoom < 0 or int(zoom) != zoom:
        raise DomainError(f"zoom must be a non-negative integer, got {zoom}")
    n = BASE_TILE_PX * (1 << int(zoom))
    px = (loc.lon + 180.0) / 360.0 * n
    siny = math.sin(math.radians(loc.lat))
    py = (0.5 - math.log((1.0 + siny) / (1.0 - siny)) / (4.0 * math.pi)) * n
    return px, py


def pixel_to_latlon(px: float, py: float, zoom: int) -> GeoLocation:
    """Inverse of latlon_to_pixel (round-trip error below 1e-9 degrees)."""
    if zoom < 0 or int(zoom) != zoom:
        raise DomainError(f"zoom must be a non-negative integer, got {zoom}")
    n = BASE_TILE_PX * (1 << int(zoom))
    lon = px / n * 360.0 - 180.0
    lat = math.degrees(math.atan(math.sinh(math.pi * (1.0 - 2.0 * py / n))))
    return GeoLocation(lat=lat, lon=lon)


def build_grid(spec: RegionSpec) -> TileGrid:
    """Grid a region into ceil-sized rows/cols of tile_px pixel cells.

    The grid is centered on the bbox: the ceil overflow is split evenly
    between both sides of each axis, which keeps every cell center strictly
    inside the bbox while the cell union still covers it.
    """
    min_lat, min_lon, max_lat, max_lon = spec.bbox
    x0, y0 = latlon_to_pixel(GeoLocation(max_lat, min_lon), spec.zoom)  # NW corner
    x1, y1 = latlon_to_pixel(GeoLocation(min_lat, max_lon), spec.zoom)  # SE corner
    width, height = x1 - x0, y1 - y0
    if width <= 0.0 or height <= 0.0:
        raise DomainError(f"bbox spans no pixels at zoom {spec.zoom}")
    cols = max(1, math.ceil(width / spec.tile_px))
    rows = max(1, math.ceil(height / spec.tile_px))
    origin_x = x0 - (cols * spec.tile_px - width) / 2.0
    origin_y = y0 - (rows * spec.tile_px - height) / 2.0
    return TileGrid(region=spec, rows=rows, cols=cols, origin_px=(origin_x, origin_y))
