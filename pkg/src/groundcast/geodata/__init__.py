from .types import (
    MERCATOR_MAX_LAT,
    CaptureTime,
    GeoLocation,
    GeoSample,
    ImageRef,
    RegionSpec,
    TileGrid,
)
from .tilemath import (
    BASE_TILE_PX,
    EARTH_RADIUS_M,
    build_grid,
    ground_resolution,
    latlon_to_pixel,
    pixel_to_latlon,
    zoom_for_resolution,
)
from .providers import (
    FixtureTileProvider,
    HttpXYZProvider,
    TileCache,
    TileProvider,
    crop_centered_patch,
    fetch_tile,
    patch_window,
)
from .pairing import (
    PairingStats,
    PhotoRecord,
    pair_sample,
    pair_samples,
    read_manifest,
    split_dataset,
    write_manifest,
)

__all__ = [
    "MERCATOR_MAX_LAT",
    "BASE_TILE_PX",
    "EARTH_RADIUS_M",
    "GeoLocation",
    "CaptureTime",
    "GeoSample",
    "ImageRef",
    "RegionSpec",
    "TileGrid",
    "build_grid",
    "ground_resolution",
    "latlon_to_pixel",
    "pixel_to_latlon",
    "zoom_for_resolution",
    "FixtureTileProvider",
    "HttpXYZProvider",
    "TileCache",
    "TileProvider",
    "crop_centered_patch",
    "fetch_tile",
    "patch_window",
    "PhotoRecord",
    "PairingStats",
    "pair_sample",
    "pair_samples",
    "split_dataset",
    "write_manifest",
    "read_manifest",
]
