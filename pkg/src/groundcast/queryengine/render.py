"""Raster output: heatmap values to an RGBA PNG plus a georeferencing sidecar.

Colormap contract (documented, mirrored by the browser client):
  value 0            -> fully transparent (0, 0, 0, 0)
  value v in [0.5,1] -> per-channel linear interpolation between
                        LOW_COLOR at 0.5 and HIGH_COLOR at 1.0, rounded.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import GroundcastError
from .heatmap import Heatmap

LOW_COLOR = (33, 102, 172, 140)
HIGH_COLOR = (178, 24, 43, 230)


def value_to_rgba(value: float) -> tuple[int, int, int, int]:
    if value <= 0.0:
        return (0, 0, 0, 0)
    t = (min(max(value, 0.5), 1.0) - 0.5) / 0.5
    return tuple(int(round(lo + (hi - lo) * t)) for lo, hi in zip(LOW_COLOR, HIGH_COLOR))


def render_heatmap(heatmap: Heatmap, out_path: str | Path, scale: int = 1) -> Path:
    """Write a rows*scale x cols*scale RGBA raster and a JSON sidecar."""
    out_path = Path(out_path)
    rgba = np.zeros((heatmap.rows, heatmap.cols, 4), dtype=np.uint8)
    for r in range(heatmap.rows):
        for c in range(heatmap.cols):
            rgba[r, c] = value_to_rgba(float(heatmap.values[r, c]))
    if scale > 1:
        rgba = np.repeat(np.repeat(rgba, scale, axis=0), scale, axis=1)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(rgba, mode="RGBA").save(out_path, format="PNG")
        argmax_cell = heatmap.argmax_cell
        argmax_loc = heatmap.argmax_location
        sidecar = {
            "bbox": list(heatmap.spec.bbox),
            "zoom": heatmap.spec.zoom,
            "rows": heatmap.rows,
            "cols": heatmap.cols,
            "query": heatmap.query,
            "meta": None
            if heatmap.meta is None
            else {
                "year": heatmap.meta.year,
                "month": heatmap.meta.month,
                "day": heatmap.meta.day,
                "hour": heatmap.meta.hour,
            },
            "argmax": {
                "row": argmax_cell[0],
                "col": argmax_cell[1],
                "lat": argmax_loc.lat,
                "lon": argmax_loc.lon,
            },
        }
        sidecar_path = out_path.with_suffix(out_path.suffix + ".json")
        sidecar_path.write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    except OSError as exc:
        raise GroundcastError(f"cannot write raster to {out_path}: {exc}") from exc
    return out_path
