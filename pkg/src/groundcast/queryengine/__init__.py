from .heatmap import Heatmap, QueryRequest, localize, normalize_and_clip, query_heatmap
from .render import HIGH_COLOR, LOW_COLOR, render_heatmap, value_to_rgba
from .service import create_app, serve

__all__ = [
    "Heatmap",
    "QueryRequest",
    "localize",
    "normalize_and_clip",
    "query_heatmap",
    "render_heatmap",
    "value_to_rgba",
    "LOW_COLOR",
    "HIGH_COLOR",
    "create_app",
    "serve",
]
