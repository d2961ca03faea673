"""HTTP/JSON service exposing the catalog and zero-shot queries.

Endpoints:
  POST /regions                 202 {region_id}; precompute runs in background
  GET  /regions                 [{region_id, status, spec}]
  GET  /regions/{id}/query      200 {rows, cols, bbox, values, argmax{...}}
  GET  /healthz                 200 {status: ok}

Errors: 404 unknown region, 409 not-ready region, 422 invalid parameters.
"""

from __future__ import annotations

import threading
from typing import Any

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from ..encoders.model import (
    DEFAULT_MODEL_SEED,
    CrossViewModel,
    adapters_for,
    load_checkpoint,
    toy_encoder_config,
)
from ..errors import DomainError, NotFoundError, StoreFormatError
from ..geodata.providers import FixtureTileProvider, HttpXYZProvider
from ..geodata.types import CaptureTime, RegionSpec
from ..mapstore import Catalog, derive_region_id
from .heatmap import QueryRequest, query_heatmap

META_DEFAULTS = {"year": 2020, "month": 7, "day": 15, "hour": 12}


class ProviderSpec(BaseModel):
    type: str = "fixture"
    seed: int = 0
    url_template: str | None = None


class RegionRequest(BaseModel):
    name: str = Field(min_length=1)
    bbox: tuple[float, float, float, float]
    zoom: int
    tile_px: int = 256
    provider: ProviderSpec = ProviderSpec()
    time: dict[str, int] | None = None  # optional precompute-time conditioning


def _build_provider(spec: ProviderSpec):
    if spec.type == "fixture":
        return FixtureTileProvider(seed=spec.seed)
    if spec.type == "xyz":
        if not spec.url_template:
            raise DomainError("xyz provider needs url_template")
        return HttpXYZProvider(spec.url_template)
    raise DomainError(f"unknown provider type {spec.type!r}")


def _capture_time(year, month, day, hour) -> CaptureTime | None:
    if year is None and month is None and day is None and hour is None:
        return None
    return CaptureTime(
        year if year is not None else META_DEFAULTS["year"],
        month if month is not None else META_DEFAULTS["month"],
        day if day is not None else META_DEFAULTS["day"],
        hour if hour is not None else META_DEFAULTS["hour"],
    )


def create_app(
    catalog_dir,
    model: CrossViewModel | None = None,
    checkpoint: str | None = None,
    model_seed: int = DEFAULT_MODEL_SEED,
) -> FastAPI:
    """App factory; without a checkpoint a seeded toy model serves queries."""
    catalog = Catalog(catalog_dir)
    if model is None:
        model = load_checkpoint(checkpoint) if checkpoint else CrossViewModel.create(
            toy_encoder_config(), seed=model_seed
        )
    model.eval()
    _, text_adapter = adapters_for(model.config)

    app = FastAPI(title="groundcast", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.catalog = catalog
    app.state.model = model
    ingest_lock = threading.Lock()
    in_flight: set[str] = set()

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/regions")
    def list_regions() -> list[dict]:
        return catalog.list()

    @app.post("/regions", status_code=202)
    def create_region(req: RegionRequest) -> dict:
        try:
            spec = RegionSpec(bbox=req.bbox, zoom=req.zoom, tile_px=req.tile_px)
            provider = _build_provider(req.provider)
            meta = None
            if req.time is not None:
                meta = _capture_time(
                    req.time.get("year"), req.time.get("month"), req.time.get("day"), req.time.get("hour")
                )
        except DomainError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        region_id = derive_region_id(req.name, spec)
        with ingest_lock:
            if region_id in in_flight:
                return {"region_id": region_id, "status": "pending"}
            in_flight.add(region_id)
        catalog.note_spec(region_id, spec)
        catalog.mark(region_id, "pending")

        def run() -> None:
            try:
                catalog.ingest(req.name, spec, model, provider, meta=meta)
            except Exception as exc:  # pragma: no cover - defensive
                catalog.mark(region_id, "failed", errors=[{"error": str(exc)}])
            finally:
                with ingest_lock:
                    in_flight.discard(region_id)

        threading.Thread(target=run, daemon=True).start()
        return {"region_id": region_id, "status": "pending"}

    @app.get("/regions/{region_id}/query")
    def query_region(
        region_id: str,
        text: str = Query(min_length=1),
        year: int | None = None,
        month: int | None = None,
        day: int | None = None,
        hour: int | None = None,
        use_meta: bool = False,
        raw: bool = False,
    ) -> dict[str, Any]:
        try:
            status = catalog.status(region_id)
        except NotFoundError:
            raise HTTPException(status_code=404, detail=f"unknown region {region_id!r}") from None
        if status.get("status") != "ready":
            raise HTTPException(
                status_code=409, detail=f"region {region_id} is {status.get('status', 'pending')}"
            )
        try:
            time = _capture_time(year, month, day, hour)
            if time is not None:
                use_meta = True
            req = QueryRequest(text=text, region_id=region_id, time=time, use_meta=use_meta, raw=raw)
            store = catalog.get(region_id)
            heatmap = query_heatmap(store, req, model, text_adapter)
        except NotFoundError:
            raise HTTPException(status_code=404, detail=f"unknown region {region_id!r}") from None
        except (DomainError, StoreFormatError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        cell, loc = heatmap.argmax_cell, heatmap.argmax_location
        return {
            "region_id": region_id,
            "rows": heatmap.rows,
            "cols": heatmap.cols,
            "bbox": list(heatmap.spec.bbox),
            "query": heatmap.query,
            "raw": heatmap.raw,
            "meta": None
            if heatmap.meta is None
            else {
                "year": heatmap.meta.year,
                "month": heatmap.meta.month,
                "day": heatmap.meta.day,
                "hour": heatmap.meta.hour,
            },
            "values": [float(v) for v in heatmap.values.reshape(-1)],
            "argmax": {"row": cell[0], "col": cell[1], "lat": loc.lat, "lon": loc.lon},
        }

    return app


def serve(catalog_dir, port: int = 8765, host: str = "127.0.0.1", **app_kwargs) -> None:
    import uvicorn

    uvicorn.run(create_app(catalog_dir, **app_kwargs), host=host, port=port)
