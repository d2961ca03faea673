"""Command line interface.

Exit codes: 0 success, 2 usage error (click), 1 runtime error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .encoders.model import (
    DEFAULT_MODEL_SEED,
    CrossViewModel,
    adapters_for,
    load_checkpoint,
    toy_encoder_config,
)
from .errors import GroundcastError
from .geodata.providers import FixtureTileProvider, HttpXYZProvider
from .geodata.types import CaptureTime, RegionSpec
from .mapstore import Catalog
from .queryengine.heatmap import QueryRequest, query_heatmap
from .queryengine.render import render_heatmap
from .trainer.config import TrainConfig
from .trainer.fixtures import generate_fixture_pairs
from .trainer.loop import TrainLoop


def _load_model(checkpoint: str | None, seed: int = DEFAULT_MODEL_SEED) -> CrossViewModel:
    if checkpoint:
        return load_checkpoint(checkpoint)
    return CrossViewModel.create(toy_encoder_config(), seed=seed)


def _provider_from_flag(provider: str):
    if provider == "fixture" or provider.startswith("fixture:"):
        seed = int(provider.split(":", 1)[1]) if ":" in provider else 0
        return FixtureTileProvider(seed=seed)
    if provider.startswith("xyz:"):
        return HttpXYZProvider(provider.split(":", 1)[1])
    raise click.UsageError(f"unknown provider {provider!r}; use 'fixture[:seed]' or 'xyz:<url-template>'")


def _parse_time(year, month, day, hour) -> CaptureTime | None:
    if year is None and month is None and day is None and hour is None:
        return None
    return CaptureTime(year or 2020, month or 7, day or 15, hour if hour is not None else 12)


@click.group()
def main() -> None:
    """Cross-view embedding training and zero-shot text-to-map queries."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def train(config_path: str, out_dir: str) -> None:
    """Train on a manifest or synthetic fixtures per a flat JSON config."""
    try:
        raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        fixture_n = raw.pop("fixture_pairs", None)
        fixture_seed = raw.pop("fixture_seed", 0)
        fixture_shift = raw.pop("fixture_metadata_shift", False)
        manifest = raw.pop("dataset_manifest", None)
        embed_dim = raw.pop("embed_dim", 64)
        model_seed = raw.pop("model_seed", DEFAULT_MODEL_SEED)
        config = TrainConfig.from_flat_dict(raw)
        encoder_config = toy_encoder_config(embed_dim=embed_dim)
        if fixture_n:
            dataset = generate_fixture_pairs(
                int(fixture_n), embed_dim, seed=int(fixture_seed), metadata_shift=bool(fixture_shift)
            ).samples
        elif manifest:
            from .geodata.pairing import read_manifest

            dataset = read_manifest(manifest)
        else:
            raise GroundcastError("config needs fixture_pairs or dataset_manifest")
        loop = TrainLoop(config, encoder_config, dataset, model_seed=model_seed)
        result = loop.fit(out_dir=out_dir)
        click.echo(json.dumps({"steps": result["steps"], "final_loss": result["final_loss"], "checkpoint": result["checkpoint"]}))
    except GroundcastError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("embed-region")
@click.option("--catalog", "catalog_dir", required=True, type=click.Path(file_okay=False))
@click.option("--name", required=True)
@click.option("--bbox", required=True, help="min_lat,min_lon,max_lat,max_lon")
@click.option("--zoom", required=True, type=int)
@click.option("--tile-px", default=256, type=int)
@click.option("--provider", default="fixture", help="fixture[:seed] or xyz:<url-template>")
@click.option("--checkpoint", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--year", type=int, default=None)
@click.option("--month", type=int, default=None)
@click.option("--day", type=int, default=None)
@click.option("--hour", type=int, default=None)
def embed_region(catalog_dir, name, bbox, zoom, tile_px, provider, checkpoint, year, month, day, hour) -> None:
    """Precompute embeddings for every tile of a region."""
    try:
        parts = [float(v) for v in bbox.split(",")]
        if len(parts) != 4:
            raise click.UsageError("--bbox needs four comma-separated numbers")
        spec = RegionSpec(bbox=tuple(parts), zoom=zoom, tile_px=tile_px)
        model = _load_model(checkpoint)
        store = Catalog(catalog_dir).ingest(
            name, spec, model, _provider_from_flag(provider), meta=_parse_time(year, month, day, hour)
        )
        click.echo(json.dumps({"region_id": store.region_id, "status": store.status, "rows": store.rows, "cols": store.cols}))
        if store.status != "ready":
            sys.exit(1)
    except GroundcastError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("map")
@click.option("--catalog", "catalog_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--region", "region_id", required=True)
@click.option("--prompt", required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--checkpoint", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--year", type=int, default=None)
@click.option("--month", type=int, default=None)
@click.option("--day", type=int, default=None)
@click.option("--hour", type=int, default=None)
@click.option("--scale", type=int, default=8, help="raster pixels per grid cell")
def map_cmd(catalog_dir, region_id, prompt, out_path, checkpoint, year, month, day, hour, scale) -> None:
    """Render a heatmap raster (+ JSON sidecar) for a text prompt."""
    try:
        model = _load_model(checkpoint)
        _, text_adapter = adapters_for(model.config)
        store = Catalog(catalog_dir).get(region_id)
        time = _parse_time(year, month, day, hour)
        req = QueryRequest(text=prompt, region_id=region_id, time=time, use_meta=time is not None)
        heatmap = query_heatmap(store, req, model, text_adapter)
        render_heatmap(heatmap, out_path, scale=scale)
        cell = heatmap.argmax_cell
        loc = heatmap.argmax_location
        click.echo(json.dumps({"out": str(out_path), "argmax": {"row": cell[0], "col": cell[1], "lat": loc.lat, "lon": loc.lon}}))
    except GroundcastError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("eval-retrieval")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pairs", default=64, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--metadata-shift/--no-metadata-shift", default=False)
@click.option("--table", is_flag=True, help="also print an aligned text table")
def eval_retrieval(checkpoint, pairs, seed, metadata_shift, table) -> None:
    """Cross-view R@5 / R@10 / median rank on fixture pairs, both directions."""
    try:
        from .evaluation import cross_view_report, format_report_table

        model = load_checkpoint(checkpoint)
        ground_adapter, _ = adapters_for(model.config)
        dataset = generate_fixture_pairs(pairs, model.config.embed_dim, seed=seed, metadata_shift=metadata_shift)
        use_meta = model.dynamic is not None
        overhead = model.embed_tiles(
            [s.overhead_tile for s in dataset.samples],
            locations=[s.location for s in dataset.samples],
            times=[s.time for s in dataset.samples],
            use_meta=use_meta,
        )
        ground = ground_adapter.embed_images([s.ground_image for s in dataset.samples])
        rows = []
        for direction in ("Overhead2Ground", "Ground2Overhead"):
            report = cross_view_report(overhead, ground, direction).to_dict()
            report.update({"meta_training": use_meta, "meta_dropout": use_meta, "meta_inference": use_meta})
            rows.append(report)
        click.echo(json.dumps(rows, indent=2))
        if table:
            click.echo(format_report_table(rows))
    except GroundcastError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("eval-silhouette")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pairs", default=64, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--k-list", default="2,4,8,16", help="comma-separated cluster counts")
def eval_silhouette(checkpoint, pairs, seed, k_list) -> None:
    """Silhouette-vs-k comparison: trained embeddings vs frozen-adapter baseline."""
    try:
        from .evaluation import silhouette_curve

        model = load_checkpoint(checkpoint)
        ground_adapter, _ = adapters_for(model.config)
        dataset = generate_fixture_pairs(pairs, model.config.embed_dim, seed=seed)
        tiles = [s.overhead_tile for s in dataset.samples]
        trained = model.embed_tiles(tiles)
        baseline = ground_adapter.embed_images(tiles)
        ks = [int(v) for v in k_list.split(",") if v]
        click.echo(json.dumps(silhouette_curve(trained, baseline, ks, seed=seed), indent=2))
    except GroundcastError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.option(
    "--catalog", "catalog_dir", required=True, envvar="GROUNDCAST_CATALOG", type=click.Path(file_okay=False)
)
@click.option("--port", default=8765, type=int, envvar="GROUNDCAST_PORT")
@click.option("--host", default="127.0.0.1")
@click.option("--checkpoint", default=None, type=click.Path(exists=True, dir_okay=False))
def serve(catalog_dir, port, host, checkpoint) -> None:
    """Serve the catalog + query API over HTTP."""
    from .queryengine.service import serve as run_service

    run_service(catalog_dir, port=port, host=host, checkpoint=checkpoint)


if __name__ == "__main__":
    main()
