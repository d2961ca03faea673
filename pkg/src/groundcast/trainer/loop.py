"""Training loop: batched InfoNCE steps, dropout gating, checkpointing, resume.

RNG is split into three dedicated torch Generators (batch sampling,
augmentation, dropout gate) so toggling one feature never shifts another
stream; their states serialize with the rest of TrainState, making a resumed
run loss-for-loss identical to an uninterrupted one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch.optim.lr_scheduler import CosineAnnealingWarmRestarts

from ..contrastive import EmbeddingQueue, info_nce
from ..encoders.adapters import load_image_array
from ..encoders.metadata import encode_metadata_batch
from ..encoders.model import (
    DEFAULT_MODEL_SEED,
    CrossViewModel,
    EncoderConfig,
    adapters_for,
    preprocess_tiles,
    save_checkpoint,
)
from ..errors import ConfigError, DomainError, TrainingAborted
from ..evaluation import cosine_similarity_matrix, recall_at_k
from ..geodata.types import GeoSample
from .augment import augment_overhead
from .config import TrainConfig

TRAIN_STATE_VERSION = 1


def simulate_gates(p: float, n: int, seed: int) -> np.ndarray:
    """n metadata-use decisions exactly as the training gate draws them."""
    gen = torch.Generator().manual_seed(seed)
    return (torch.rand(n, generator=gen) >= p).numpy()


@dataclass
class TrainState:
    """Mutable loop state; everything here round-trips through save/load."""

    step: int = 0
    metrics: list[dict] = field(default_factory=list)
    best_loss: float = math.inf


class TrainLoop:
    """Owns the model, frozen adapters, queue, optimizer, and RNG streams."""

    def __init__(
        self,
        config: TrainConfig,
        encoder_config: EncoderConfig,
        dataset: Sequence[GeoSample],
        model: CrossViewModel | None = None,
        model_seed: int = DEFAULT_MODEL_SEED,
    ):
        if len(dataset) == 0:
            raise DomainError("dataset must be non-empty")
        if config.queue_capacity < min(config.batch_size, len(dataset)):
            raise ConfigError("queue capacity smaller than the effective batch size")
        self.config = config
        self.encoder_config = encoder_config
        self.dataset = list(dataset)
        self.model = model if model is not None else CrossViewModel.create(encoder_config, seed=model_seed)
        self.model.train()
        self.ground_adapter, self.text_adapter = adapters_for(encoder_config)

        self.tiles = [load_image_array(s.overhead_tile) for s in self.dataset]
        self.meta_features = torch.from_numpy(
            encode_metadata_batch([s.location for s in self.dataset], [s.time for s in self.dataset])
        )
        # the frozen adapter never changes, so ground targets are computed once
        self.ground_targets = torch.from_numpy(
            self.ground_adapter.embed_images([s.ground_image for s in self.dataset]).astype(np.float32)
        )
        self.queue = EmbeddingQueue(config.queue_capacity, encoder_config.embed_dim)

        decay_params = [p for p in self.model.overhead.parameters()]
        if self.model.dynamic is not None:
            decay_params += list(self.model.dynamic.parameters())
        self.optimizer = torch.optim.AdamW(
            [
                {"params": decay_params, "weight_decay": config.weight_decay},
                {"params": [self.model.temperature.log_tau], "weight_decay": 0.0},
            ],
            lr=config.lr,
            betas=(config.beta1, config.beta2),
        )
        steps_per_epoch = max(1, math.ceil(len(self.dataset) / config.batch_size))
        self.scheduler = CosineAnnealingWarmRestarts(
            self.optimizer,
            T_0=max(1, config.restart_period_epochs * steps_per_epoch),
            T_mult=max(1, config.restart_mult),
        )
        self.data_gen = torch.Generator().manual_seed(config.seed)
        self.aug_gen = torch.Generator().manual_seed(config.seed + 1)
        self.gate_gen = torch.Generator().manual_seed(config.seed + 2)
        self.state = TrainState()

    # -- single step ------------------------------------------------------

    def _draw_batch(self) -> torch.Tensor:
        n = len(self.dataset)
        k = min(self.config.batch_size, n)
        if k == n:
            return torch.arange(n)  # full-batch: nothing to sample
        return torch.randint(0, n, (k,), generator=self.data_gen)

    def _batch_images(self, idx: torch.Tensor) -> torch.Tensor:
        arrays = [
            augment_overhead(
                self.tiles[i],
                out_size=self.encoder_config.image_size,
                generator=self.aug_gen,
                enabled=self.config.augment,
                scale_min=self.config.crop_scale_min,
            )
            for i in idx.tolist()
        ]
        return preprocess_tiles(arrays, self.encoder_config)

    def _gate(self) -> bool:
        """One metadata-use decision per batch."""
        if not self.config.meta_training or self.model.dynamic is None:
            return False
        if not self.config.meta_dropout:
            return True
        draw = torch.rand(1, generator=self.gate_gen)
        return bool(draw.item() >= self.config.dynamic_dropout_prob)

    def step(self) -> dict:
        """One optimization step; returns the metrics record for the step."""
        idx = self._draw_batch()
        images = self._batch_images(idx)
        use_meta = self._gate()
        lr_now = self.optimizer.param_groups[0]["lr"]
        try:
            o_raw = self.model.overhead_raw(images)
            meta = self.meta_features[idx] if use_meta else None
            predicted = self.model.combined(o_raw, meta, use_meta)
            targets = self.ground_targets[idx]
            batch_loss = info_nce(predicted, targets, self.queue, self.model.temperature)
        except DomainError as exc:
            raise TrainingAborted(
                f"non-finite loss at step {self.state.step}: {exc}",
                snapshot=self._snapshot(idx, use_meta),
            ) from exc
        self.optimizer.zero_grad(set_to_none=True)
        batch_loss.tensor.backward()
        self.optimizer.step()
        self.scheduler.step()
        self.queue.push(targets)
        self.state.step += 1
        record = {
            "step": self.state.step,
            "loss": batch_loss.value,
            "lr": lr_now,
            "tau": float(self.model.tau.detach()),
            "meta_used": use_meta,
        }
        self.state.metrics.append(record)
        self.state.best_loss = min(self.state.best_loss, batch_loss.value)
        return record

    def _snapshot(self, idx: torch.Tensor, use_meta: bool) -> dict:
        return {
            "step": self.state.step,
            "batch_indices": idx.tolist(),
            "meta_used": use_meta,
            "tau": float(self.model.tau.detach()),
        }

    # -- full runs ---------------------------------------------------------

    def fit(self, out_dir: str | Path | None = None) -> dict:
        """Run to max_steps (or epochs), logging metrics and checkpoints."""
        out_path = Path(out_dir) if out_dir is not None else None
        metrics_fh = None
        if out_path is not None:
            out_path.mkdir(parents=True, exist_ok=True)
            metrics_fh = (out_path / "metrics.jsonl").open("a", encoding="utf-8")
        total = self.config.steps_for(len(self.dataset))
        try:
            while self.state.step < total:
                record = self.step()
                if metrics_fh is not None and record["step"] % max(1, self.config.log_every) == 0:
                    metrics_fh.write(json.dumps(record) + "\n")
                if (
                    out_path is not None
                    and self.config.checkpoint_every
                    and record["step"] % self.config.checkpoint_every == 0
                ):
                    save_checkpoint(self.model, out_path / f"model-{record['step']:06d}.pt")
                    self.save_state(out_path / "train_state.pt")
        finally:
            if metrics_fh is not None:
                metrics_fh.close()
        result = {"steps": self.state.step, "final_loss": self.state.metrics[-1]["loss"] if self.state.metrics else None}
        if out_path is not None:
            result["checkpoint"] = str(save_checkpoint(self.model, out_path / "model.pt"))
            result["state"] = str(self.save_state(out_path / "train_state.pt"))
        return result

    def train_set_recall(self, k: int = 1) -> float:
        """R@k of overhead embeddings against ground targets on the train set."""
        overhead = self.model.embed_tiles(
            [s.overhead_tile for s in self.dataset],
            locations=[s.location for s in self.dataset],
            times=[s.time for s in self.dataset],
            use_meta=self.config.meta_inference and self.model.dynamic is not None,
        )
        sim = cosine_similarity_matrix(overhead, self.ground_targets.numpy())
        return recall_at_k(sim, k)

    # -- state io -----------------------------------------------------------

    def save_state(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "format_version": TRAIN_STATE_VERSION,
                "config": self.config.to_flat_dict(),
                "encoder_config": self.encoder_config.to_dict(),
                "overhead_state": self.model.overhead.state_dict(),
                "dynamic_state": self.model.dynamic.state_dict() if self.model.dynamic is not None else None,
                "log_tau": self.model.temperature.log_tau.detach().clone(),
                "optimizer": self.optimizer.state_dict(),
                "scheduler": self.scheduler.state_dict(),
                "queue": self.queue.state(),
                "data_gen": self.data_gen.get_state(),
                "aug_gen": self.aug_gen.get_state(),
                "gate_gen": self.gate_gen.get_state(),
                "step": self.state.step,
                "metrics": self.state.metrics,
                "best_loss": self.state.best_loss,
            },
            path,
        )
        return path

    @classmethod
    def load_state(cls, path: str | Path, dataset: Sequence[GeoSample]) -> "TrainLoop":
        payload = torch.load(Path(path), map_location="cpu", weights_only=False)
        if payload.get("format_version") != TRAIN_STATE_VERSION:
            raise ConfigError(f"unsupported train state version {payload.get('format_version')!r}")
        config = TrainConfig.from_flat_dict(payload["config"])
        encoder_config = EncoderConfig.from_dict(payload["encoder_config"])
        loop = cls(config, encoder_config, dataset)
        loop.model.overhead.load_state_dict(payload["overhead_state"])
        if loop.model.dynamic is not None and payload["dynamic_state"] is not None:
            loop.model.dynamic.load_state_dict(payload["dynamic_state"])
        with torch.no_grad():
            loop.model.temperature.log_tau.copy_(payload["log_tau"])
        loop.optimizer.load_state_dict(payload["optimizer"])
        loop.scheduler.load_state_dict(payload["scheduler"])
        loop.queue.load_state(payload["queue"])
        loop.data_gen.set_state(payload["data_gen"])
        loop.aug_gen.set_state(payload["aug_gen"])
        loop.gate_gen.set_state(payload["gate_gen"])
        loop.state = TrainState(step=payload["step"], metrics=list(payload["metrics"]), best_loss=payload["best_loss"])
        return loop


def fit(
    config: TrainConfig,
    dataset: Sequence[GeoSample],
    encoder_config: EncoderConfig,
    out_dir: str | Path | None = None,
    model_seed: int = DEFAULT_MODEL_SEED,
) -> tuple[TrainLoop, dict]:
    """Convenience wrapper: build a TrainLoop and run it to completion."""
    loop = TrainLoop(config, encoder_config, dataset, model_seed=model_seed)
    result = loop.fit(out_dir=out_dir)
    return loop, result
