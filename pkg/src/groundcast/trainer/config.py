"""Training hyperparameters and the desk-scale toy profile."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """AdamW + cosine-annealing-warm-restarts schedule with queue negatives.

    The three ablation switches (meta_training, meta_dropout, meta_inference)
    select whether metadata conditions the model during training, whether the
    dynamic encoder is randomly dropped per batch, and whether inference-time
    embeddings use metadata.
    """

    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.98
    weight_decay: float = 0.1
    restart_period_epochs: int = 10
    restart_mult: int = 2
    batch_size: int = 32
    queue_capacity: int = 9600
    dynamic_dropout_prob: float = 0.5
    meta_training: bool = True
    meta_dropout: bool = True
    meta_inference: bool = True
    max_steps: int = 500
    epochs: int | None = None
    seed: int = 0
    augment: bool = True
    crop_scale_min: float = 0.8
    log_every: int = 1
    checkpoint_every: int = 0

    def __post_init__(self):
        if not self.lr >= 0:
            raise ConfigError(f"lr must be non-negative, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dynamic_dropout_prob <= 1.0:
            raise ConfigError(f"dynamic_dropout_prob must be in [0, 1], got {self.dynamic_dropout_prob}")
        if self.queue_capacity < 1:
            raise ConfigError(f"queue_capacity must be >= 1, got {self.queue_capacity}")
        if not 0.0 < self.crop_scale_min <= 1.0:
            raise ConfigError(f"crop_scale_min must be in (0, 1], got {self.crop_scale_min}")
        if self.max_steps < 1 and self.epochs is None:
            raise ConfigError("either max_steps >= 1 or epochs must be set")

    def to_flat_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_flat_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)

    def steps_for(self, n_samples: int) -> int:
        if self.epochs is not None:
            per_epoch = max(1, -(-n_samples // self.batch_size))
            return self.epochs * per_epoch
        return self.max_steps


def toy_train_profile(**overrides) -> TrainConfig:
    """Fast CPU profile: small batches, short queue, higher lr, no augment."""
    base = dict(
        lr=1e-3,
        weight_decay=0.01,
        batch_size=8,
        queue_capacity=64,
        max_steps=500,
        restart_period_epochs=50,
        augment=False,
        log_every=10,
    )
    base.update(overrides)
    return TrainConfig(**base)
