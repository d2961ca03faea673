"""InfoNCE objective with FIFO queue negatives and a learnable temperature.

The loss treats batch row i's ground embedding as the positive and every
other batch row plus every queue entry as negatives:

    L = (1/k) * sum_i -log[ exp(S_i.G_i / tau)
                            / (sum_j exp(S_i.G_j / tau) + sum_q exp(S_i.q / tau)) ]

computed with log-sum-exp so extreme tau values cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn

from .errors import DomainError

TAU_MIN = 1e-4
_NORM_TOL = 1e-4


class TemperatureParam(nn.Module):
    """Learnable temperature, parameterized as log(tau) and clamped >= 1e-4."""

    def __init__(self, init: float = 0.07):
        super().__init__()
        if init <= 0:
            raise DomainError(f"temperature must be positive, got {init}")
        self.log_tau = nn.Parameter(torch.log(torch.tensor(float(init))))

    @property
    def tau(self) -> torch.Tensor:
        return self.log_tau.exp().clamp_min(TAU_MIN)

    def value(self) -> float:
        return float(self.tau.detach())


class EmbeddingQueue:
    """Fixed-capacity FIFO of unit-norm embeddings (oldest evicted first).

    Entries are stored detached: queue negatives never receive gradient.
    """

    def __init__(self, capacity: int, dim: int):
        if capacity < 1:
            raise DomainError(f"queue capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.dim = int(dim)
        self._buffer = torch.empty((0, dim), dtype=torch.float32)

    def __len__(self) -> int:
        return self._buffer.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    def as_tensor(self) -> torch.Tensor:
        return self._buffer

    def push(self, embeddings: torch.Tensor) -> "EmbeddingQueue":
        """Append rows, evicting the oldest beyond capacity (in-place)."""
        if embeddings.ndim != 2 or embeddings.shape[1] != self.dim:
            raise DomainError(f"expected (k, {self.dim}) rows, got {tuple(embeddings.shape)}")
        k = embeddings.shape[0]
        if k > self.capacity:
            raise DomainError(f"cannot push {k} rows into a capacity-{self.capacity} queue")
        rows = embeddings.detach().to(self._buffer.dtype)
        norms = rows.norm(dim=1)
        if not torch.all((norms - 1.0).abs() < _NORM_TOL):
            raise DomainError("queue entries must be unit-norm")
        self._buffer = torch.cat([self._buffer, rows])[-self.capacity :]
        return self

    def state(self) -> torch.Tensor:
        return self._buffer.clone()

    def load_state(self, buffer: torch.Tensor) -> None:
        if buffer.ndim != 2 or buffer.shape[1] != self.dim or buffer.shape[0] > self.capacity:
            raise DomainError(f"bad queue state shape {tuple(buffer.shape)}")
        self._buffer = buffer.clone().float()


def queue_push(queue: EmbeddingQueue, embeddings: torch.Tensor) -> EmbeddingQueue:
    return queue.push(embeddings)


@dataclass(frozen=True)
class BatchLoss:
    """Scalar loss value plus the negatives bookkeeping; `tensor` carries the
    autograd graph for the training step."""

    value: float
    batch_size: int
    negatives_used: int
    tensor: torch.Tensor | None = None


def info_nce_tensor(
    predicted: torch.Tensor,
    targets: torch.Tensor,
    queue: torch.Tensor | None,
    tau: torch.Tensor,
) -> torch.Tensor:
    """Differentiable InfoNCE over (k, d) predicted/target rows; queue rows
    join the denominator as extra negatives."""
    if predicted.ndim != 2 or predicted.shape != targets.shape:
        raise DomainError(f"predicted {tuple(predicted.shape)} and targets {tuple(targets.shape)} must match (k, d)")
    k = predicted.shape[0]
    if k == 0:
        raise DomainError("batch must contain at least one pair")
    if not torch.isfinite(predicted).all() or not torch.isfinite(targets).all():
        raise DomainError("non-finite embeddings passed to info_nce")
    gallery = targets
    if queue is not None and queue.shape[0] > 0:
        if queue.shape[1] != predicted.shape[1]:
            raise DomainError("queue dimension does not match embeddings")
        if not torch.isfinite(queue).all():
            raise DomainError("non-finite queue entries")
        gallery = torch.cat([targets, queue.detach()])
    logits = predicted @ gallery.T / tau
    positives = logits[:, :k].diagonal()
    return (torch.logsumexp(logits, dim=1) - positives).mean()


def info_nce(
    predicted: torch.Tensor,
    targets: torch.Tensor,
    queue: "EmbeddingQueue | torch.Tensor | None",
    tau: "TemperatureParam | torch.Tensor | float",
) -> BatchLoss:
    """InfoNCE loss over a batch; see module docstring for the formula."""
    queue_mat = queue.as_tensor() if isinstance(queue, EmbeddingQueue) else queue
    if isinstance(tau, TemperatureParam):
        tau_t = tau.tau
    elif isinstance(tau, torch.Tensor):
        tau_t = tau
    else:
        if tau <= 0:
            raise DomainError(f"tau must be positive, got {tau}")
        tau_t = torch.tensor(float(tau), dtype=predicted.dtype)
    loss = info_nce_tensor(predicted, targets, queue_mat, tau_t)
    value = float(loss.detach())
    if not math.isfinite(value):
        raise DomainError("info_nce produced a non-finite loss")
    n_queue = 0 if queue_mat is None else queue_mat.shape[0]
    return BatchLoss(
        value=value,
        batch_size=predicted.shape[0],
        negatives_used=predicted.shape[0] - 1 + n_queue,
        tensor=loss,
    )
