"""Shallow fully connected network mapping metadata features to an
embedding-space offset."""

from __future__ import annotations

import torch
import torch.nn as nn

from ..errors import ConfigError
from .metadata import METADATA_DIM


class DynamicEncoder(nn.Module):
    """Two GELU hidden layers; output is NOT normalized (it is an additive
    offset combined with the raw overhead vector)."""

    def __init__(self, out_dim: int, hidden: tuple[int, ...] = (512, 512), in_dim: int = METADATA_DIM):
        super().__init__()
        if any(h < 1 for h in hidden) or out_dim < 1:
            raise ConfigError(f"dynamic encoder widths must be positive, got hidden={hidden} out={out_dim}")
        self.in_dim = in_dim
        layers: list[nn.Module] = []
        prev = in_dim
        for h in hidden:
            layers += [nn.Linear(prev, h), nn.GELU()]
            prev = h
        layers.append(nn.Linear(prev, out_dim))
        self.net = nn.Sequential(*layers)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        if features.shape[-1] != self.in_dim:
            raise ConfigError(f"metadata features have dim {features.shape[-1]}, network expects {self.in_dim}")
        return self.net(features)
