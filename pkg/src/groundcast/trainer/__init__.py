from .config import TrainConfig, toy_train_profile
from .augment import augment_overhead
from .fixtures import FixtureDataset, generate_fixture_pairs
from .loop import TrainLoop, TrainState, fit, simulate_gates

__all__ = [
    "TrainConfig",
    "toy_train_profile",
    "augment_overhead",
    "FixtureDataset",
    "generate_fixture_pairs",
    "TrainLoop",
    "TrainState",
    "fit",
    "simulate_gates",
]
