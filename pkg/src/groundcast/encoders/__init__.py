from ..embedding import Embedding, combine, l2_normalize
from .metadata import FEATURE_LAYOUT, METADATA_DIM, MetadataEncoding, encode_metadata, encode_metadata_batch
from .dynamic import DynamicEncoder
from .vit import VisionTransformer
from .adapters import (
    GROUND_ADAPTERS,
    TEXT_ADAPTERS,
    HashedTextAdapter,
    PixelTargetAdapter,
    SeededProjectionAdapter,
    create_ground_adapter,
    create_text_adapter,
    load_image_array,
)
from .model import (
    CHECKPOINT_FORMAT_VERSION,
    DEFAULT_MODEL_SEED,
    CrossViewModel,
    EncoderConfig,
    adapters_for,
    dynamic_encode,
    encode_ground,
    encode_overhead,
    encode_text,
    load_checkpoint,
    preprocess_tiles,
    save_checkpoint,
    toy_encoder_config,
)

__all__ = [
    "Embedding",
    "combine",
    "l2_normalize",
    "FEATURE_LAYOUT",
    "METADATA_DIM",
    "MetadataEncoding",
    "encode_metadata",
    "encode_metadata_batch",
    "DynamicEncoder",
    "VisionTransformer",
    "GROUND_ADAPTERS",
    "TEXT_ADAPTERS",
    "HashedTextAdapter",
    "PixelTargetAdapter",
    "SeededProjectionAdapter",
    "create_ground_adapter",
    "create_text_adapter",
    "load_image_array",
    "CHECKPOINT_FORMAT_VERSION",
    "DEFAULT_MODEL_SEED",
    "CrossViewModel",
    "EncoderConfig",
    "adapters_for",
    "dynamic_encode",
    "encode_ground",
    "encode_overhead",
    "encode_text",
    "load_checkpoint",
    "preprocess_tiles",
    "save_checkpoint",
    "toy_encoder_config",
]
