"""groundcast: train an overhead-image encoder into a frozen image-text
embedding space, precompute region embeddings, and answer free-form text
queries as geographic heatmaps."""

__version__ = "0.1.0"

from . import contrastive, evaluation, geodata, mapstore, queryengine, trainer  # noqa: F401
from .embedding import Embedding, combine, l2_normalize  # noqa: F401
