"""Embedding phases: skeleton, covering, assignment, connections, relocation, finish."""

from .pipeline import Embedding, embed, embed_skeleton
from .state import EmbeddingFailure, EmbeddingState
from .verify import verify_embedding

__all__ = ["Embedding", "EmbeddingFailure", "EmbeddingState", "embed", "embed_skeleton",
           "verify_embedding"]
