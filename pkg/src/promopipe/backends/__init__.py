from .base import (
    AestheticBackend,
    BackendError,
    EmbeddingBackend,
    EmbeddingVector,
    GenerationBackend,
    GenerationRequest,
    LLMBackend,
    TextCompletionRequest,
    cosine,
)
from .mock import (
    MockAestheticBackend,
    MockEmbeddingBackend,
    MockGenerationBackend,
    MockLLMBackend,
)

__all__ = [
    "AestheticBackend",
    "BackendError",
    "EmbeddingBackend",
    "EmbeddingVector",
    "GenerationBackend",
    "GenerationRequest",
    "LLMBackend",
    "TextCompletionRequest",
    "cosine",
    "MockAestheticBackend",
    "MockEmbeddingBackend",
    "MockGenerationBackend",
    "MockLLMBackend",
]
