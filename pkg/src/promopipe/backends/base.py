"""Uniform contracts for every external model the pipeline talks to.

Four backend roles exist: text completion (LLM with optional image inputs),
embedding, scene generation, and aesthetic scoring. All of them are opaque
services behind these interfaces; deterministic mocks live in
:mod:`promopipe.backends.mock` and HTTP clients in
:mod:`promopipe.backends.http`.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from ..raster import Mask, Raster
from .schemas import is_registered


class BackendError(Exception):
    """Failure surfaced by a backend call.

    kind is one of: timeout, malformed_response, service_unavailable,
    schema_violation. schema_violation is never retryable.
    """

    KINDS = ("timeout", "malformed_response", "service_unavailable", "schema_violation")

    def __init__(self, kind: str, detail: str = "", retryable: bool = False):
        if kind not in self.KINDS:
            raise ValueError(f"unknown BackendError kind: {kind!r}")
        if kind == "schema_violation" and retryable:
            raise ValueError("schema_violation errors are never retryable")
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind
        self.detail = detail
        self.retryable = retryable


@dataclass
class TextCompletionRequest:
    """One structured-output completion call."""

    system_instructions: str
    user_content: str
    expected_schema_id: str
    attached_images: list[Raster] = field(default_factory=list)

    def validate(self) -> None:
        if not self.user_content:
            raise ValueError("user_content must be non-empty")
        if not is_registered(self.expected_schema_id):
            raise ValueError(f"schema not registered: {self.expected_schema_id!r}")


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-length real vector; comparable only within one model_tag."""

    values: tuple
    dimension: int
    model_tag: str

    def __post_init__(self):
        if len(self.values) != self.dimension:
            raise ValueError(
                f"embedding length {len(self.values)} != declared dimension {self.dimension}"
            )
        arr = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding contains non-finite values")

    @classmethod
    def from_array(cls, arr, model_tag: str) -> "EmbeddingVector":
        a = np.asarray(arr, dtype=np.float64).ravel()
        return cls(values=tuple(float(v) for v in a), dimension=a.size, model_tag=model_tag)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity; raises on model_tag or dimension mismatch."""
    if a.model_tag != b.model_tag:
        raise ValueError(f"embedding model mismatch: {a.model_tag!r} vs {b.model_tag!r}")
    if a.dimension != b.dimension:
        raise ValueError(f"embedding dimension mismatch: {a.dimension} vs {b.dimension}")
    va, vb = a.as_array(), b.as_array()
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


@dataclass
class GenerationRequest:
    """Product-on-canvas composition handed to the scene generator."""

    composed_canvas: Raster
    product_mask: Mask
    caption: str
    seed: int

    def validate(self) -> None:
        if self.composed_canvas.shape[:2] != self.product_mask.shape[:2]:
            raise ValueError(
                f"mask dimensions {self.product_mask.shape[:2]} do not match "
                f"canvas {self.composed_canvas.shape[:2]}"
            )
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


class LLMBackend(ABC):
    """Text completion with structured (schema-validated) output."""

    @abstractmethod
    def complete(self, request: TextCompletionRequest):
        """Return a value conforming to request.expected_schema_id."""


class EmbeddingBackend(ABC):
    model_tag: str = "unknown"
    dimension: int = 0

    @abstractmethod
    def embed_text(self, text: str) -> EmbeddingVector: ...

    @abstractmethod
    def embed_image(self, raster: Raster) -> EmbeddingVector: ...


class GenerationBackend(ABC):
    max_in_flight: int = 4

    @abstractmethod
    def generate_scene(self, request: GenerationRequest) -> Raster: ...


class AestheticBackend(ABC):
    @abstractmethod
    def score(self, raster: Raster) -> float:
        """Aesthetic score on the documented [0, 10] scale."""
