"""HTTP backend clients.

All four roles (LLM, embedding, scene generation, aesthetic scoring) speak
JSON over POST to a configured endpoint. The wire formats are small and
documented on each client. Requests go through an injectable ``transport``
callable so tests can script responses without a live server; the default
transport uses `requests`.

Retry policy (shared): a unified attempt budget (default 3). Retryable
transport errors, 5xx statuses, and non-JSON bodies consume attempts; for
the LLM client a response that parses but fails schema validation also
consumes an attempt (a repair re-ask), and exhausting the budget that way
surfaces as a non-retryable ``schema_violation``.
"""

from __future__ import annotations

import base64
import json
import os
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import requests

from ..raster import Raster, decode_png, encode_png, ensure_rgba
from . import schemas
from .base import (
    AestheticBackend,
    BackendError,
    EmbeddingBackend,
    EmbeddingVector,
    GenerationBackend,
    GenerationRequest,
    LLMBackend,
    TextCompletionRequest,
)

DEFAULT_RETRY_BUDGET = 3
DEFAULT_TIMEOUT_MS = 30_000


@dataclass
class HttpResponse:
    status: int
    text: str


Transport = Callable[[str, dict, dict, float], HttpResponse]


def requests_transport(url: str, payload: dict, headers: dict, timeout_s: float) -> HttpResponse:
    try:
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout_s)
    except requests.Timeout as exc:
        raise BackendError("timeout", str(exc), retryable=True) from exc
    except requests.RequestException as exc:
        raise BackendError("service_unavailable", str(exc), retryable=True) from exc
    return HttpResponse(resp.status_code, resp.text)


class _JsonClient:
    def __init__(self, url: str, api_key_env: Optional[str] = None,
                 timeout_ms: int = DEFAULT_TIMEOUT_MS,
                 retry_budget: int = DEFAULT_RETRY_BUDGET,
                 max_in_flight: int = 4,
                 transport: Optional[Transport] = None):
        if not url:
            raise ValueError("http backend requires a url")
        if retry_budget < 1:
            raise ValueError("retry_budget must be at least 1")
        self.url = url
        self.timeout_s = timeout_ms / 1000.0
        self.retry_budget = retry_budget
        self.max_in_flight = max_in_flight
        self._transport = transport or requests_transport
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._headers = {"Content-Type": "application/json"}
        if api_key_env:
            key = os.environ.get(api_key_env)
            if not key:
                raise ValueError(f"environment variable {api_key_env!r} is not set")
            self._headers["Authorization"] = f"Bearer {key}"

    def _attempt(self, payload: dict) -> dict:
        """One transport round-trip returning a parsed JSON object."""
        with self._slots:
            resp = self._transport(self.url, payload, self._headers, self.timeout_s)
        if resp.status >= 500:
            raise BackendError("service_unavailable", f"HTTP {resp.status}", retryable=True)
        if resp.status >= 400:
            raise BackendError("service_unavailable", f"HTTP {resp.status}: {resp.text[:200]}",
                               retryable=False)
        try:
            value = json.loads(resp.text)
        except ValueError as exc:
            raise BackendError("malformed_response", f"response is not JSON: {exc}",
                               retryable=True) from exc
        if not isinstance(value, dict):
            raise BackendError("malformed_response", "response JSON is not an object",
                               retryable=True)
        return value

    def _post(self, payload: dict) -> dict:
        last: Optional[BackendError] = None
        for _ in range(self.retry_budget):
            try:
                return self._attempt(payload)
            except BackendError as err:
                if not err.retryable:
                    raise
                last = err
        assert last is not None
        raise last


def _png_b64(raster: Raster) -> str:
    return base64.b64encode(encode_png(raster)).decode("ascii")


class HttpLLMBackend(LLMBackend, _JsonClient):
    """POST {system, user, images[], schema_id} -> the structured JSON value."""

    def complete(self, request: TextCompletionRequest):
        request.validate()
        payload = {
            "system": request.system_instructions,
            "user": request.user_content,
            "images": [_png_b64(img) for img in request.attached_images],
            "schema_id": request.expected_schema_id,
            "schema": schemas.get_schema(request.expected_schema_id),
        }
        last_violation = None
        last_transport: Optional[BackendError] = None
        for _ in range(self.retry_budget):
            try:
                value = self._attempt(payload)
            except BackendError as err:
                if not err.retryable:
                    raise
                last_transport = err
                continue
            try:
                schemas.validate(request.expected_schema_id, value)
            except schemas.SchemaViolation as exc:
                last_violation = exc
                continue  # repair re-ask consumes an attempt
            return value
        if last_violation is not None:
            raise BackendError("schema_violation", str(last_violation)) from last_violation
        assert last_transport is not None
        raise last_transport


class HttpEmbeddingBackend(EmbeddingBackend, _JsonClient):
    """POST {kind, text|image_png} -> {values: [...]}.

    model_tag and dimension are declared in configuration; a response of the
    wrong length is malformed.
    """

    def __init__(self, url: str, model_tag: str, dimension: int, **kwargs):
        _JsonClient.__init__(self, url, **kwargs)
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.model_tag = model_tag
        self.dimension = dimension

    def _embed(self, payload: dict) -> EmbeddingVector:
        value = self._post(payload)
        values = value.get("values")
        if not isinstance(values, list) or len(values) != self.dimension:
            raise BackendError(
                "malformed_response",
                f"expected {self.dimension} embedding values, got {values!r:.80}",
                retryable=False,
            )
        return EmbeddingVector(tuple(float(v) for v in values), self.dimension, self.model_tag)

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        return self._embed({"kind": "text", "text": text})

    def embed_image(self, raster: Raster) -> EmbeddingVector:
        return self._embed({"kind": "image", "image_png": _png_b64(ensure_rgba(raster))})


class HttpGenerationBackend(GenerationBackend, _JsonClient):
    """POST {canvas_png, mask_png, caption, seed} -> {image_png}."""

    def generate_scene(self, request: GenerationRequest) -> Raster:
        request.validate()
        payload = {
            "canvas_png": _png_b64(request.composed_canvas),
            "mask_png": base64.b64encode(encode_png(request.product_mask)).decode("ascii"),
            "caption": request.caption,
            "seed": request.seed,
        }
        value = self._post(payload)
        encoded = value.get("image_png")
        if not isinstance(encoded, str):
            raise BackendError("malformed_response", "missing image_png", retryable=False)
        try:
            out = ensure_rgba(decode_png(base64.b64decode(encoded)))
        except Exception as exc:
            raise BackendError("malformed_response", f"undecodable image: {exc}",
                               retryable=False) from exc
        canvas = ensure_rgba(request.composed_canvas)
        if out.shape[:2] != canvas.shape[:2]:
            raise BackendError(
                "malformed_response",
                f"generator returned {out.shape[:2]}, expected {canvas.shape[:2]}",
                retryable=False,
            )
        return out


class HttpAestheticBackend(AestheticBackend, _JsonClient):
    """POST {image_png} -> {score} on the 0-10 scale."""

    def score(self, raster: Raster) -> float:
        value = self._post({"image_png": _png_b64(ensure_rgba(raster))})
        score = value.get("score")
        if not isinstance(score, (int, float)):
            raise BackendError("malformed_response", "missing numeric score", retryable=False)
        return float(score)
