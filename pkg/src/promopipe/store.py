"""Asset catalog: persistence, product retrieval, validated background retrieval.

Storage is a single append-only binary file:

    magic  b"CPST1"
    header u16 model_tag length + utf-8 model_tag, u32 embedding dimension
    record u16 asset_id + utf-8, u8 kind (0 product / 1 background),
           u16 label + utf-8, u16 category + utf-8,
           u32 image byte count + image bytes (as ingested),
           dimension * float32 little-endian embedding values

The in-memory index keeps embeddings at float32 precision — the same values
that live on disk — so retrieval results are bitwise identical before and
after a close/reopen cycle.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from filelock import FileLock

from .backends.base import (
    BackendError,
    EmbeddingBackend,
    EmbeddingVector,
    LLMBackend,
    TextCompletionRequest,
    cosine,
)
from .decompose import MarketingBrief
from .raster import Raster, RasterError, decode_png, ensure_rgba

logger = logging.getLogger(__name__)

MAGIC = b"CPST1"
DEFAULT_PRODUCT_THRESHOLD = 0.39

KIND_PRODUCT = "product"
KIND_BACKGROUND = "background"
_KIND_CODES = {KIND_PRODUCT: 0, KIND_BACKGROUND: 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


class StoreError(Exception):
    pass


@dataclass
class Asset:
    asset_id: str
    kind: str
    raster: Raster
    embedding: EmbeddingVector
    label: str
    category: str


@dataclass
class RetrievalResult:
    asset: Asset
    similarity: float
    validator_verdict: Optional[int] = None


def _f32_vector(values, dimension: int, model_tag: str) -> EmbeddingVector:
    arr = np.asarray(values, dtype=np.float32)
    return EmbeddingVector(tuple(float(v) for v in arr), dimension, model_tag)


def _write_str(fh, text: str) -> None:
    data = text.encode("utf-8")
    if len(data) > 0xFFFF:
        raise StoreError("string field exceeds 64KiB")
    fh.write(struct.pack("<H", len(data)))
    fh.write(data)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise EOFError("truncated record")
    return data


def _read_str(fh) -> str:
    (n,) = struct.unpack("<H", _read_exact(fh, 2))
    return _read_exact(fh, n).decode("utf-8")


class AssetStore:
    """Product/background catalog bound to one embedding backend."""

    def __init__(self, path, embedder: EmbeddingBackend):
        self.path = Path(path)
        self.embedder = embedder
        self._lock = FileLock(str(self.path) + ".lock")
        self._assets: dict[str, Asset] = {}
        if self.path.exists() and self.path.stat().st_size > 0:
            self._load()
        else:
            with self._lock:
                with open(self.path, "wb") as fh:
                    fh.write(MAGIC)
                    _write_str(fh, embedder.model_tag)
                    fh.write(struct.pack("<I", embedder.dimension))

    # ------------------------------------------------------------------ io

    def _load(self) -> None:
        with open(self.path, "rb") as fh:
            if fh.read(len(MAGIC)) != MAGIC:
                raise StoreError(f"{self.path} is not an asset store (bad magic)")
            model_tag = _read_str(fh)
            (dimension,) = struct.unpack("<I", _read_exact(fh, 4))
            if model_tag != self.embedder.model_tag or dimension != self.embedder.dimension:
                raise StoreError(
                    f"store built with {model_tag}/{dimension}, "
                    f"backend is {self.embedder.model_tag}/{self.embedder.dimension}"
                )
            while True:
                try:
                    asset = self._read_record(fh, dimension, model_tag)
                except EOFError:
                    break
                if asset is None:
                    break
                self._assets[asset.asset_id] = asset

    def _read_record(self, fh, dimension: int, model_tag: str) -> Optional[Asset]:
        probe = fh.read(2)
        if len(probe) == 0:
            return None
        if len(probe) < 2:
            logger.warning("ignoring truncated record at end of %s", self.path)
            return None
        try:
            (n,) = struct.unpack("<H", probe)
            asset_id = _read_exact(fh, n).decode("utf-8")
            (kind_code,) = struct.unpack("<B", _read_exact(fh, 1))
            label = _read_str(fh)
            category = _read_str(fh)
            (img_len,) = struct.unpack("<I", _read_exact(fh, 4))
            image_bytes = _read_exact(fh, img_len)
            raw = _read_exact(fh, 4 * dimension)
        except EOFError:
            logger.warning("ignoring truncated record at end of %s", self.path)
            return None
        values = np.frombuffer(raw, dtype="<f4")
        return Asset(
            asset_id=asset_id,
            kind=_KIND_NAMES.get(kind_code, KIND_PRODUCT),
            raster=ensure_rgba(decode_png(image_bytes)),
            embedding=_f32_vector(values, dimension, model_tag),
            label=label,
            category=category,
        )

    def _append_record(self, asset: Asset, image_bytes: bytes) -> None:
        with self._lock:
            with open(self.path, "ab") as fh:
                _write_str(fh, asset.asset_id)
                fh.write(struct.pack("<B", _KIND_CODES[asset.kind]))
                _write_str(fh, asset.label)
                _write_str(fh, asset.category)
                fh.write(struct.pack("<I", len(image_bytes)))
                fh.write(image_bytes)
                arr = np.asarray(asset.embedding.values, dtype="<f4")
                fh.write(arr.tobytes())
                fh.flush()
                os.fsync(fh.fileno())

    # -------------------------------------------------------------- ingest

    def ingest_file(self, file_path, kind: str,
                    label: Optional[str] = None, category: Optional[str] = None) -> bool:
        """Ingest one image file. Returns True if a new asset was stored."""
        if kind not in _KIND_CODES:
            raise ValueError(f"kind must be one of {sorted(_KIND_CODES)}")
        file_path = Path(file_path)
        image_bytes = file_path.read_bytes()
        asset_id = hashlib.sha256(image_bytes).hexdigest()[:16]
        if asset_id in self._assets:
            return False
        raster = ensure_rgba(decode_png(image_bytes))
        if label is None or category is None:
            sidecar = file_path.with_suffix(".json")
            meta = {}
            if sidecar.exists():
                meta = json.loads(sidecar.read_text(encoding="utf-8"))
            if label is None:
                label = meta.get("label", file_path.stem.replace("_", " ").replace("-", " "))
            if category is None:
                category = meta.get("category", "")
        embedding = self.embedder.embed_image(raster)
        stored = _f32_vector(embedding.values, embedding.dimension, embedding.model_tag)
        asset = Asset(asset_id, kind, raster, stored, label, category)
        self._append_record(asset, image_bytes)
        self._assets[asset_id] = asset
        return True

    def ingest(self, directory, kind: str) -> int:
        """Ingest every decodable image in a directory; returns new-asset count."""
        directory = Path(directory)
        count = 0
        for file_path in sorted(directory.iterdir()):
            if file_path.suffix.lower() not in _IMAGE_SUFFIXES:
                continue
            try:
                if self.ingest_file(file_path, kind):
                    count += 1
            except (RasterError, OSError, ValueError) as exc:
                logger.warning("skipping %s: %s", file_path.name, exc)
        return count

    # ------------------------------------------------------------ retrieval

    def __len__(self) -> int:
        return len(self._assets)

    def assets(self, kind: Optional[str] = None) -> list[Asset]:
        items = sorted(self._assets.values(), key=lambda a: a.asset_id)
        if kind is None:
            return items
        return [a for a in items if a.kind == kind]

    def get(self, asset_id: str) -> Asset:
        return self._assets[asset_id]

    def _ranked(self, query: EmbeddingVector, kind: str) -> list[RetrievalResult]:
        results = [
            RetrievalResult(asset, cosine(query, asset.embedding))
            for asset in self._assets.values()
            if asset.kind == kind
        ]
        results.sort(key=lambda r: (-r.similarity, r.asset.asset_id))
        return results

    def retrieve_products(self, brief: MarketingBrief, limit: int,
                          threshold: float = DEFAULT_PRODUCT_THRESHOLD) -> list[RetrievalResult]:
        """Products with cosine(query, asset) >= threshold, best first."""
        if limit < 1:
            raise ValueError("limit must be positive")
        if not self._assets:
            raise StoreError("retrieve_products called on an empty store")
        query = self.embedder.embed_text(brief.primary_product)
        ranked = self._ranked(query, KIND_PRODUCT)
        return [r for r in ranked if r.similarity >= threshold][:limit]

    @staticmethod
    def background_query_text(brief: MarketingBrief) -> str:
        parts = [p for p in (brief.background_elements, brief.theme) if p]
        return ", ".join(parts)

    def retrieve_backgrounds(self, brief: MarketingBrief, k: int, llm: LLMBackend,
                             record: Optional[list] = None) -> list[RetrievalResult]:
        """Top-k backgrounds by similarity, each screened by the LLM validator.

        Only verdict=1 candidates survive, in similarity order. A backend
        failure on a candidate counts as a rejection, not an abort. When
        `record` is given, every considered candidate is appended to it with
        its verdict, for audit manifests.
        """
        if k < 1:
            raise ValueError("k must be positive")
        query_text = self.background_query_text(brief)
        if not query_text:
            return []  # brief requests no surroundings: empty-canvas mode
        query = self.embedder.embed_text(query_text)
        shortlist = self._ranked(query, KIND_BACKGROUND)[:k]
        survivors = []
        for result in shortlist:
            request = TextCompletionRequest(
                system_instructions=(
                    "Decide whether the candidate background image suits the "
                    "requested scene. Reply with JSON {\"verdict\": 0 or 1}."
                ),
                user_content=(
                    f"PROMPT: {brief.source_prompt}\n"
                    f"BACKGROUND: {query_text}\n"
                    f"CANDIDATE_LABEL: {result.asset.label}"
                ),
                expected_schema_id="background_verdict",
                attached_images=[result.asset.raster],
            )
            try:
                verdict = int(llm.complete(request)["verdict"])
            except BackendError as exc:
                logger.warning("validator failed on %s (%s); treating as reject",
                               result.asset.asset_id, exc)
                verdict = 0
            result.validator_verdict = verdict
            if record is not None:
                record.append(result)
            if verdict == 1:
                survivors.append(result)
        return survivors
