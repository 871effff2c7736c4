"""Deterministic mock backends.

Every mock is a pure function of its inputs (plus any construction-time
options), so pipeline runs under mocks are byte-reproducible. The mock LLM
parses the marked fields that the consuming modules' prompt templates embed
in user_content (lines like ``PROMPT: ...``), which keeps the mocks
independent of prompt wording.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from importlib import resources as importlib_resources

import numpy as np
from scipy import ndimage

from ..raster import Raster, ensure_rgba, luminance
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

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------------
# rule-based prompt parsing (mock decomposition)

_SHOT_WORDS = {
    "shot", "view", "perspective", "photograph", "photo", "angle",
    "close-up", "closeup", "overhead", "wide-angle",
}
_PREPOSITIONS = {
    "on", "in", "at", "inside", "against", "near", "under", "over", "beside",
    "by", "with", "within", "during", "amid", "amidst", "atop", "upon",
    "between", "among", "along", "across", "beneath", "behind", "overlooking",
}
_PARTICIPLES = {
    "resting", "sitting", "placed", "positioned", "leaning", "standing",
    "lying", "laying", "perched", "nestled", "buried", "surrounded",
    "casting", "creating", "filtering", "streaming", "glowing", "visible",
    "illuminated", "located",
}
_BOUNDARIES = _PREPOSITIONS | _PARTICIPLES
_ARTICLES = {"a", "an", "the"}
_THEME_WORDS = {
    "sunset", "sunrise", "dusk", "dawn", "night", "twilight", "noon",
    "midday", "morning", "evening", "daylight", "sunlight", "moonlight",
    "light", "lighting", "lit", "glow", "golden", "hour", "atmosphere",
    "mood", "ambiance", "winter", "summer", "autumn", "spring", "christmas",
    "holiday", "festive", "style", "photography", "professional", "dramatic",
    "shadows", "vibe",
}
_NOISE_CHUNKS = {"background", "foreground", "distance", "scene", "horizon", "edges"}
_STOPWORDS = _ARTICLES | {"of", "and", "or", "with", "long", "warm", "soft"}


def _strip_leading_article(words: list[str]) -> list[str]:
    while words and words[0] in _ARTICLES:
        words = words[1:]
    return words


def parse_prompt(prompt: str) -> dict:
    """Heuristic decomposition of a marketing prompt.

    Product is the first noun phrase (after an optional camera-shot prefix
    such as "close-up shot of"); the rest is split into prepositional chunks
    that are sorted into background elements and theme by a small lexicon.
    """
    text = prompt.strip().lower().rstrip(".!?")
    if " of " in text:
        head, rest = text.split(" of ", 1)
        if set(re.findall(r"[a-z\-]+", head)) & _SHOT_WORDS and len(head.split()) <= 5:
            text = rest
    words = text.replace(",", " , ").replace(";", " , ").split()

    product_words: list[str] = []
    i = 0
    while i < len(words):
        w = words[i]
        if w in _BOUNDARIES or w == ",":
            break
        if w not in _ARTICLES or product_words:
            product_words.append(w)
        i += 1
    if "and" in product_words:
        # multi-product prompt: keep the first, the pipeline handles one product
        cut = product_words.index("and")
        dropped = " ".join(product_words[cut + 1:])
        product_words = product_words[:cut]
        logger.warning("prompt names more than one product; keeping %r, ignoring %r",
                       " ".join(product_words), dropped)
    if not product_words:
        fallback = [w for w in words if w not in _BOUNDARIES and w not in _ARTICLES and w != ","]
        product_words = fallback[:1]
    product = " ".join(product_words).strip()

    chunks: list[list[str]] = []
    current: list[str] = []
    for w in words[i:]:
        if w in _BOUNDARIES or w == ",":
            if current:
                chunks.append(current)
                current = []
        else:
            current.append(w)
    if current:
        chunks.append(current)

    background: list[str] = []
    theme: list[str] = []
    for chunk in chunks:
        body = _strip_leading_article(chunk)
        if not body or all(w in _NOISE_CHUNKS or w in _ARTICLES for w in body):
            continue
        phrase = " ".join(body)
        if set(body) & _THEME_WORDS:
            theme.append(phrase)
        else:
            background.append(phrase)

    return {
        "primary_product": product,
        "background_elements": ", ".join(background),
        "theme": ", ".join(theme),
    }


# --------------------------------------------------------------------------
# marked-field helpers shared by the mock LLM handlers

def _field(content: str, name: str, default: str = "") -> str:
    m = re.search(rf"^{name}:[ \t]*(.*)$", content, re.MULTILINE)
    return m.group(1).strip() if m else default


def _tokens(text: str) -> set[str]:
    return {t for t in re.findall(r"[a-z0-9'\-]+", text.lower()) if t not in _STOPWORDS}


def load_category_table() -> dict:
    ref = importlib_resources.files("promopipe.resources").joinpath("advisor_categories.json")
    return json.loads(ref.read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# defect stamp: the mock generator marks planted defects in reserved pixels
# of row 0 so the mock rubric scorer can read them back from the raster alone

_SENTINEL = np.array(
    [[7, 31, 127, 255], [127, 31, 7, 255], [31, 127, 7, 255]], dtype=np.uint8
)
_FLAG_SET = np.array([255, 0, 255, 255], dtype=np.uint8)
_FLAG_CLEAR = np.array([0, 0, 0, 255], dtype=np.uint8)

DEFECT_FLAGS = ("caption", "duplicate", "physics", "lighting")


def _write_stamp(raster: np.ndarray, mask: np.ndarray, flags: set[str]) -> None:
    if raster.shape[1] < len(_SENTINEL) + len(DEFECT_FLAGS):
        return
    if np.any(mask[0, : len(_SENTINEL) + len(DEFECT_FLAGS)]):
        return  # never overwrite product pixels
    raster[0, : len(_SENTINEL)] = _SENTINEL
    for i, name in enumerate(DEFECT_FLAGS):
        raster[0, len(_SENTINEL) + i] = _FLAG_SET if name in flags else _FLAG_CLEAR


def read_stamp(raster: np.ndarray):
    """Return the set of planted defect flags, or None if no stamp present."""
    n = len(_SENTINEL) + len(DEFECT_FLAGS)
    if raster.ndim != 3 or raster.shape[1] < n:
        return None
    if not np.array_equal(raster[0, : len(_SENTINEL)], _SENTINEL):
        return None
    flags = set()
    for i, name in enumerate(DEFECT_FLAGS):
        if np.array_equal(raster[0, len(_SENTINEL) + i], _FLAG_SET):
            flags.add(name)
    return flags


# --------------------------------------------------------------------------


class MockLLMBackend(LLMBackend):
    """Schema-dispatched, rule-based stand-in for every LLM role."""

    def __init__(self):
        self._category_table = load_category_table()
        self._handlers = {
            "marketing_brief": self._brief,
            "background_verdict": self._verdict,
            "scale_advice": self._scale,
            "scene_caption": self._caption,
            "rubric_scores": self._rubric,
        }

    def complete(self, request: TextCompletionRequest):
        request.validate()
        handler = self._handlers.get(request.expected_schema_id)
        if handler is None:
            raise BackendError(
                "schema_violation",
                f"mock has no handler for schema {request.expected_schema_id!r}",
            )
        value = handler(request)
        schemas.validate(request.expected_schema_id, value)
        return value

    def _brief(self, request):
        prompt = _field(request.user_content, "PROMPT") or request.user_content
        return parse_prompt(prompt)

    def _verdict(self, request):
        query = _field(request.user_content, "BACKGROUND")
        if not query:
            query = _field(request.user_content, "PROMPT")
        label = _field(request.user_content, "CANDIDATE_LABEL")
        hit = bool(_tokens(query) & _tokens(label))
        return {"verdict": 1 if hit else 0}

    def _scale(self, request):
        category = _field(request.user_content, "CATEGORY", "default").lower()
        width = float(_field(request.user_content, "PRODUCT_WIDTH", "1") or 1)
        height = float(_field(request.user_content, "PRODUCT_HEIGHT", "1") or 1)
        base = float(self._category_table.get(category, self._category_table["default"]))
        aspect = max(width, 1.0) / max(height, 1.0)
        s_w = min(1.0, base * np.sqrt(aspect))
        s_h = min(1.0, base / np.sqrt(aspect))
        return {"s_w": float(s_w), "s_h": float(s_h)}

    def _caption(self, request):
        product = _field(request.user_content, "PRODUCT", "product")
        background = _field(request.user_content, "BACKGROUND")
        theme = _field(request.user_content, "THEME")
        label = _field(request.user_content, "BACKGROUND_LABEL")
        parts = [product]
        if background:
            parts.append(f"placed in {background}")
        if label and request.attached_images:
            parts.append(f"{label} scene")
        if theme:
            parts.append(f"{theme} atmosphere")
        caption = f"{parts[0]} " + ", ".join(parts[1:]) if len(parts) > 1 else parts[0]
        return {"caption": f"{caption}, professional marketing photo"}

    def _rubric(self, request):
        flags = None
        if request.attached_images:
            flags = read_stamp(ensure_rgba(request.attached_images[0]))
        flags = flags or set()
        return {
            "caption_alignment": 0 if "caption" in flags else 1,
            "product_uniqueness": 0 if "duplicate" in flags else 1,
            "physical_realism": 0 if "physics" in flags else 1,
            "lighting_consistency": 0 if "lighting" in flags else 1,
        }


# --------------------------------------------------------------------------
# label stamp: asset images can carry their label in reserved pixels of the
# LAST row. The mock embedder maps a stamped image onto the same vector as
# its label text — the mock twin of a shared text-image embedding space,
# which is what makes text-queried product retrieval meaningful under mocks.

_LABEL_SENTINEL = np.array(
    [[19, 83, 201, 255], [201, 83, 19, 255], [83, 201, 19, 255]], dtype=np.uint8
)


def stamp_label(raster: np.ndarray, label: str) -> np.ndarray:
    """Return a copy of the raster with `label` encoded in its last row."""
    data = label.encode("utf-8")
    out = ensure_rgba(raster).copy()
    h, w = out.shape[:2]
    n_pixels = (len(data) + 2) // 3
    if len(_LABEL_SENTINEL) + 1 + n_pixels > w:
        raise ValueError(f"raster too narrow to stamp label {label!r}")
    if len(data) > 255 * 3:
        raise ValueError("label too long to stamp")
    row = out[h - 1]
    row[: len(_LABEL_SENTINEL)] = _LABEL_SENTINEL
    row[len(_LABEL_SENTINEL)] = (len(data) // 3, len(data) % 3, 0, 255)
    padded = data + b"\x00" * (n_pixels * 3 - len(data))
    for i in range(n_pixels):
        r, g, b = padded[3 * i: 3 * i + 3]
        row[len(_LABEL_SENTINEL) + 1 + i] = (r, g, b, 255)
    return out


def read_label_stamp(raster: np.ndarray):
    """Decode a stamped label from the last row, or None."""
    a = ensure_rgba(raster)
    h, w = a.shape[:2]
    head = len(_LABEL_SENTINEL)
    if w < head + 1:
        return None
    row = a[h - 1]
    if not np.array_equal(row[:head], _LABEL_SENTINEL):
        return None
    n_full, remainder = int(row[head][0]), int(row[head][1])
    length = n_full * 3 + remainder
    n_pixels = (length + 2) // 3
    if head + 1 + n_pixels > w:
        return None
    data = bytes(
        int(v)
        for i in range(n_pixels)
        for v in row[head + 1 + i][:3]
    )[:length]
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return None


class MockEmbeddingBackend(EmbeddingBackend):
    """Hash-to-unit-vector map: equal inputs collide, others land far apart.

    Images carrying a label stamp (see stamp_label) embed to the same vector
    as their label text, giving the mock a usable text-image retrieval
    bridge; all other inputs hash their raw bytes.
    """

    def __init__(self, dimension: int = 64, model_tag: str | None = None):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.model_tag = model_tag or f"mock-clip-{dimension}"

    def _vector(self, payload: bytes) -> EmbeddingVector:
        digest = hashlib.sha256(self.model_tag.encode("utf-8") + b"\x00" + payload).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        v = rng.standard_normal(self.dimension)
        v /= np.linalg.norm(v)
        return EmbeddingVector.from_array(v, self.model_tag)

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        return self._vector(b"text\x00" + text.encode("utf-8"))

    def embed_image(self, raster: Raster) -> EmbeddingVector:
        a = ensure_rgba(raster)
        if a.size == 0:
            raise ValueError("cannot embed empty raster")
        label = read_label_stamp(a)
        if label:
            return self._vector(b"text\x00" + label.encode("utf-8"))
        payload = b"image\x00" + np.asarray(a.shape, dtype=np.int64).tobytes() + a.tobytes()
        return self._vector(payload)


class MockGenerationBackend(GenerationBackend):
    """Seeded procedural outpainting: product pixels are copied verbatim.

    Options:
      defect_flags    plant rubric defects (subset of DEFECT_FLAGS), stamped
                      into the raster for the mock rubric scorer
      perturb_product noise amplitude (fraction of 255) added to product
                      pixels — the degraded variant used to check that the
                      fidelity metrics notice
      always_fail     raise a retryable BackendError on every call
    """

    def __init__(self, defect_flags=(), perturb_product: float = 0.0,
                 always_fail: bool = False, block: int = 8, max_in_flight: int = 4):
        unknown = set(defect_flags) - set(DEFECT_FLAGS)
        if unknown:
            raise ValueError(f"unknown defect flags: {sorted(unknown)}")
        self.defect_flags = set(defect_flags)
        self.perturb_product = float(perturb_product)
        self.always_fail = bool(always_fail)
        self.block = int(block)
        self.max_in_flight = max_in_flight

    def generate_scene(self, request: GenerationRequest) -> Raster:
        request.validate()
        if self.always_fail:
            raise BackendError("service_unavailable", "mock configured to fail", retryable=True)
        canvas = ensure_rgba(request.composed_canvas)
        mask = np.asarray(request.product_mask)
        h, w = canvas.shape[:2]

        rng = np.random.default_rng(np.uint64(request.seed))
        gh = (h + self.block - 1) // self.block
        gw = (w + self.block - 1) // self.block
        cells = rng.integers(0, 256, size=(gh, gw, 3), dtype=np.uint8)
        texture = np.repeat(np.repeat(cells, self.block, axis=0), self.block, axis=1)[:h, :w]

        out = np.empty_like(canvas)
        out[..., :3] = texture
        out[..., 3] = 255
        inside = mask > 0
        out[inside] = canvas[inside]

        if self.perturb_product > 0.0 and inside.any():
            noise_rng = np.random.default_rng(np.uint64(request.seed) ^ np.uint64(0x9E3779B97F4A7C15))
            noise = noise_rng.normal(0.0, self.perturb_product * 255.0, size=(h, w, 3))
            rgb = out[..., :3].astype(np.float64)
            rgb[inside] += noise[inside]
            out[..., :3] = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)

        _write_stamp(out, mask, self.defect_flags)
        return out


class MockAestheticBackend(AestheticBackend):
    """Mean local contrast mapped monotonically onto [0, 10)."""

    def __init__(self, half_point: float = 5.0):
        # half_point: contrast (grey levels) that maps to a score of 5.0
        self.half_point = float(half_point)

    def contrast_statistic(self, raster: Raster) -> float:
        y = luminance(ensure_rgba(raster))
        local_mean = ndimage.uniform_filter(y, size=3, mode="reflect")
        return float(np.mean(np.abs(y - local_mean)))

    def score(self, raster: Raster) -> float:
        c = self.contrast_statistic(raster)
        return 10.0 * c / (c + self.half_point)
