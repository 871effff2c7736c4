"""Scene caption generation with a deterministic template fallback."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .backends.base import BackendError, LLMBackend, TextCompletionRequest
from .decompose import MarketingBrief
from .store import Asset

logger = logging.getLogger(__name__)

DEFAULT_MAX_WORDS = 77


@dataclass
class SceneCaption:
    text: str
    derived_from_background: bool
    brief_ref: str
    fallback_used: bool = False

    def __post_init__(self):
        if not self.text:
            raise ValueError("caption text must be non-empty")


def fallback_caption(brief: MarketingBrief) -> str:
    """The documented template used when the caption backend is unavailable."""
    return (
        f"{brief.primary_product} placed in {brief.background_elements}, "
        f"{brief.theme} atmosphere, professional marketing photo"
    )


def _truncate(text: str, max_words: int) -> str:
    words = text.split()
    if len(words) <= max_words:
        return text
    return " ".join(words[:max_words])


def generate_caption(brief: MarketingBrief, background: Optional[Asset],
                     llm: LLMBackend, max_words: int = DEFAULT_MAX_WORDS) -> SceneCaption:
    """Build the rich generation caption from the brief and, when available,
    the retrieved background image (which is attached to the backend call)."""
    lines = [
        f"PRODUCT: {brief.primary_product}",
        f"BACKGROUND: {brief.background_elements}",
        f"THEME: {brief.theme}",
    ]
    attached = []
    if background is not None:
        lines.append(f"BACKGROUND_LABEL: {background.label}")
        attached.append(background.raster)
    request = TextCompletionRequest(
        system_instructions=(
            "Write one rich photographic caption for a marketing scene around "
            "the product. Mention the product. Reply with JSON {\"caption\": ...}."
        ),
        user_content="\n".join(lines),
        expected_schema_id="scene_caption",
        attached_images=attached,
    )
    try:
        text = llm.complete(request)["caption"]
        fallback = False
    except BackendError as exc:
        logger.warning("caption backend failed (%s); using template fallback", exc)
        text = fallback_caption(brief)
        fallback = True
    text = _truncate(text, max_words)
    if brief.primary_product.lower() not in text.lower():
        # the caption must always name the product; prepend rather than reject
        text = _truncate(f"{brief.primary_product}: {text}", max_words)
    return SceneCaption(
        text=text,
        derived_from_background=background is not None and not fallback,
        brief_ref=brief.primary_product,
        fallback_used=fallback,
    )
