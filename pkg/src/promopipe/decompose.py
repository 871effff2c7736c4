"""Prompt decomposition: natural-language prompt -> MarketingBrief."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources as importlib_resources

from .backends.base import LLMBackend, TextCompletionRequest


@dataclass(frozen=True)
class MarketingBrief:
    primary_product: str
    background_elements: str
    theme: str
    source_prompt: str

    def __post_init__(self):
        if not self.primary_product:
            raise ValueError("primary_product must be non-empty")

    def to_dict(self) -> dict:
        return {
            "primary_product": self.primary_product,
            "background_elements": self.background_elements,
            "theme": self.theme,
            "source_prompt": self.source_prompt,
        }

    @classmethod
    def from_dict(cls, value: dict) -> "MarketingBrief":
        return cls(
            primary_product=value["primary_product"],
            background_elements=value.get("background_elements", ""),
            theme=value.get("theme", ""),
            source_prompt=value.get("source_prompt", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MarketingBrief":
        return cls.from_dict(json.loads(text))


def _few_shot_template() -> str:
    ref = importlib_resources.files("promopipe.resources").joinpath("decompose_fewshot.txt")
    return ref.read_text(encoding="utf-8")


def decompose(prompt: str, llm: LLMBackend) -> MarketingBrief:
    """Split a marketing prompt into product / background / theme components.

    The heavy lifting is delegated to the LLM backend with a few-shot
    template; this function owns input validation and assembling the brief.
    """
    stripped = prompt.strip()
    if not stripped:
        raise ValueError("prompt is empty")
    request = TextCompletionRequest(
        system_instructions=_few_shot_template(),
        user_content=f"PROMPT: {stripped}",
        expected_schema_id="marketing_brief",
    )
    value = llm.complete(request)
    return MarketingBrief(
        primary_product=value["primary_product"],
        background_elements=value.get("background_elements", ""),
        theme=value.get("theme", ""),
        source_prompt=prompt,
    )
