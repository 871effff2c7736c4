"""Quality control: rubric scoring, gating, relaxation, ranking, selection.

The four rubric criteria are strictly binary and their order is load-bearing:
relaxation patterns index them as
(caption_alignment, product_uniqueness, physical_realism, lighting_consistency).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .backends.base import (
    AestheticBackend,
    BackendError,
    EmbeddingBackend,
    EmbeddingVector,
    LLMBackend,
    TextCompletionRequest,
    cosine,
)
from .caption import SceneCaption
from .generate import CandidateImage

logger = logging.getLogger(__name__)

# Relaxation order: drop caption_alignment first, then lighting_consistency;
# product_uniqueness and physical_realism stay strict throughout.
DEFAULT_PATTERNS = ((1, 1, 1, 1), (0, 1, 1, 1), (0, 1, 1, 0))
DEFAULT_CLIP_WEIGHT = 2.5
CRITERIA = ("caption_alignment", "product_uniqueness",
            "physical_realism", "lighting_consistency")


@dataclass(frozen=True)
class RubricScore:
    caption_alignment: int
    product_uniqueness: int
    physical_realism: int
    lighting_consistency: int

    def __post_init__(self):
        for name in CRITERIA:
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")

    def as_tuple(self) -> tuple:
        return (self.caption_alignment, self.product_uniqueness,
                self.physical_realism, self.lighting_consistency)


@dataclass
class QualityReport:
    candidate_id: str
    rubric: RubricScore
    gate: int
    aesthetic: float
    clip_score: float
    combined: float = 0.0
    matched_pattern: Optional[tuple] = None
    flags: list = field(default_factory=list)


@dataclass
class SelectionPolicy:
    mode: str = "hierarchical"  # or "strict_gate"
    patterns: tuple = DEFAULT_PATTERNS
    k: int = 4
    aesthetic_threshold: float = 5.0
    alpha: float = 0.5
    beta: float = 0.5
    use_clip_filter: bool = False
    clip_threshold: float = 0.5
    clip_weight: float = DEFAULT_CLIP_WEIGHT

    def __post_init__(self):
        if self.mode not in ("strict_gate", "hierarchical"):
            raise ValueError(f"unknown selection mode {self.mode!r}")
        self.patterns = tuple(tuple(int(b) for b in p) for p in self.patterns)
        if self.mode == "hierarchical" and not self.patterns:
            raise ValueError("hierarchical mode requires at least one pattern")
        for p in self.patterns:
            if len(p) != len(CRITERIA) or any(b not in (0, 1) for b in p):
                raise ValueError(f"malformed pattern {p}")
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError("alpha and beta must be >= 0 with a positive sum")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.clip_weight <= 0:
            raise ValueError("clip_weight must be positive")


# ------------------------------------------------------------------ scoring

_RUBRIC_INSTRUCTIONS = (
    "Judge the attached marketing image against the caption on four binary "
    "criteria: caption_alignment (scene matches the caption), "
    "product_uniqueness (exactly one instance of the product), "
    "physical_realism (no impossible geometry or floating objects), "
    "lighting_consistency (product lighting matches the scene). Reply with "
    "JSON giving each criterion 0 or 1."
)


def score_rubric(candidate: CandidateImage, caption: SceneCaption,
                 llm: LLMBackend, flags: Optional[list] = None) -> RubricScore:
    """Binary rubric verdicts from the multimodal backend.

    A backend failure yields the conservative all-zeros rubric (the
    candidate cannot pass any gate) plus a flag.
    """
    request = TextCompletionRequest(
        system_instructions=_RUBRIC_INSTRUCTIONS,
        user_content=f"CAPTION: {caption.text}",
        expected_schema_id="rubric_scores",
        attached_images=[candidate.raster],
    )
    try:
        value = llm.complete(request)
    except BackendError as exc:
        logger.warning("rubric backend failed on %s (%s); recording all-zeros",
                       candidate.candidate_id, exc)
        if flags is not None:
            flags.append("rubric_backend_failed")
        return RubricScore(0, 0, 0, 0)
    return RubricScore(**{name: int(value[name]) for name in CRITERIA})


def gate(r: RubricScore) -> int:
    g = 1
    for c in r.as_tuple():
        g *= c
    return g


def select_by_patterns(scores: Sequence[RubricScore], patterns: Sequence) -> list:
    """Indices matching the first pattern that matches anything, else []."""
    tuples = [s.as_tuple() for s in scores]
    for pattern in patterns:
        target = tuple(int(b) for b in pattern)
        if len(target) != len(CRITERIA):
            raise ValueError(f"pattern {pattern} must have length {len(CRITERIA)}")
        matches = [i for i, t in enumerate(tuples) if t == target]
        if matches:
            return matches
    return []


def clip_score(image_embed: EmbeddingVector, text_embed: EmbeddingVector,
               w: float = DEFAULT_CLIP_WEIGHT) -> float:
    """w * max(0, cos) — negative alignments are floored at zero."""
    if w <= 0:
        raise ValueError("w must be positive")
    return w * max(0.0, cosine(image_embed, text_embed))


def aesthetic_score(candidate: CandidateImage, backend: AestheticBackend,
                    flags: Optional[list] = None) -> float:
    try:
        return float(backend.score(candidate.raster))
    except BackendError as exc:
        logger.warning("aesthetic backend failed on %s (%s); recording 0.0",
                       candidate.candidate_id, exc)
        if flags is not None:
            flags.append("aesthetic_backend_failed")
        return 0.0


def build_report(candidate: CandidateImage, caption: SceneCaption,
                 llm: LLMBackend, embedder: EmbeddingBackend,
                 aesthetic_backend: AestheticBackend,
                 policy: SelectionPolicy) -> QualityReport:
    """Score one candidate on every axis and assemble its QualityReport."""
    flags: list = []
    rubric = score_rubric(candidate, caption, llm, flags=flags)
    aes = aesthetic_score(candidate, aesthetic_backend, flags=flags)
    try:
        image_embed = embedder.embed_image(candidate.raster)
        text_embed = embedder.embed_text(caption.text)
        clip = clip_score(image_embed, text_embed, policy.clip_weight)
    except BackendError as exc:
        logger.warning("embedding backend failed on %s (%s); clip score 0.0",
                       candidate.candidate_id, exc)
        flags.append("clip_backend_failed")
        clip = 0.0
    report = QualityReport(
        candidate_id=candidate.candidate_id,
        rubric=rubric,
        gate=gate(rubric),
        aesthetic=aes,
        clip_score=clip,
        flags=flags,
    )
    report.combined = combined_score(report, policy)
    return report


# ---------------------------------------------------------------- selection

def combined_score(report: QualityReport, policy: SelectionPolicy) -> float:
    """Eq-style weighted mix of normalized aesthetic and CLIP scores."""
    aes_norm = min(max(report.aesthetic, 0.0), 10.0) / 10.0
    clip_norm = min(max(report.clip_score, 0.0), policy.clip_weight) / policy.clip_weight
    return policy.alpha * aes_norm + policy.beta * clip_norm


def rank_and_select(reports: Sequence[QualityReport],
                    policy: SelectionPolicy) -> list:
    """Gate/relax, threshold, rank; returns at most k candidate_ids.

    Side effects on the reports (by design, they feed the run manifest):
    matched_pattern is stamped on candidates admitted by relaxation, and
    `combined` is refreshed from the policy weights.
    """
    if not reports:
        return []
    for report in reports:
        report.combined = combined_score(report, policy)
        report.matched_pattern = None  # re-stamped below; calls are idempotent

    if policy.mode == "strict_gate":
        admitted = [r for r in reports if r.gate == 1]
        for r in admitted:
            r.matched_pattern = (1, 1, 1, 1)
    else:
        indices = select_by_patterns([r.rubric for r in reports], policy.patterns)
        admitted = [reports[i] for i in indices]
        if admitted:
            pattern = admitted[0].rubric.as_tuple()
            for r in admitted:
                r.matched_pattern = pattern

    survivors = [r for r in admitted if r.aesthetic >= policy.aesthetic_threshold]
    if policy.use_clip_filter:
        survivors = [r for r in survivors if r.clip_score >= policy.clip_threshold]
    survivors.sort(key=lambda r: (-r.combined, r.candidate_id))
    return [r.candidate_id for r in survivors[: policy.k]]
