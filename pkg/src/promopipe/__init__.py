"""Generative marketing-image pipeline: retrieval-grounded composition,
scene generation, and rubric-gated quality control."""

__version__ = "0.1.0"

from .config import PipelineConfig
from .decompose import MarketingBrief, decompose
from .orchestrator import run_pipeline
from .store import AssetStore

__all__ = [
    "PipelineConfig",
    "MarketingBrief",
    "decompose",
    "run_pipeline",
    "AssetStore",
    "__version__",
]
