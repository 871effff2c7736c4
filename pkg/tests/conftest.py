"""Shared fixtures: mock backend bundles and pre-populated asset stores."""

import pytest

from promopipe.backends.mock import (
    MockAestheticBackend,
    MockEmbeddingBackend,
    MockGenerationBackend,
    MockLLMBackend,
)
from promopipe.config import Backends, PipelineConfig
from promopipe.store import AssetStore
from promopipe.testing import (
    make_background_raster,
    make_product_raster,
    write_asset,
)

# The standard catalog most pipeline-level tests run against. Background
# labels are chosen so that, for the shoe prompt's brief ("floor, urban
# street" / "sunset"), the token-overlap validator gives a known verdict
# table: street/sunset/floor labels pass, beach and forest do not.
PRODUCTS = [
    ("shoe", "shoe"),
    ("red mug", "mug"),
    ("hat", "hat"),
]
BACKGROUNDS = [
    "urban street",
    "sandy beach",
    "street market",
    "forest trail",
    "sunset pier",
    "wooden floor",
]
SHOE_PROMPT = "Shoe on the floor on an urban street at sunset"


def build_catalog(root, embedder, products=PRODUCTS, backgrounds=BACKGROUNDS):
    """Write product/background fixtures and ingest them into a fresh store."""
    for i, (label, category) in enumerate(products):
        write_asset(root / "products", f"prod{i}",
                    make_product_raster(label, seed=i), label, category)
    for i, label in enumerate(backgrounds):
        write_asset(root / "backgrounds", f"bg{i}",
                    make_background_raster(label, seed=100 + i), label)
    store = AssetStore(root / "assets.cpst", embedder)
    store.ingest(root / "products", "product")
    store.ingest(root / "backgrounds", "background")
    return store


def make_config(root, **overrides):
    """PipelineConfig rooted under `root`, canvas shrunk for test speed."""
    base = {
        "run_seed": 7,
        "store_path": str(root / "assets.cpst"),
        "runs_dir": str(root / "runs"),
        "plan": {"canvas_size": [256, 256]},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key].update(value)
        else:
            base[key] = value
    return PipelineConfig.from_dict(base)


@pytest.fixture
def mock_backends():
    return Backends(
        llm=MockLLMBackend(),
        embed=MockEmbeddingBackend(),
        generate=MockGenerationBackend(),
        aesthetic=MockAestheticBackend(),
    )


@pytest.fixture
def catalog_store(tmp_path, mock_backends):
    return build_catalog(tmp_path, mock_backends.embed)
