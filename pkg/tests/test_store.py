"""Asset store: binary persistence, ingest idempotence, retrieval semantics."""

import logging
import struct

import numpy as np
import pytest

from promopipe.backends.base import BackendError, EmbeddingBackend, EmbeddingVector
from promopipe.backends.mock import MockEmbeddingBackend, MockLLMBackend
from promopipe.decompose import MarketingBrief
from promopipe.store import AssetStore, StoreError
from promopipe.testing import make_product_raster, write_asset

from conftest import SHOE_PROMPT, build_catalog


def brief(product="shoe", background="floor, urban street", theme="sunset"):
    return MarketingBrief(product, background, theme, SHOE_PROMPT)


@pytest.fixture
def embedder():
    return MockEmbeddingBackend()


def fill_products(root, embedder, n=10):
    for i in range(n):
        write_asset(root / "imgs", f"p{i}", make_product_raster(f"item {i}", seed=i),
                    f"item {i}")
    store = AssetStore(root / "s.cpst", embedder)
    return store, root / "imgs"


# -------------------------------------------------------------------- ingest

def test_ingest_ten_then_noop(tmp_path, embedder):
    store, img_dir = fill_products(tmp_path, embedder)
    assert store.ingest(img_dir, "product") == 10
    assert len(store) == 10
    # identical bytes re-ingest as a no-op (content-hash ids)
    assert store.ingest(img_dir, "product") == 0
    assert len(store) == 10


def test_ingest_skips_corrupt_file(tmp_path, embedder, caplog):
    store, img_dir = fill_products(tmp_path, embedder, n=9)
    (img_dir / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really")
    with caplog.at_level(logging.WARNING):
        count = store.ingest(img_dir, "product")
    assert count == 9
    assert any("broken.png" in r.message for r in caplog.records)


def test_ingest_reads_sidecar_metadata(tmp_path, embedder):
    write_asset(tmp_path / "imgs", "asset", make_product_raster("fancy shoe"),
                "fancy shoe", category="shoe")
    store = AssetStore(tmp_path / "s.cpst", embedder)
    store.ingest(tmp_path / "imgs", "product")
    (asset,) = store.assets()
    assert asset.label == "fancy shoe"
    assert asset.category == "shoe"
    assert asset.kind == "product"
    assert len(asset.asset_id) == 16


def test_ingest_rejects_unknown_kind(tmp_path, embedder):
    write_asset(tmp_path / "imgs", "a", make_product_raster("a"), "a")
    store = AssetStore(tmp_path / "s.cpst", embedder)
    with pytest.raises(ValueError):
        store.ingest_file(tmp_path / "imgs" / "a.png", "gadget")


# --------------------------------------------------------------- file format

def test_reopen_is_byte_identical(tmp_path, embedder):
    store, img_dir = fill_products(tmp_path, embedder)
    store.ingest(img_dir, "product")
    raw = (tmp_path / "s.cpst").read_bytes()
    assert raw.startswith(b"CPST1")

    reopened = AssetStore(tmp_path / "s.cpst", embedder)
    assert (tmp_path / "s.cpst").read_bytes() == raw
    q = brief("item 3", "", "")
    before = [(r.asset.asset_id, r.similarity)
              for r in store.retrieve_products(q, limit=10, threshold=-1.0)]
    after = [(r.asset.asset_id, r.similarity)
             for r in reopened.retrieve_products(q, limit=10, threshold=-1.0)]
    assert before == after  # bitwise: in-memory index is float32 both times


def test_bad_magic_rejected(tmp_path, embedder):
    path = tmp_path / "s.cpst"
    path.write_bytes(b"NOTAP" + b"\x00" * 32)
    with pytest.raises(StoreError):
        AssetStore(path, embedder)


def test_backend_mismatch_rejected(tmp_path, embedder):
    AssetStore(tmp_path / "s.cpst", embedder)
    other = MockEmbeddingBackend(dimension=32)
    with pytest.raises(StoreError):
        AssetStore(tmp_path / "s.cpst", other)


def test_truncated_trailing_record_tolerated(tmp_path, embedder, caplog):
    store, img_dir = fill_products(tmp_path, embedder, n=3)
    store.ingest(img_dir, "product")
    path = tmp_path / "s.cpst"
    with open(path, "ab") as fh:  # half a record: id length + partial id
        fh.write(struct.pack("<H", 16) + b"deadbeef")
    with caplog.at_level(logging.WARNING):
        reopened = AssetStore(path, embedder)
    assert len(reopened) == 3
    assert any("truncated record" in r.message for r in caplog.records)


# ------------------------------------------------------------------ products

class PlannedEmbedder(EmbeddingBackend):
    """Exact-similarity fixture: labels map to hand-picked vectors whose
    cosines against the query are float-exact (powers of two)."""

    model_tag = "planned"
    dimension = 16

    # cos(query, v) = first component / ||v||; every norm here is exact
    TABLE = {
        "query": [1.0] + [0.0] * 15,
        "exact one": [1.0] + [0.0] * 15,          # cos 1.0
        "exact half": [1.0] * 4 + [0.0] * 12,     # cos 1/2
        "exact quarter": [1.0] * 16,              # cos 1/4
        "orthogonal": [0.0, 1.0] + [0.0] * 14,    # cos 0.0
        "opposite": [-1.0] + [0.0] * 15,          # cos -1.0
    }

    def _lookup(self, key):
        return EmbeddingVector(tuple(self.TABLE[key]), self.dimension, self.model_tag)

    def embed_text(self, text):
        return self._lookup(text)

    def embed_image(self, raster):
        from promopipe.backends.mock import read_label_stamp
        return self._lookup(read_label_stamp(np.asarray(raster)))


def planned_store(tmp_path):
    embedder = PlannedEmbedder()
    for i, label in enumerate(
            ["exact one", "exact half", "exact quarter", "orthogonal", "opposite"]):
        write_asset(tmp_path / "imgs", f"a{i}",
                    make_product_raster(label, seed=i), label)
    store = AssetStore(tmp_path / "s.cpst", embedder)
    store.ingest(tmp_path / "imgs", "product")
    return store


def test_threshold_boundary_is_inclusive(tmp_path):
    store = planned_store(tmp_path)
    q = brief("query", "", "")
    sims = [round(r.similarity, 9)
            for r in store.retrieve_products(q, limit=10, threshold=0.5)]
    assert sims == [1.0, 0.5]  # 0.5 itself is kept: comparison is >=
    sims = [round(r.similarity, 9)
            for r in store.retrieve_products(q, limit=10, threshold=0.25)]
    assert sims == [1.0, 0.5, 0.25]


def test_exact_match_ranks_first(tmp_path):
    store = planned_store(tmp_path)
    results = store.retrieve_products(brief("query", "", ""), limit=3)
    assert results[0].asset.label == "exact one"
    assert results[0].similarity == pytest.approx(1.0, abs=1e-9)


def test_retrieval_matches_full_scan_oracle(tmp_path, embedder):
    # 100 hash-embedded assets vs an independent cosine scan
    for i in range(100):
        write_asset(tmp_path / "imgs", f"x{i:03d}",
                    make_product_raster(f"thing {i}", 24, 24, seed=i), f"thing {i}")
    store = AssetStore(tmp_path / "s.cpst", embedder)
    store.ingest(tmp_path / "imgs", "product")

    query = embedder.embed_text("thing 42").as_array()
    oracle = []
    for asset in store.assets("product"):
        v = asset.embedding.as_array()
        sim = float(np.dot(query, v) / (np.linalg.norm(query) * np.linalg.norm(v)))
        oracle.append((-sim, asset.asset_id))
    oracle.sort()
    got = store.retrieve_products(brief("thing 42", "", ""), limit=100,
                                  threshold=-1.0)
    assert [r.asset.asset_id for r in got] == [aid for _, aid in oracle]
    assert [r.similarity for r in got] == [-s for s, _ in oracle]


def test_retrieve_products_contracts(tmp_path, embedder):
    store = AssetStore(tmp_path / "empty" / "s.cpst", embedder)
    with pytest.raises(StoreError):
        store.retrieve_products(brief(), limit=5)  # empty store
    with pytest.raises(ValueError):
        planned_store(tmp_path).retrieve_products(brief("query", "", ""), limit=0)


def test_retrieve_products_limit(tmp_path):
    store = planned_store(tmp_path)
    results = store.retrieve_products(brief("query", "", ""), limit=1,
                                      threshold=-1.0)
    assert len(results) == 1 and results[0].asset.label == "exact one"


# --------------------------------------------------------------- backgrounds

def test_background_query_text():
    assert AssetStore.background_query_text(brief()) == "floor, urban street, sunset"
    assert AssetStore.background_query_text(brief(background="", theme="sunset")) == "sunset"
    assert AssetStore.background_query_text(brief(background="", theme="")) == ""


def test_empty_query_means_empty_canvas(tmp_path, embedder):
    store = build_catalog(tmp_path, embedder)
    got = store.retrieve_backgrounds(brief(background="", theme=""), k=5,
                                     llm=MockLLMBackend())
    assert got == []


def test_validator_table_on_catalog(tmp_path, embedder):
    # hand-computed verdicts for the standard six labels against the shoe
    # brief's query tokens {floor, urban, street, sunset}
    expected = {
        "urban street": 1,
        "sandy beach": 0,
        "street market": 1,
        "forest trail": 0,
        "sunset pier": 1,
        "wooden floor": 1,
    }
    store = build_catalog(tmp_path, embedder)
    considered = []
    survivors = store.retrieve_backgrounds(brief(), k=6, llm=MockLLMBackend(),
                                           record=considered)
    assert len(considered) == 6
    assert {r.asset.label: r.validator_verdict for r in considered} == expected
    assert {r.asset.label for r in survivors} == {
        label for label, v in expected.items() if v == 1}
    # survivors preserve similarity order: they are a subsequence of considered
    kept = [r.asset.asset_id for r in considered if r.validator_verdict == 1]
    assert [r.asset.asset_id for r in survivors] == kept


def test_validator_rejecting_all_yields_empty(tmp_path, embedder):
    store = build_catalog(tmp_path, embedder)
    # no background label shares a token with this query
    got = store.retrieve_backgrounds(
        brief("mug", "spaceship interior", "zero gravity"), k=6,
        llm=MockLLMBackend())
    assert got == []


def test_validator_failure_counts_as_reject(tmp_path, embedder, caplog):
    store = build_catalog(tmp_path, embedder)

    class FailingLLM(MockLLMBackend):
        def complete(self, request):
            raise BackendError("service_unavailable", "down", retryable=True)

    considered = []
    with caplog.at_level(logging.WARNING):
        got = store.retrieve_backgrounds(brief(), k=3, llm=FailingLLM(),
                                         record=considered)
    assert got == []
    assert [r.validator_verdict for r in considered] == [0, 0, 0]


def test_top_k_bounds_validator_calls(tmp_path, embedder):
    store = build_catalog(tmp_path, embedder)

    class CountingLLM(MockLLMBackend):
        calls = 0

        def complete(self, request):
            CountingLLM.calls += 1
            return super().complete(request)

    store.retrieve_backgrounds(brief(), k=2, llm=CountingLLM())
    assert CountingLLM.calls == 2
    with pytest.raises(ValueError):
        store.retrieve_backgrounds(brief(), k=0, llm=MockLLMBackend())
