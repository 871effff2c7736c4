"""HTTP backend clients against scripted transports (no sockets involved)."""

import base64
import json

import numpy as np
import pytest

from promopipe.backends.base import BackendError, GenerationRequest, TextCompletionRequest
from promopipe.backends.http import (
    HttpAestheticBackend,
    HttpEmbeddingBackend,
    HttpGenerationBackend,
    HttpLLMBackend,
    HttpResponse,
)
from promopipe.raster import encode_png, new_canvas

URL = "http://backend.test/v1"


class ScriptedTransport:
    """Plays back a fixed response sequence, recording every request."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def __call__(self, url, payload, headers, timeout_s):
        self.calls.append({"url": url, "payload": payload,
                           "headers": headers, "timeout_s": timeout_s})
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def ok(value):
    return HttpResponse(200, json.dumps(value))


BRIEF = {"primary_product": "shoe", "background_elements": "", "theme": ""}


def llm_request():
    return TextCompletionRequest("sys", "PROMPT: shoe", "marketing_brief")


def test_llm_retries_non_json_then_succeeds():
    # two garbage bodies then valid JSON inside the default budget of 3
    transport = ScriptedTransport([
        HttpResponse(200, "<html>oops</html>"),
        HttpResponse(200, "also not json"),
        ok(BRIEF),
    ])
    backend = HttpLLMBackend(URL, transport=transport)
    assert backend.complete(llm_request()) == BRIEF
    assert len(transport.calls) == 3


def test_llm_retries_5xx():
    transport = ScriptedTransport([HttpResponse(503, "down"), ok(BRIEF)])
    backend = HttpLLMBackend(URL, transport=transport)
    assert backend.complete(llm_request()) == BRIEF


def test_llm_4xx_is_not_retried():
    transport = ScriptedTransport([HttpResponse(401, "no"), ok(BRIEF)])
    backend = HttpLLMBackend(URL, transport=transport)
    with pytest.raises(BackendError) as exc_info:
        backend.complete(llm_request())
    assert not exc_info.value.retryable
    assert len(transport.calls) == 1


def test_llm_budget_exhaustion_surfaces_last_error():
    transport = ScriptedTransport([HttpResponse(500, "a")] * 3)
    backend = HttpLLMBackend(URL, transport=transport)
    with pytest.raises(BackendError) as exc_info:
        backend.complete(llm_request())
    assert exc_info.value.kind == "service_unavailable"
    assert len(transport.calls) == 3


def test_llm_schema_repair_consumes_attempts():
    # parseable JSON that violates the schema re-asks; exhausting the budget
    # that way is a schema_violation, which is never retryable
    transport = ScriptedTransport([ok({"wrong": 1})] * 3)
    backend = HttpLLMBackend(URL, transport=transport)
    with pytest.raises(BackendError) as exc_info:
        backend.complete(llm_request())
    assert exc_info.value.kind == "schema_violation"
    assert not exc_info.value.retryable
    assert len(transport.calls) == 3


def test_llm_schema_repair_then_valid():
    transport = ScriptedTransport([ok({"wrong": 1}), ok(BRIEF)])
    backend = HttpLLMBackend(URL, transport=transport)
    assert backend.complete(llm_request()) == BRIEF


def test_llm_payload_carries_schema_and_images():
    transport = ScriptedTransport([ok(BRIEF)])
    backend = HttpLLMBackend(URL, transport=transport)
    req = TextCompletionRequest("sys", "PROMPT: shoe", "marketing_brief",
                                attached_images=[new_canvas(8, 8)])
    backend.complete(req)
    payload = transport.calls[0]["payload"]
    assert payload["schema_id"] == "marketing_brief"
    assert payload["system"] == "sys"
    assert len(payload["images"]) == 1
    base64.b64decode(payload["images"][0])  # round-trippable


def test_api_key_env_header(monkeypatch):
    monkeypatch.setenv("TEST_BACKEND_KEY", "sekrit")
    transport = ScriptedTransport([ok(BRIEF)])
    backend = HttpLLMBackend(URL, api_key_env="TEST_BACKEND_KEY",
                             transport=transport)
    backend.complete(llm_request())
    assert transport.calls[0]["headers"]["Authorization"] == "Bearer sekrit"


def test_api_key_env_missing(monkeypatch):
    monkeypatch.delenv("ABSENT_KEY", raising=False)
    with pytest.raises(ValueError):
        HttpLLMBackend(URL, api_key_env="ABSENT_KEY")


def test_transport_exception_is_retryable():
    transport = ScriptedTransport([
        BackendError("timeout", "slow", retryable=True),
        ok(BRIEF),
    ])
    backend = HttpLLMBackend(URL, transport=transport)
    assert backend.complete(llm_request()) == BRIEF


def test_embed_round_trip_and_length_check():
    values = [0.5] * 4
    transport = ScriptedTransport([ok({"values": values})] * 2)
    backend = HttpEmbeddingBackend(URL, model_tag="srv", dimension=4,
                                   transport=transport)
    v = backend.embed_text("hello")
    assert v.model_tag == "srv" and v.dimension == 4
    assert transport.calls[0]["payload"] == {"kind": "text", "text": "hello"}
    backend.embed_image(new_canvas(4, 4))
    assert transport.calls[1]["payload"]["kind"] == "image"

    short = ScriptedTransport([ok({"values": [0.5, 0.5]})])
    bad = HttpEmbeddingBackend(URL, model_tag="srv", dimension=4, transport=short)
    with pytest.raises(BackendError) as exc_info:
        bad.embed_text("hello")
    assert exc_info.value.kind == "malformed_response"


def test_embed_rejects_empty_text():
    backend = HttpEmbeddingBackend(URL, model_tag="srv", dimension=4,
                                   transport=ScriptedTransport([]))
    with pytest.raises(ValueError):
        backend.embed_text("")


def test_generate_round_trip_and_dims_check():
    canvas = new_canvas(16, 16)
    mask = np.zeros((16, 16), dtype=np.uint8)
    image_b64 = base64.b64encode(encode_png(canvas)).decode("ascii")
    transport = ScriptedTransport([ok({"image_png": image_b64})])
    backend = HttpGenerationBackend(URL, transport=transport)
    out = backend.generate_scene(GenerationRequest(canvas, mask, "c", 1))
    assert out.shape == (16, 16, 4)

    wrong = new_canvas(8, 8)
    wrong_b64 = base64.b64encode(encode_png(wrong)).decode("ascii")
    transport = ScriptedTransport([ok({"image_png": wrong_b64})])
    backend = HttpGenerationBackend(URL, transport=transport)
    with pytest.raises(BackendError) as exc_info:
        backend.generate_scene(GenerationRequest(canvas, mask, "c", 1))
    assert exc_info.value.kind == "malformed_response"


def test_generate_undecodable_image():
    transport = ScriptedTransport([ok({"image_png": "AAAA"})])
    backend = HttpGenerationBackend(URL, transport=transport)
    canvas = new_canvas(8, 8)
    with pytest.raises(BackendError):
        backend.generate_scene(
            GenerationRequest(canvas, np.zeros((8, 8), dtype=np.uint8), "c", 1))


def test_aesthetic_score_and_missing_field():
    transport = ScriptedTransport([ok({"score": 7.25}), ok({"nope": 1})])
    backend = HttpAestheticBackend(URL, transport=transport)
    assert backend.score(new_canvas(8, 8)) == 7.25
    with pytest.raises(BackendError):
        backend.score(new_canvas(8, 8))


def test_client_rejects_bad_construction():
    with pytest.raises(ValueError):
        HttpLLMBackend("", transport=ScriptedTransport([]))
    with pytest.raises(ValueError):
        HttpLLMBackend(URL, retry_budget=0, transport=ScriptedTransport([]))
    with pytest.raises(ValueError):
        HttpEmbeddingBackend(URL, model_tag="m", dimension=0,
                             transport=ScriptedTransport([]))
