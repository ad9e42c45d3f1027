"""
Model backends: HTTP retries, provider adapters and the rule-based mock
"""
import json

import httpx
import pytest

from common.exceptions import ConfigError
from common.schemas import Stage
from llm_service import (
    Blocked,
    ChatRequest,
    GenerationConfig,
    HttpBackend,
    HttpBackendConfig,
    MockBackend,
    MockBackendConfig,
    Provider,
    RetryPolicy,
    Text,
    TransportError,
    TransportErrorCode,
    complete,
    create_backend,
)
from llm_service.adapters import get_adapter


def _request(task="interpret", **metadata):
    config = GenerationConfig.for_stage(Stage.INTERPRET, "test-model")
    return ChatRequest.single_turn("You are terse.", "Rewrite this.", config, task=task, metadata=metadata)


def _backend(handler, provider=Provider.MINIMAL, attempts=3, sleeps=None):
    config = HttpBackendConfig(
        endpoint="https://llm.test/v1",
        provider=provider,
        retry_attempts=attempts,
    )
    sleeps = sleeps if sleeps is not None else []
    return HttpBackend(config, "secret", transport=httpx.MockTransport(handler), sleep=sleeps.append)


def test_retry_policy_delays():
    policy = RetryPolicy()
    assert [policy.delay(n) for n in (1, 2)] == [0.5, 1.0]
    with pytest.raises(ValueError):
        RetryPolicy(attempts=0)


def test_5xx_retried_then_success():
    statuses = iter([503, 502, 200])
    sleeps = []

    def handler(request):
        status = next(statuses)
        if status != 200:
            return httpx.Response(status)
        return httpx.Response(200, json={"text": "Why was a stent placed?"})

    outcome = _backend(handler, sleeps=sleeps).complete(_request())
    assert outcome == Text(text="Why was a stent placed?")
    assert sleeps == [0.5, 1.0]


def test_5xx_gives_up_after_attempts():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(500)

    outcome = _backend(handler).complete(_request())
    assert isinstance(outcome, TransportError)
    assert outcome.code == TransportErrorCode.HTTP_STATUS
    assert len(calls) == 3


def test_4xx_not_retried():
    calls = []
    sleeps = []

    def handler(request):
        calls.append(request)
        return httpx.Response(400, json={"error": "bad request"})

    outcome = _backend(handler, sleeps=sleeps).complete(_request())
    assert outcome.code == TransportErrorCode.HTTP_STATUS
    assert len(calls) == 1
    assert sleeps == []


def test_transport_error_retried():
    calls = []

    def handler(request):
        calls.append(request)
        if len(calls) == 1:
            raise httpx.ConnectError("connection refused")
        return httpx.Response(200, json={"text": "ok"})

    assert _backend(handler).complete(_request()) == Text(text="ok")
    assert len(calls) == 2


def test_non_json_body():
    outcome = _backend(lambda request: httpx.Response(200, text="<html>")).complete(_request())
    assert outcome.code == TransportErrorCode.BAD_RESPONSE


def test_blocked_and_empty_not_retried():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(200, json={"blocked": "safety"})

    assert _backend(handler).complete(_request()) == Blocked(reason="safety")
    assert len(calls) == 1

    outcome = _backend(lambda request: httpx.Response(200, json={"text": "  "})).complete(_request())
    assert outcome.code == TransportErrorCode.EMPTY


def test_minimal_wire_format():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"text": "ok"})

    _backend(handler).complete(_request())
    assert seen["url"] == "https://llm.test/v1"
    assert seen["auth"] == "Bearer secret"
    assert seen["body"]["messages"] == [{"role": "user", "content": "Rewrite this."}]
    assert seen["body"]["temperature"] == 0.0


def test_gemini_adapter():
    adapter = get_adapter("gemini")
    wire = adapter.build(_request(), "https://g.test/v1beta", "k")
    assert wire.url == "https://g.test/v1beta/models/test-model:generateContent"
    assert wire.headers == {"x-goog-api-key": "k"}
    assert {s["threshold"] for s in wire.body["safetySettings"]} == {"BLOCK_NONE"}
    assert wire.body["contents"][0]["role"] == "user"

    text = {"candidates": [{"content": {"parts": [{"text": "Hi "}, {"text": "there"}]}, "finishReason": "STOP"}]}
    assert adapter.parse(text) == Text(text="Hi there")
    assert adapter.parse({"promptFeedback": {"blockReason": "SAFETY"}}) == Blocked(reason="SAFETY")
    assert adapter.parse({"candidates": [{"finishReason": "SAFETY"}]}) == Blocked(reason="SAFETY")
    assert adapter.parse({"candidates": []}).code == TransportErrorCode.BAD_RESPONSE
    assert adapter.parse({"candidates": [{"finishReason": "MAX_TOKENS"}]}).code == TransportErrorCode.EMPTY


def test_gemini_safety_settings_only_when_disabled():
    config = GenerationConfig.for_stage(Stage.GENERATE, "m", safety_filters_disabled=False)
    request = ChatRequest.single_turn("s", "u", config)
    assert "safetySettings" not in get_adapter(Provider.GEMINI).build(request, "https://g.test", None).body


def test_openai_adapter():
    adapter = get_adapter(Provider.OPENAI)
    wire = adapter.build(_request(), "https://o.test/v1", "k")
    assert wire.url == "https://o.test/v1/chat/completions"
    assert wire.body["messages"][0] == {"role": "system", "content": "You are terse."}

    assert adapter.parse({"choices": [{"message": {"content": "ok"}}]}) == Text(text="ok")
    assert adapter.parse({"choices": [{"finish_reason": "content_filter"}]}) == Blocked(reason="content_filter")
    assert adapter.parse({"choices": []}).code == TransportErrorCode.BAD_RESPONSE
    assert adapter.parse({"choices": [{"message": {"content": ""}}]}).code == TransportErrorCode.EMPTY


def test_complete_never_raises():
    class Exploding:
        def complete(self, request):
            raise RuntimeError("boom")

    outcome = complete(Exploding(), _request())
    assert outcome.code == TransportErrorCode.TRANSPORT
    assert "boom" in outcome.detail


def test_request_roles_alternate():
    request = _request()
    follow_up = request.followed_by("draft", "fix it")
    assert len(follow_up.messages) == 3
    assert follow_up.key != request.key
    with pytest.raises(ValueError):
        ChatRequest(system="s", messages=(), config=request.config)


def test_mock_scores_by_shared_content_words():
    sentences = [
        [1, "The stent was placed in the artery."],
        [2, "Vitals were stable."],
        [3, "Artery blocked."],
        [4, "Stent placed after the artery was found blocked."],
        [5, "Discharged home."],
    ]
    scores = MockBackend().sentence_scores("c1", "Why was a stent placed in the artery?", sentences)
    assert scores == {1: 5, 2: 1, 3: 1, 4: 5, 5: 1}


def test_mock_oracle_scores():
    mock = MockBackend(oracle={"c1": [2]})
    outcome = mock.complete(_request("evidence", case_id="c1", query="x", sentences=[[1, "a"], [2, "b"], [3, "c"]]))
    assert json.loads(outcome.text) == {"1": 1, "2": 5, "3": 1}


def test_mock_stage_rules():
    mock = MockBackend()
    assert mock.complete(_request("interpret", question="  Why   now? ")).text == "Why now?"
    generated = mock.complete(_request("generate", evidence_sentences=["A.", "B."]))
    assert generated.text == "A. B."

    aligned = mock.complete(
        _request(
            "align",
            sentences=[[1, "Stent placed."], [2, "Pain resolved."]],
            answer_sentences=["pain   resolved", "Unrelated."],
        )
    )
    assert json.loads(aligned.text) == [{"answer_sentence": 1, "evidence": [2]}]

    assert mock.complete(_request("generate", evidence_sentences=[])).code == TransportErrorCode.EMPTY
    assert mock.complete(_request("unknown")).code == TransportErrorCode.BAD_RESPONSE


def test_create_http_backend_needs_api_key(monkeypatch):
    monkeypatch.delenv("CASCADEQA_TEST_KEY", raising=False)
    with pytest.raises(ConfigError):
        create_backend(HttpBackendConfig(api_key_env="CASCADEQA_TEST_KEY"))

    monkeypatch.setenv("CASCADEQA_TEST_KEY", "k")
    backend = create_backend(HttpBackendConfig(api_key_env="CASCADEQA_TEST_KEY"))
    assert isinstance(backend, HttpBackend)
    backend.close()


def test_create_mock_backend():
    assert isinstance(create_backend(MockBackendConfig()), MockBackend)


def test_http_config_validation():
    with pytest.raises(ValueError):
        HttpBackendConfig(endpoint="ftp://nope")
    assert HttpBackendConfig(endpoint="https://x.test/").endpoint == "https://x.test"
