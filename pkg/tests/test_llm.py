import json
import re

import httpx
import pytest

from graphmem.errors import BudgetExhausted, ConfigError, MockMiss, Timeout, TransportError
from graphmem.llm import (
    ChatRequest,
    GenerationParams,
    HttpLLMClient,
    MockLLMClient,
    load_mock_script,
    mock_from_script,
    params_from_mapping,
)


def test_default_params_are_deterministic_decoding():
    opts = GenerationParams().as_options()
    assert opts == {"num_predict": 2048, "seed": 42, "temperature": 0.0, "top_k": 1}


def test_params_validation_and_mapping():
    with pytest.raises(ValueError):
        GenerationParams(top_k=0)
    assert params_from_mapping({"num_predict": 64, "seed": 1}).max_new_tokens == 64


def test_mock_returns_scripted_answer_and_records_params():
    mock = mock_from_script([("q1", "a1")])
    assert mock.complete(ChatRequest("q1")) == "a1"
    params = mock.transcript[0].request.params
    assert (params.temperature, params.seed) == (0.0, 42)


def test_mock_miss_and_precedence():
    with pytest.raises(MockMiss):
        MockLLMClient().complete(ChatRequest("anything"))
    assert issubclass(MockMiss, TransportError)
    mock = mock_from_script([("abc", "first"), ("ab", "second")])
    assert mock.complete(ChatRequest("xabcx")) == "first"
    assert mock.complete(ChatRequest("xab")) == "second"
    assert len(mock.transcript) == 2


def test_mock_matcher_kinds():
    mock = mock_from_script(
        [
            (["alpha", "beta"], "both"),
            (re.compile(r"^gam+a$"), "regex"),
            (lambda req: req.system == "sys", "callable"),
        ]
    )
    assert mock.complete(ChatRequest("beta and alpha")) == "both"
    assert mock.complete(ChatRequest("gammma")) == "regex"
    assert mock.complete(ChatRequest("other", system="sys")) == "callable"
    with pytest.raises(MockMiss):
        mock.complete(ChatRequest("alpha only"))


def test_load_mock_script_forms(tmp_path):
    shared = tmp_path / "shared.yaml"
    shared.write_text("- match: hi\n  response: hello\n- match: {regex: 'x+y'}\n  response: xy\n")
    clients = load_mock_script(shared)
    assert clients["default"].complete(ChatRequest("hi there")) == "hello"
    assert clients["default"].complete(ChatRequest("xxxy")) == "xy"
    roles = tmp_path / "roles.json"
    roles.write_text(json.dumps({"judge": [{"match": ["a", "b"], "response": "1"}]}))
    assert load_mock_script(roles)["judge"].complete(ChatRequest("b a")) == "1"
    bad = tmp_path / "bad.yaml"
    bad.write_text("- match: x\n")
    with pytest.raises(ConfigError):
        load_mock_script(bad)


def _client(handler, **kw):
    kw.setdefault("backoff", 0.0)
    return HttpLLMClient("http://llm.test/api/chat", "m", transport=httpx.MockTransport(handler), **kw)


def test_http_payload_and_response_shapes():
    seen = []

    def handler(request):
        body = json.loads(request.content)
        seen.append(body)
        if len(seen) == 1:
            return httpx.Response(200, json={"message": {"role": "assistant", "content": "ollama"}})
        return httpx.Response(200, json={"choices": [{"message": {"content": "openai"}}]})

    client = _client(handler)
    req = ChatRequest("question", system="be brief")
    assert client.complete(req) == "ollama"
    assert client.complete(req) == "openai"
    body = seen[0]
    assert body["model"] == "m" and body["stream"] is False
    assert body["options"] == {"num_predict": 2048, "seed": 42, "temperature": 0.0, "top_k": 1}
    assert [m["role"] for m in body["messages"]] == ["system", "user"]


def test_http_retries_transient_failures():
    statuses = iter([503, 429, 200])

    def handler(request):
        code = next(statuses)
        if code == 200:
            return httpx.Response(200, json={"message": {"content": "ok"}})
        return httpx.Response(code)

    client = _client(handler, retries=2)
    assert client.complete(ChatRequest("q")) == "ok"
    assert client.calls == 3


def test_http_budget_exhausted_after_timeouts():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    client = _client(handler, retries=1)
    with pytest.raises(BudgetExhausted) as exc:
        client.complete(ChatRequest("q"))
    assert isinstance(exc.value.__cause__, Timeout)
    assert client.calls == 2


def test_http_client_errors_are_not_retried():
    client = _client(lambda r: httpx.Response(400, text="bad"), retries=3)
    with pytest.raises(TransportError):
        client.complete(ChatRequest("q"))
    assert client.calls == 1


def test_http_token_from_environment(monkeypatch):
    monkeypatch.setenv("GRAPHMEM_LLM_TOKEN", "sekret")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json={"message": {"content": "x"}})

    _client(handler).complete(ChatRequest("q"))
    assert seen["auth"] == "Bearer sekret"
