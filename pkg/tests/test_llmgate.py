import json

import pytest

from patchvet.llmgate import (
    RECORD,
    REPLAY,
    CompletionRequest,
    FixtureMissingError,
    Gateway,
    GatewayError,
    HTTPProvider,
    PromptTemplate,
    ScriptedProvider,
    StructuredOutputError,
    TemplateError,
    TemplateRegistry,
    request_digest,
)
from patchvet.llmgate.config import load_provider_config
from patchvet.llmgate.providers import Candidate
from patchvet.llmgate.structured import parse_document, schema_problems
from patchvet.errors import ConfigError

ECHO = PromptTemplate("echo", 1, "Say ${word}.\r\nThanks", "free_text")
DOC = PromptTemplate("doc", 2, "Give JSON about ${topic}", "structured_document")


def registry():
    return TemplateRegistry([ECHO, DOC])


def test_render_rejects_unbound_placeholder():
    with pytest.raises(TemplateError, match="word"):
        ECHO.render({})


def test_builtin_templates_load():
    reg = TemplateRegistry.builtin()
    assert "gcs_verify" in reg.ids()
    assert reg.get("rule_extract").placeholders == {"thread_id", "transcript"}


def test_digest_depends_on_id_version_and_normalized_text():
    d = request_digest("echo", 1, "a\r\nb")
    assert d == request_digest("echo", 1, "a\nb")
    assert d != request_digest("echo", 2, "a\nb")
    assert d != request_digest("other", 1, "a\nb")


def test_record_then_replay_is_verbatim(tmp_path):
    provider = ScriptedProvider(lambda p, n: [f"hi {i} from {p.variables['word']}" for i in range(n)])
    live = Gateway(provider, mode=RECORD, fixtures_dir=tmp_path, registry=registry())
    req = CompletionRequest("echo", {"word": "x"}, temperature=0.7, candidate_count=3)
    recorded = live.complete(req)
    assert [c.text for c in recorded.candidates] == ["hi 0 from x", "hi 1 from x", "hi 2 from x"]

    digest = recorded.request_digest
    base = tmp_path / "echo" / "1"
    assert (base / f"{digest}.response").read_text() == "hi 0 from x"
    assert (base / f"{digest}.2.response").exists()
    sidecar = json.loads((base / f"{digest}.request").read_text())
    assert sidecar["prompt"] == "Say x.\nThanks"

    replay = Gateway(mode=REPLAY, fixtures_dir=tmp_path, registry=registry())
    again = replay.complete(req)
    assert again.candidates == recorded.candidates
    assert again.request_digest == digest
    assert replay.complete(req) == again


def test_replay_miss_names_digest(tmp_path):
    gw = Gateway(mode=REPLAY, fixtures_dir=tmp_path, registry=registry())
    req = CompletionRequest("echo", {"word": "y"})
    expected = request_digest("echo", 1, gw.render(req).text)
    with pytest.raises(FixtureMissingError) as exc:
        gw.complete(req)
    assert exc.value.digest == expected
    assert expected in str(exc.value)


class FlakyTransport:
    def __init__(self, statuses):
        self.statuses = list(statuses)
        self.bodies = []

    def __call__(self, url, headers, body, timeout):
        self.bodies.append(json.loads(body))
        status = self.statuses.pop(0)
        if status != 200:
            return status, b"slow down"
        n = self.bodies[-1]["n"]
        payload = {"choices": [{"message": {"content": f"ok{i}"}, "finish_reason": "stop"} for i in range(n)]}
        return 200, json.dumps(payload).encode()


def test_rate_limit_retries_then_succeeds():
    transport = FlakyTransport([429, 429, 200])
    sleeps = []
    provider = HTTPProvider("http://model.invalid/v1/chat", "m", transport=transport)
    gw = Gateway(provider, registry=registry(), sleep=sleeps.append, backoff_base=0.25)
    resp = gw.complete(CompletionRequest("echo", {"word": "z"}, temperature=0.3))
    assert resp.text == "ok0"
    assert resp.retries == 2
    assert sleeps == [0.25, 0.5]
    body = transport.bodies[-1]
    assert body["model"] == "m" and body["n"] == 1 and body["temperature"] == 0.3
    assert body["messages"][0]["content"] == "Say z.\nThanks"


def test_retry_cap_surfaces_error():
    provider = HTTPProvider("http://x", "m", transport=FlakyTransport([503] * 10))
    gw = Gateway(provider, registry=registry(), sleep=lambda s: None, max_retries=3)
    with pytest.raises(GatewayError, match="3 retries"):
        gw.complete(CompletionRequest("echo", {"word": "z"}))


def test_client_error_is_not_retried():
    transport = FlakyTransport([400, 200])
    gw = Gateway(HTTPProvider("http://x", "m", transport=transport), registry=registry(), sleep=lambda s: None)
    with pytest.raises(GatewayError):
        gw.complete(CompletionRequest("echo", {"word": "z"}))
    assert len(transport.bodies) == 1


def test_sequential_sampling_when_provider_lacks_n():
    transport = FlakyTransport([200, 200, 200])
    provider = HTTPProvider("http://x", "m", transport=transport, supports_n=False)
    gw = Gateway(provider, registry=registry())
    resp = gw.complete(CompletionRequest("echo", {"word": "z"}, temperature=0.7, candidate_count=3))
    assert len(resp.candidates) == 3
    assert all(b["n"] == 1 for b in transport.bodies)


def test_short_candidate_list_must_be_explained():
    short = ScriptedProvider(lambda p, n: ["only one"])
    gw = Gateway(short, registry=registry())
    with pytest.raises(GatewayError, match="expected 2"):
        gw.complete(CompletionRequest("echo", {"word": "z"}, candidate_count=2))
    truncated = ScriptedProvider(lambda p, n: [Candidate("cut", "length")])
    resp = Gateway(truncated, registry=registry()).complete(CompletionRequest("echo", {"word": "z"}, candidate_count=2))
    assert resp.truncated


# structured output


def test_structured_valid_document():
    gw = Gateway(ScriptedProvider(lambda p, n: '{"a": 1, "b": "x"}'), registry=registry())
    assert gw.complete_structured(CompletionRequest("doc", {"topic": "t"}), {"a": "int", "b": "str"}) == {"a": 1, "b": "x"}


def test_structured_strips_code_fences():
    text = '```json\n{"a": [1, 2]}\n```'
    gw = Gateway(ScriptedProvider(lambda p, n: text), registry=registry())
    assert gw.complete_structured(CompletionRequest("doc", {"topic": "t"}), {"a": "list"}) == {"a": [1, 2]}


def test_structured_repair_reprompt_succeeds():
    answers = iter(['{"b": 1}', '{"a": 5}'])
    provider = ScriptedProvider(lambda p, n: next(answers))
    gw = Gateway(provider, registry=registry())
    assert gw.complete_structured(CompletionRequest("doc", {"topic": "t"}), {"a": "int"}) == {"a": 5}
    assert "missing required field 'a'" in provider.calls[1].text


def test_structured_failure_lists_missing_field():
    provider = ScriptedProvider(lambda p, n: '{"b": 1}')
    gw = Gateway(provider, registry=registry())
    with pytest.raises(StructuredOutputError) as exc:
        gw.complete_structured(CompletionRequest("doc", {"topic": "t"}), {"a": "int"}, repairs=2)
    assert exc.value.problems == ["missing required field 'a'"]
    assert len(exc.value.raw_candidates) == 3
    assert len(provider.calls) == 3


def test_structured_requires_structured_template():
    gw = Gateway(ScriptedProvider(lambda p, n: "{}"), registry=registry())
    with pytest.raises(GatewayError):
        gw.complete_structured(CompletionRequest("echo", {"word": "x"}), {})


def test_parse_document_and_schema_helpers():
    assert parse_document('noise {"x": true} trailing') == {"x": True}
    with pytest.raises(ValueError):
        parse_document("[1, 2]")
    assert schema_problems({"x": True}, {"x": "int"}) == ["field 'x' must be int"]
    assert schema_problems({}, {"x": "str?"}) == []


def test_provider_config(tmp_path):
    path = tmp_path / "provider.conf"
    path.write_text("# model endpoint\nendpoint = http://localhost:8080/v1/chat/completions\nmodel = small\nconcurrency = 2\nsupports_n = no\n")
    cfg = load_provider_config(path)
    assert cfg.concurrency == 2 and cfg.supports_n is False
    assert cfg.build().model == "small"
    path.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        load_provider_config(path)
