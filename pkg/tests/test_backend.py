import json

import httpx
import pytest

from frag.backend import (
    BackendUnavailable,
    ChatRequest,
    HttpChatBackend,
    ImagePart,
    ProtocolError,
    TransportError,
    parse_completion,
)
from frag.media import ImagePayload

IMG = ImagePayload(b"\x89PNG\r\n\x1a\nabc", "png")
OK_BODY = {
    "choices": [
        {
            "message": {"role": "assistant", "content": "A"},
            "logprobs": {
                "content": [
                    {"token": "A", "logprob": -0.1, "top_logprobs": [{"token": "A", "logprob": -0.1}, {"token": "B", "logprob": -2.4}]}
                ]
            },
        }
    ]
}


def request(**kw):
    base = dict(model="m", images=(ImagePart(IMG),), text="hello", max_tokens=1, logprobs=True, top_logprobs=5)
    base.update(kw)
    return ChatRequest(**base)


def backend_with(handler, **kw):
    return HttpChatBackend(
        "http://backend/v1", client=httpx.Client(transport=httpx.MockTransport(handler)), sleep=kw.pop("sleep", lambda s: None), **kw
    )


def test_payload_shape():
    body = request(detail="low").to_payload()
    part = body["messages"][0]["content"][0]
    assert part["image_url"]["url"].startswith("data:image/png;base64,")
    assert part["image_url"]["detail"] == "low"
    assert body["logprobs"] is True and body["top_logprobs"] == 5
    assert body["messages"][0]["content"][-1] == {"type": "text", "text": "hello"}


def test_parse_completion():
    result = parse_completion(json.dumps(OK_BODY))
    assert result.content == "A"
    assert result.top_logprobs == [("A", -0.1), ("B", -2.4)]


def test_parse_completion_without_logprobs():
    result = parse_completion(json.dumps({"choices": [{"message": {"content": "blue"}}]}))
    assert result.content == "blue" and result.top_logprobs is None


@pytest.mark.parametrize("body", ["not json", "{}", '{"choices": []}', '{"choices": [{"message": {"content": "A"}, "logprobs": {"content": []}}]}'])
def test_parse_completion_malformed(body):
    with pytest.raises(ProtocolError) as err:
        parse_completion(body)
    assert err.value.raw == body


def test_posts_to_chat_completions_with_auth(monkeypatch):
    seen = {}

    def handler(req):
        seen["url"] = str(req.url)
        seen["auth"] = req.headers.get("authorization")
        seen["body"] = json.loads(req.content)
        return httpx.Response(200, json=OK_BODY)

    monkeypatch.setenv("FRAG_API_KEY", "secret")
    result = backend_with(handler).complete(request())
    assert seen["url"] == "http://backend/v1/chat/completions"
    assert seen["auth"] == "Bearer secret"
    assert seen["body"]["max_tokens"] == 1
    assert result.top_logprobs[0] == ("A", -0.1)


def test_retries_5xx_with_backoff_then_succeeds():
    statuses = iter([503, 500, 200])
    sleeps = []

    def handler(req):
        status = next(statuses)
        return httpx.Response(status, json=OK_BODY if status == 200 else {"error": "x"})

    backend = backend_with(handler, sleep=sleeps.append)
    assert backend.complete(request()).content == "A"
    assert sleeps == [0.5, 2.0]
    assert backend.calls == 3


def test_retry_budget_exhausted():
    backend = backend_with(lambda r: httpx.Response(500, text="down"), retries=2)
    with pytest.raises(TransportError) as err:
        backend.complete(request())
    assert err.value.status == 500 and backend.calls == 3


def test_4xx_fails_fast():
    backend = backend_with(lambda r: httpx.Response(400, text="bad model"))
    with pytest.raises(TransportError) as err:
        backend.complete(request())
    assert err.value.status == 400 and backend.calls == 1


def test_connection_refused_is_unavailable():
    def handler(req):
        raise httpx.ConnectError("refused", request=req)

    with pytest.raises(BackendUnavailable):
        backend_with(handler).complete(request())
