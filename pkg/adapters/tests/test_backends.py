import json

import pytest

from ais_adapters.backends import HttpBackend, MockBackend
from ais_adapters.errors import AuthError, BackendUnavailable, MalformedResponse

PAIRS = [("claim one", "evidence one"), ("claim two", "evidence two")]


def test_mock_scores_are_deterministic():
    a = MockBackend().score(PAIRS)
    b = MockBackend().score(PAIRS)
    assert a == b
    assert all(0.0 <= s <= 1.0 for s in a)


def test_mock_scores_depend_on_both_fields():
    base = MockBackend().score([("claim", "evidence")])[0]
    other_claim = MockBackend().score([("claim!", "evidence")])[0]
    other_evidence = MockBackend().score([("claim", "evidence!")])[0]
    assert base != other_claim
    assert base != other_evidence


def test_mock_constant():
    assert MockBackend(constant=1.0).score(PAIRS) == [1.0, 1.0]
    assert MockBackend(constant=0.0).score(PAIRS) == [0.0, 0.0]


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_mock_constant_out_of_range(bad):
    with pytest.raises(ValueError):
        MockBackend(constant=bad)


class RecordingPost:
    """Stand-in transport: returns canned responses, records every call."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def __call__(self, url, body, headers, timeout):
        self.calls.append((url, body, headers, timeout))
        return self.responses.pop(0)


def _ok(scores):
    return (200, json.dumps({"scores": scores}).encode("utf-8"))


def test_http_backend_success():
    post = RecordingPost([_ok([0.2, 0.9])])
    backend = HttpBackend("http://scorer.local/v1", api_key="k-123", post=post)
    assert backend.score(PAIRS) == [0.2, 0.9]
    url, body, headers, _timeout = post.calls[0]
    assert url == "http://scorer.local/v1"
    payload = json.loads(body)
    assert payload == {
        "pairs": [
            {"claim": "claim one", "evidence": "evidence one"},
            {"claim": "claim two", "evidence": "evidence two"},
        ]
    }
    assert headers["Authorization"] == "Bearer k-123"


def test_http_backend_no_key_no_auth_header():
    post = RecordingPost([_ok([0.2, 0.9])])
    HttpBackend("http://scorer.local/v1", post=post).score(PAIRS)
    assert "Authorization" not in post.calls[0][2]


@pytest.mark.parametrize("status", [401, 403])
def test_http_backend_auth_failure(status):
    post = RecordingPost([(status, b"denied")])
    with pytest.raises(AuthError):
        HttpBackend("http://scorer.local/v1", post=post).score(PAIRS)


@pytest.mark.parametrize("status", [429, 500, 503])
def test_http_backend_server_failure(status):
    post = RecordingPost([(status, b"oops")])
    with pytest.raises(BackendUnavailable):
        HttpBackend("http://scorer.local/v1", post=post).score(PAIRS)


@pytest.mark.parametrize(
    "body",
    [
        b"not json",
        b'{"wrong": []}',
        b'{"scores": [0.5]}',  # wrong length for two pairs
        b'{"scores": [0.5, 1.5]}',
        b'{"scores": [0.5, "high"]}',
        b'{"scores": [0.5, true]}',
    ],
)
def test_http_backend_malformed_payload(body):
    post = RecordingPost([(200, body)])
    with pytest.raises(MalformedResponse):
        HttpBackend("http://scorer.local/v1", post=post).score(PAIRS)
