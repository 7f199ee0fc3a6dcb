"""Scoring backends.

A backend turns (claim, evidence) pairs into scores in [0, 1]. The HTTP
backend speaks a minimal JSON protocol; the mock backend exists so the
whole pipeline can run deterministically in tests and dry runs. Neither
does any retrying -- that is the runner's job.
"""

from __future__ import annotations

import hashlib
import json
import urllib.error
import urllib.request
from typing import Callable, Protocol, Sequence

from .errors import AuthError, BackendUnavailable, MalformedResponse


class Backend(Protocol):
    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        ...


class MockBackend:
    """Deterministic stand-in for a real evaluator.

    With a constant it always answers that value. Otherwise each pair
    gets a stable pseudo-score derived from a SHA-256 of its text, so
    repeated runs (and runs on other machines) agree byte for byte.
    """

    def __init__(self, constant: float | None = None):
        if constant is not None and not 0.0 <= constant <= 1.0:
            raise ValueError(f"mock constant must be in [0, 1], got {constant}")
        self.constant = constant

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if self.constant is not None:
            return [self.constant for _ in pairs]
        out = []
        for claim, evidence in pairs:
            digest = hashlib.sha256(
                claim.encode("utf-8") + b"\x1f" + evidence.encode("utf-8")
            ).digest()
            out.append(int.from_bytes(digest[:8], "big") / 2**64)
        return out


# (url, body, headers, timeout) -> (status, response body)
PostFn = Callable[[str, bytes, dict, float], tuple[int, bytes]]


def _urllib_post(url: str, body: bytes, headers: dict, timeout: float) -> tuple[int, bytes]:
    request = urllib.request.Request(url, data=body, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()
    except urllib.error.URLError as exc:
        raise BackendUnavailable(f"cannot reach {url}: {exc.reason}") from exc


class HttpBackend:
    """POSTs {"pairs": [{"claim", "evidence"}, ...]} and expects
    {"scores": [...]} with one [0,1] score per pair.

    The transport is injectable so tests can exercise status handling
    without a network.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        post: PostFn = _urllib_post,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self._post = post

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        body = json.dumps(
            {"pairs": [{"claim": c, "evidence": e} for c, e in pairs]}
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        status, payload = self._post(self.endpoint, body, headers, self.timeout)
        if status in (401, 403):
            raise AuthError(f"backend answered {status}; check credentials")
        if status != 200:
            raise BackendUnavailable(f"backend answered {status}")
        try:
            parsed = json.loads(payload)
            scores = parsed["scores"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise MalformedResponse(f"cannot read scores from response: {exc}") from exc
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise MalformedResponse(
                f"expected {len(pairs)} scores, got "
                f"{len(scores) if isinstance(scores, list) else type(scores).__name__}"
            )
        out = []
        for value in scores:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise MalformedResponse(f"score {value!r} is not a number")
            if not 0.0 <= float(value) <= 1.0:
                raise MalformedResponse(f"score {value!r} outside [0, 1]")
            out.append(float(value))
        return out
