"""Reading scoring inputs and writing prediction files.

Two input shapes are accepted, detected per line:

* corpus records: ``claim_id`` + ``claim`` + ``document``
* chunk requests: ``request_id`` + ``claim`` + ``chunk_text``

Both collapse to (id, claim, evidence) triples. The output is always the
prediction wire format: one JSON object per line with ``claim_id``,
``evaluator`` and ``score``; chunk request ids ride in the claim_id
column, which is how the downstream toolkit expects them.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import InputFormatError

SCHEMA_VERSION = 1


class ScoreRequest(NamedTuple):
    request_id: str
    claim: str
    evidence: str


def _text_field(obj: dict, key: str, line_number: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value.strip():
        raise InputFormatError(line_number, f"field {key!r} must be a non-empty string")
    return value


def read_requests(path: str | Path) -> list[ScoreRequest]:
    """Parse a corpus or chunk-request file into scoring requests.

    Input ids must be unique; the contract with the downstream loader is
    at most one score per id.
    """
    requests: list[ScoreRequest] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputFormatError(line_number, f"not valid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise InputFormatError(line_number, "each line must be a JSON object")
            version = obj.get("schema_version", SCHEMA_VERSION)
            if version != SCHEMA_VERSION:
                raise InputFormatError(
                    line_number, f"unsupported schema_version {version!r}"
                )
            if "request_id" in obj:
                rid = _text_field(obj, "request_id", line_number)
                evidence = _text_field(obj, "chunk_text", line_number)
            elif "claim_id" in obj:
                rid = _text_field(obj, "claim_id", line_number)
                evidence = _text_field(obj, "document", line_number)
            else:
                raise InputFormatError(
                    line_number, "need either claim_id/document or request_id/chunk_text"
                )
            claim = _text_field(obj, "claim", line_number)
            if rid in seen:
                raise InputFormatError(line_number, f"duplicate input id {rid!r}")
            seen.add(rid)
            requests.append(ScoreRequest(request_id=rid, claim=claim, evidence=evidence))
    return requests


def write_predictions(
    path: str | Path,
    evaluator: str,
    scored: Sequence[tuple[str, float]],
) -> None:
    """Write the prediction wire format, one line per scored input, in
    the given order. An empty sequence writes an empty (valid) file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for request_id, score in scored:
            fh.write(
                json.dumps(
                    {
                        "claim_id": request_id,
                        "evaluator": evaluator,
                        "score": score,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def read_cache(path: str | Path, evaluator: str) -> dict[str, float]:
    """Load cached scores for one evaluator; a missing file is an empty
    cache. Lines for other evaluators are kept but ignored here."""
    cache: dict[str, float] = {}
    p = Path(path)
    if not p.exists():
        return cache
    with open(p, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.get("evaluator") != evaluator:
                continue
            score = obj.get("score")
            if isinstance(score, (int, float)) and not isinstance(score, bool):
                cache[str(obj.get("claim_id"))] = float(score)
    return cache


def write_cache(path: str | Path, evaluator: str, scores: dict[str, float]) -> None:
    """Rewrite the cache file for one evaluator, sorted by id so reruns
    produce identical bytes. Other evaluators' entries survive."""
    p = Path(path)
    others: list[str] = []
    if p.exists():
        with open(p, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                if json.loads(line).get("evaluator") != evaluator:
                    others.append(line.rstrip("\n"))
    lines = others + [
        json.dumps(
            {"claim_id": rid, "evaluator": evaluator, "score": scores[rid]},
            ensure_ascii=False,
            sort_keys=True,
        )
        for rid in sorted(scores)
    ]
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
