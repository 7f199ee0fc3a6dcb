import json

import pytest

from ais_adapters.errors import InputFormatError
from ais_adapters.io import (
    ScoreRequest,
    read_cache,
    read_requests,
    write_cache,
    write_predictions,
)


def _write(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


def test_corpus_rows_become_requests(tmp_path):
    path = _write(
        tmp_path / "corpus.jsonl",
        [
            {"claim_id": "a", "claim": "the sky is blue", "document": "sky: blue", "label": 1},
            {"claim_id": "b", "claim": "grass is red", "document": "grass is green", "label": 0},
        ],
    )
    assert read_requests(path) == [
        ScoreRequest("a", "the sky is blue", "sky: blue"),
        ScoreRequest("b", "grass is red", "grass is green"),
    ]


def test_chunk_rows_become_requests(tmp_path):
    path = _write(
        tmp_path / "requests.jsonl",
        [
            {
                "schema_version": 1,
                "request_id": "a#0",
                "claim": "the sky is blue",
                "chunk_text": "first chunk",
            }
        ],
    )
    assert read_requests(path) == [ScoreRequest("a#0", "the sky is blue", "first chunk")]


def test_blank_lines_are_skipped(tmp_path):
    path = tmp_path / "corpus.jsonl"
    row = json.dumps({"claim_id": "a", "claim": "c", "document": "d"})
    path.write_text(f"\n{row}\n   \n")
    assert len(read_requests(path)) == 1


@pytest.mark.parametrize(
    "row",
    [
        {"claim": "c", "document": "d"},
        {"claim_id": "a", "document": "d"},
        {"claim_id": "a", "claim": "c"},
        {"request_id": "a#0", "claim": "c"},
        {"claim_id": "", "claim": "c", "document": "d"},
        {"claim_id": "a", "claim": "c", "document": "d", "schema_version": 2},
    ],
)
def test_bad_rows_are_rejected(tmp_path, row):
    path = _write(tmp_path / "bad.jsonl", [row])
    with pytest.raises(InputFormatError):
        read_requests(path)


def test_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = json.dumps({"claim_id": "a", "claim": "c", "document": "d"})
    path.write_text(good + "\nnot json\n")
    with pytest.raises(InputFormatError) as excinfo:
        read_requests(path)
    assert excinfo.value.line_number == 2


def test_duplicate_ids_are_rejected(tmp_path):
    rows = [
        {"claim_id": "a", "claim": "c", "document": "d"},
        {"claim_id": "a", "claim": "c2", "document": "d2"},
    ]
    path = _write(tmp_path / "dup.jsonl", rows)
    with pytest.raises(InputFormatError):
        read_requests(path)


def test_write_predictions_format(tmp_path):
    path = tmp_path / "out.jsonl"
    write_predictions(path, "e1", [("a", 0.25), ("b#3", 1.0)])
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert lines == [
        {"claim_id": "a", "evaluator": "e1", "score": 0.25},
        {"claim_id": "b#3", "evaluator": "e1", "score": 1.0},
    ]


def test_write_predictions_empty_is_valid(tmp_path):
    path = tmp_path / "out.jsonl"
    write_predictions(path, "e1", [])
    assert path.exists()
    assert path.read_text() == ""


def test_cache_round_trip(tmp_path):
    path = tmp_path / "cache.jsonl"
    write_cache(path, "e1", {"b": 0.5, "a": 0.25})
    assert read_cache(path, "e1") == {"a": 0.25, "b": 0.5}
    # entries are sorted so repeated writes are byte-identical
    first = path.read_bytes()
    write_cache(path, "e1", {"a": 0.25, "b": 0.5})
    assert path.read_bytes() == first


def test_cache_keeps_other_evaluators(tmp_path):
    path = tmp_path / "cache.jsonl"
    write_cache(path, "e1", {"a": 0.25})
    write_cache(path, "e2", {"a": 0.75})
    assert read_cache(path, "e1") == {"a": 0.25}
    assert read_cache(path, "e2") == {"a": 0.75}


def test_missing_cache_is_empty(tmp_path):
    assert read_cache(tmp_path / "absent.jsonl", "e1") == {}
