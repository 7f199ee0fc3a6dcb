"""Shared fixture helpers for building small corpora and score files."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from aisaudit.corpus import ClaimRecord, Corpus, TaskGroup


def make_record(
    claim_id: str,
    label: int = 1,
    dataset: str = "ds1",
    system: str | None = None,
    response_id: str | None = None,
    claim: str = "the sky is blue",
    document: str = "Observers agree the sky is blue. It was measured.",
    task_group: TaskGroup | str = TaskGroup.OTHER,
) -> ClaimRecord:
    if isinstance(task_group, str):
        task_group = TaskGroup.parse(task_group)
    return ClaimRecord(
        claim_id=claim_id,
        dataset=dataset,
        claim=claim,
        document=document,
        label=label,
        system=system,
        response_id=response_id,
        task_group=task_group,
    )


def make_corpus(records, name: str = "test") -> Corpus:
    ordered = tuple(sorted(records, key=lambda r: r.claim_id))
    return Corpus(name=name, records=ordered)


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


def corpus_line(
    claim_id: str,
    label: int = 1,
    dataset: str = "ds1",
    **extra,
) -> dict:
    row = {
        "claim_id": claim_id,
        "dataset": dataset,
        "claim": "the sky is blue",
        "document": "Observers agree the sky is blue. It was measured.",
        "label": label,
    }
    row.update(extra)
    return row


def prediction_lines(evaluator: str, scores: dict[str, float]) -> list[dict]:
    return [
        {"evaluator": evaluator, "claim_id": cid, "score": score}
        for cid, score in scores.items()
    ]


@pytest.fixture
def tmp_jsonl(tmp_path):
    def _write(name: str, rows: list[dict]) -> Path:
        return write_jsonl(tmp_path / name, rows)

    return _write


# Filled in by test_acceptance.py; echoed after the run so every criterion
# gets one visible PASS/FAIL line even under output capture.
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"ACCEPTANCE {name}: {outcome}")
