"""Claim corpus data model and wire-format ingestion.

A corpus is a flat collection of claim records. Each record pairs one
claim with the single document that is supposed to support it, plus a
human attributability label: 1 means the document fully supports the
claim, 0 means it does not. Optional lineage fields tie a claim back to
the response it was extracted from (``response_id``) and the system that
generated that response (``system``); both are needed for response-level
and per-system analyses but many verification corpora ship without them.

Wire formats (all UTF-8 JSON lines, one object per line):

* corpus file: ``claim_id``, ``dataset``, ``system``, ``response_id``,
  ``claim``, ``document``, ``label``, ``task_group``. Optional fields may
  be omitted or null. Every line may carry ``schema_version`` (currently
  1); the loader rejects versions it does not know.
* prediction file: ``evaluator``, ``claim_id``, ``score``. One evaluator
  per file, scores in [0, 1], at most one score per claim.

Scores are turned into hard labels by thresholding (score >= threshold
predicts 1); the threshold rides along on :class:`PredictionSet` so every
downstream analysis binarizes the same way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    DuplicateClaimId,
    EmptyCorpus,
    MalformedRecord,
    MissingScores,
    ScoreOutOfRange,
    UnknownClaimId,
)

SCHEMA_VERSION = 1

DEFAULT_THRESHOLD = 0.5


class TaskGroup(Enum):
    """Coarse task families used to slice overlap analyses."""

    SUMMARIZATION = "Summarization"
    LLM_VERIFICATION = "LLMVerification"
    WIKI_VERIFICATION = "WikiVerification"
    LONG_FORM_QA = "LongFormQA"
    DATA2TEXT = "Data2Text"
    OTHER = "Other"

    @classmethod
    def parse(cls, value: str) -> "TaskGroup":
        for member in cls:
            if member.value == value:
                return member
        raise ValueError(f"unknown task group {value!r}")


@dataclass(frozen=True)
class ClaimRecord:
    """One claim/document pair with its human label.

    Attributes:
        claim_id: unique identifier within a corpus.
        dataset: name of the source dataset.
        claim: claim text; non-empty after trimming.
        document: evidence text the claim is judged against; non-empty
            after trimming.
        label: human attributability judgment, 0 or 1.
        system: generating system, when known. Required if response_id
            is present.
        response_id: identifier of the response this claim came from,
            when known. Claims sharing (dataset, system, response_id)
            belong to the same response.
        task_group: task family for grouped analyses.
    """

    claim_id: str
    dataset: str
    claim: str
    document: str
    label: int
    system: str | None = None
    response_id: str | None = None
    task_group: TaskGroup = TaskGroup.OTHER


@dataclass(frozen=True)
class Corpus:
    """Validated, claim_id-sorted collection of records."""

    name: str
    records: tuple[ClaimRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ClaimRecord]:
        return iter(self.records)

    @cached_property
    def by_id(self) -> Mapping[str, ClaimRecord]:
        return {r.claim_id: r for r in self.records}

    @cached_property
    def datasets(self) -> tuple[str, ...]:
        return tuple(sorted({r.dataset for r in self.records}))

    @cached_property
    def systems(self) -> tuple[str, ...]:
        return tuple(sorted({r.system for r in self.records if r.system is not None}))

    def for_dataset(self, dataset: str) -> "Corpus":
        """Sub-corpus holding only records from one dataset."""
        subset = tuple(r for r in self.records if r.dataset == dataset)
        if not subset:
            raise EmptyCorpus(f"corpus {self.name!r} has no records for dataset {dataset!r}")
        return Corpus(name=f"{self.name}/{dataset}", records=subset)

    def labels(self) -> dict[str, int]:
        return {r.claim_id: r.label for r in self.records}


@dataclass(frozen=True)
class PredictionSet:
    """Scores one evaluator assigned to (a subset of) a corpus.

    coverage is the fraction of corpus claim_ids that received a score;
    it is computed at load time against the corpus the file was joined
    with. predicted_label applies the stored threshold.
    """

    evaluator: str
    scores: Mapping[str, float]
    threshold: float = DEFAULT_THRESHOLD
    coverage: float = 1.0

    def __contains__(self, claim_id: str) -> bool:
        return claim_id in self.scores

    def predicted_label(self, claim_id: str) -> int:
        return 1 if self.scores[claim_id] >= self.threshold else 0

    def predicted_labels(self, claim_ids: Iterable[str]) -> list[int]:
        return [self.predicted_label(cid) for cid in claim_ids]


@dataclass(frozen=True)
class ResponseGroup:
    """Claims that were extracted from one generated response."""

    dataset: str
    system: str
    response_id: str
    claim_ids: tuple[str, ...]


@dataclass(frozen=True)
class GroupingResult:
    """Response groups plus the count of records that could not be grouped."""

    groups: tuple[ResponseGroup, ...]
    excluded_count: int


def _require(obj: dict, key: str, line_number: int) -> object:
    if key not in obj or obj[key] is None:
        raise MalformedRecord(line_number, key, "missing required field")
    return obj[key]


def _read_lines(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_number, "-", f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise MalformedRecord(line_number, "-", "line is not a JSON object")
            version = obj.get("schema_version", SCHEMA_VERSION)
            if version != SCHEMA_VERSION:
                raise MalformedRecord(
                    line_number, "schema_version", f"unsupported version {version!r}"
                )
            yield line_number, obj


def _parse_record(
    line_number: int,
    obj: dict,
    task_groups: Mapping[str, TaskGroup] | None,
) -> ClaimRecord:
    claim_id = _require(obj, "claim_id", line_number)
    if not isinstance(claim_id, str) or not claim_id:
        raise MalformedRecord(line_number, "claim_id", "must be a non-empty string")
    dataset = _require(obj, "dataset", line_number)
    if not isinstance(dataset, str) or not dataset:
        raise MalformedRecord(line_number, "dataset", "must be a non-empty string")
    claim = _require(obj, "claim", line_number)
    if not isinstance(claim, str) or not claim.strip():
        raise MalformedRecord(line_number, "claim", "must be non-empty after trimming")
    document = _require(obj, "document", line_number)
    if not isinstance(document, str) or not document.strip():
        raise MalformedRecord(line_number, "document", "must be non-empty after trimming")
    label = _require(obj, "label", line_number)
    if label not in (0, 1) or isinstance(label, bool):
        raise MalformedRecord(line_number, "label", f"must be 0 or 1, got {label!r}")

    system = obj.get("system")
    if system is not None and (not isinstance(system, str) or not system):
        raise MalformedRecord(line_number, "system", "must be a non-empty string or null")
    response_id = obj.get("response_id")
    if response_id is not None and (not isinstance(response_id, str) or not response_id):
        raise MalformedRecord(line_number, "response_id", "must be a non-empty string or null")
    if response_id is not None and system is None:
        raise MalformedRecord(
            line_number, "system", "required when response_id is present"
        )

    raw_group = obj.get("task_group")
    if raw_group is not None:
        try:
            task_group = TaskGroup.parse(raw_group)
        except (ValueError, TypeError) as exc:
            raise MalformedRecord(line_number, "task_group", str(exc)) from exc
    elif task_groups is not None and dataset in task_groups:
        task_group = task_groups[dataset]
    else:
        task_group = TaskGroup.OTHER

    return ClaimRecord(
        claim_id=claim_id,
        dataset=dataset,
        claim=claim,
        document=document,
        label=int(label),
        system=system,
        response_id=response_id,
        task_group=task_group,
    )


def load_corpus(
    path: str | Path,
    task_groups: Mapping[str, TaskGroup] | None = None,
    name: str | None = None,
) -> Corpus:
    """Load and validate a corpus file.

    task_groups maps dataset name to the TaskGroup used for records whose
    lines omit task_group. Records are returned sorted by claim_id.
    """
    records: dict[str, ClaimRecord] = {}
    for line_number, obj in _read_lines(path):
        record = _parse_record(line_number, obj, task_groups)
        if record.claim_id in records:
            raise DuplicateClaimId(
                f"claim_id {record.claim_id!r} appears more than once (line {line_number})"
            )
        records[record.claim_id] = record
    if not records:
        raise EmptyCorpus(f"{path} contains no records")
    ordered = tuple(records[cid] for cid in sorted(records))
    return Corpus(name=name or Path(path).stem, records=ordered)


def merge_corpora(corpora: Iterable[Corpus], name: str = "merged") -> Corpus:
    """Combine corpora into one; claim_ids must stay unique."""
    seen: dict[str, ClaimRecord] = {}
    for corpus in corpora:
        for record in corpus:
            if record.claim_id in seen:
                raise DuplicateClaimId(
                    f"claim_id {record.claim_id!r} appears in more than one corpus"
                )
            seen[record.claim_id] = record
    if not seen:
        raise EmptyCorpus("no records in any input corpus")
    return Corpus(name=name, records=tuple(seen[cid] for cid in sorted(seen)))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus back to the wire format (sorted, deterministic)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in corpus:
            obj = {
                "schema_version": SCHEMA_VERSION,
                "claim_id": r.claim_id,
                "dataset": r.dataset,
                "system": r.system,
                "response_id": r.response_id,
                "claim": r.claim,
                "document": r.document,
                "label": r.label,
                "task_group": r.task_group.value,
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def load_predictions(
    path: str | Path,
    corpus: Corpus,
    threshold: float = DEFAULT_THRESHOLD,
    strict: bool = False,
) -> PredictionSet:
    """Load one evaluator's score file and join it against a corpus.

    Every claim_id must exist in the corpus and carry at most one score in
    [0, 1]. With strict=True, anything short of full coverage raises
    MissingScores; otherwise coverage is recorded on the result.
    """
    evaluator: str | None = None
    scores: dict[str, float] = {}
    for line_number, obj in _read_lines(path):
        name = _require(obj, "evaluator", line_number)
        if not isinstance(name, str) or not name:
            raise MalformedRecord(line_number, "evaluator", "must be a non-empty string")
        if evaluator is None:
            evaluator = name
        elif name != evaluator:
            raise MalformedRecord(
                line_number, "evaluator",
                f"expected {evaluator!r}, found {name!r}; one evaluator per file",
            )
        claim_id = _require(obj, "claim_id", line_number)
        if not isinstance(claim_id, str) or not claim_id:
            raise MalformedRecord(line_number, "claim_id", "must be a non-empty string")
        if claim_id not in corpus.by_id:
            raise UnknownClaimId(
                f"{path}: line {line_number}: claim_id {claim_id!r} not in corpus {corpus.name!r}"
            )
        score = _require(obj, "score", line_number)
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise MalformedRecord(line_number, "score", f"must be a number, got {score!r}")
        if not 0.0 <= float(score) <= 1.0:
            raise ScoreOutOfRange(
                f"{path}: line {line_number}: score {score!r} outside [0, 1]"
            )
        if claim_id in scores:
            raise DuplicateClaimId(
                f"{path}: line {line_number}: claim_id {claim_id!r} scored twice"
            )
        scores[claim_id] = float(score)
    if evaluator is None:
        raise MissingScores(f"{path} contains no scores")
    coverage = len(scores) / len(corpus)
    if strict and coverage < 1.0:
        missing = len(corpus) - len(scores)
        raise MissingScores(
            f"{path}: evaluator {evaluator!r} left {missing} of {len(corpus)} claims unscored"
        )
    return PredictionSet(
        evaluator=evaluator, scores=scores, threshold=threshold, coverage=coverage
    )


def response_groups(corpus: Corpus) -> GroupingResult:
    """Group records by (dataset, system, response_id).

    Records without a response_id cannot be grouped; they are excluded and
    counted rather than treated as an error, since several corpora carry
    claim-level annotations only.
    """
    buckets: dict[tuple[str, str, str], list[str]] = {}
    excluded = 0
    for record in corpus:
        if record.response_id is None:
            excluded += 1
            continue
        # system is guaranteed by record validation when response_id is set
        key = (record.dataset, record.system, record.response_id)
        buckets.setdefault(key, []).append(record.claim_id)
    groups = tuple(
        ResponseGroup(dataset=d, system=s, response_id=r, claim_ids=tuple(ids))
        for (d, s, r), ids in sorted(buckets.items())
    )
    return GroupingResult(groups=groups, excluded_count=excluded)
