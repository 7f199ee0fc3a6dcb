"""Document chunking and its effect on evaluator decisions.

Long documents are split into sentence-complete chunks of at most
``limit`` whitespace tokens; an evaluator scores each chunk against the
claim and the claim's score is the max over chunks. The surface-level
shadow of this procedure is R2-diff: how much claim/document bigram
precision is lost by looking at the best single chunk instead of the
whole document. Flip analysis then asks whether prediction changes under
chunking concentrate where R2-diff is positive.

Chunk scoring is delegated over the wire: ``chunk_requests`` emits one
request per chunk with request_id ``<claim_id>#<chunk_index>``, and
``load_chunk_scores`` folds a per-chunk score file back into one score
per claim.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import (
    DEFAULT_THRESHOLD,
    SCHEMA_VERSION,
    Corpus,
    PredictionSet,
    _read_lines,
    _require,
)
from .errors import (
    CoverageMismatch,
    DuplicateClaimId,
    EmptyChunkScores,
    MalformedRecord,
    MissingScores,
    ScoreOutOfRange,
    UnknownClaimId,
)
from .overlap import rouge2_precision

DEFAULT_CHUNK_LIMIT = 500

# Words that end with a period without ending a sentence. Kept small on
# purpose; a rule-based splitter only has to be consistent, not perfect.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "rev", "gen", "sen", "rep", "st",
    "sr", "jr", "vs", "etc", "fig", "no", "inc", "ltd", "co", "corp",
    "dept", "est", "approx", "al", "ed", "eds", "vol", "pp",
}

# terminal punctuation run, optional closing quotes/brackets, whitespace,
# then something that looks like a sentence opener
_BOUNDARY = re.compile(r'([.!?]+)(["\')\]]*)(\s+)(?=["\'(\[]*[A-Z])')


def token_count(text: str) -> int:
    """Whitespace token count; the unit every chunk limit is stated in."""
    return len(text.split())


def _is_guarded(text: str, punct_start: int, punct: str) -> bool:
    if punct != ".":
        return False
    end = punct_start
    start = end
    while start > 0 and (text[start - 1].isalnum()):
        start -= 1
    word = text[start:end]
    if not word:
        return False
    if word.lower() in _ABBREVIATIONS:
        return True
    if len(word) == 1:
        # initials like "J. Smith" and dotted forms like "e.g."
        if word.isupper():
            return True
        if start > 0 and text[start - 1] == ".":
            return True
    return False


def split_sentences(document: str) -> list[str]:
    """Rule-based sentence splitting on terminal punctuation.

    A boundary needs a [.!?] run, optional closing quotes, whitespace and
    an uppercase (or quoted) opener; a short abbreviation list plus an
    initials rule suppress the most common false splits. Joining the
    result with single spaces reproduces the trimmed document up to
    inter-sentence whitespace.
    """
    text = document.strip()
    if not text:
        return []
    sentences = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        if match.start(1) < start:
            continue
        if _is_guarded(text, match.start(1), match.group(1)):
            continue
        sentences.append(text[start:match.end(2)])
        start = match.end(3)
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


@dataclass(frozen=True)
class ChunkPlan:
    """How one document was packed into chunks.

    chunks holds the chunk texts (member sentences joined by single
    spaces); sentence_groups holds the same partition as sentence lists
    so coverage and ordering stay checkable. A sentence longer than the
    limit becomes a chunk by itself and is tallied in
    oversized_sentence_count.
    """

    chunks: tuple[str, ...]
    sentence_groups: tuple[tuple[str, ...], ...]
    limit: int
    oversized_sentence_count: int


def pack_chunks(sentences: Sequence[str], limit: int) -> ChunkPlan:
    """Greedily pack sentences into chunks of at most limit tokens."""
    if limit < 1:
        raise ValueError(f"chunk limit must be >= 1, got {limit}")
    groups: list[list[str]] = []
    current: list[str] = []
    current_tokens = 0
    oversized = 0
    for sentence in sentences:
        n = token_count(sentence)
        if n > limit:
            if current:
                groups.append(current)
                current = []
                current_tokens = 0
            groups.append([sentence])
            oversized += 1
            continue
        if current_tokens + n > limit:
            groups.append(current)
            current = []
            current_tokens = 0
        current.append(sentence)
        current_tokens += n
    if current:
        groups.append(current)
    return ChunkPlan(
        chunks=tuple(" ".join(g) for g in groups),
        sentence_groups=tuple(tuple(g) for g in groups),
        limit=limit,
        oversized_sentence_count=oversized,
    )


def plan_chunks(document: str, limit: int = DEFAULT_CHUNK_LIMIT) -> ChunkPlan:
    return pack_chunks(split_sentences(document), limit)


def chunked_score(chunk_scores: Iterable[float]) -> float:
    """Aggregate per-chunk scores to one claim score: the max.

    One supporting chunk is enough for attribution, so the best chunk
    decides.
    """
    scores = list(chunk_scores)
    if not scores:
        raise EmptyChunkScores("no chunk scores to aggregate")
    return max(scores)


def r2_diff(claim: str, document: str, plan: ChunkPlan) -> float:
    """Overlap lost by chunking: doc-level minus best-chunk ROUGE-2
    precision. Non-negative for any plan derived from the document."""
    if not plan.chunks:
        raise EmptyChunkScores("plan has no chunks")
    full = rouge2_precision(claim, document).value
    best = max(rouge2_precision(claim, chunk).value for chunk in plan.chunks)
    return full - best


@dataclass(frozen=True)
class ChunkRequest:
    request_id: str
    claim: str
    chunk_text: str


def chunk_requests(
    corpus: Corpus, limit: int = DEFAULT_CHUNK_LIMIT
) -> list[ChunkRequest]:
    """One scoring request per (claim, chunk), in corpus order."""
    requests = []
    for record in corpus:
        plan = plan_chunks(record.document, limit)
        for index, chunk in enumerate(plan.chunks):
            requests.append(
                ChunkRequest(
                    request_id=f"{record.claim_id}#{index}",
                    claim=record.claim,
                    chunk_text=chunk,
                )
            )
    return requests


def write_chunk_requests(requests: Iterable[ChunkRequest], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for request in requests:
            fh.write(
                json.dumps(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "request_id": request.request_id,
                        "claim": request.claim,
                        "chunk_text": request.chunk_text,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def load_chunk_scores(
    path: str | Path,
    corpus: Corpus,
    threshold: float = DEFAULT_THRESHOLD,
) -> PredictionSet:
    """Read a per-chunk score file and fold it to per-claim max scores.

    The file uses the prediction wire format with request_ids in the
    claim_id column. Aggregation takes the max over whatever chunks were
    scored for a claim.
    """
    evaluator: str | None = None
    best: dict[str, float] = {}
    seen: set[str] = set()
    for line_number, obj in _read_lines(path):
        name = _require(obj, "evaluator", line_number)
        if evaluator is None:
            evaluator = str(name)
        elif name != evaluator:
            raise MalformedRecord(
                line_number, "evaluator",
                f"expected {evaluator!r}, found {name!r}; one evaluator per file",
            )
        request_id = _require(obj, "claim_id", line_number)
        if not isinstance(request_id, str) or "#" not in request_id:
            raise MalformedRecord(
                line_number, "claim_id",
                "chunk scores need request_ids of the form <claim_id>#<index>",
            )
        claim_id, _, index = request_id.rpartition("#")
        if not index.isdigit():
            raise MalformedRecord(
                line_number, "claim_id", f"chunk index {index!r} is not a number"
            )
        if claim_id not in corpus.by_id:
            raise UnknownClaimId(
                f"{path}: line {line_number}: claim_id {claim_id!r} not in corpus"
            )
        score = _require(obj, "score", line_number)
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise MalformedRecord(line_number, "score", f"must be a number, got {score!r}")
        if not 0.0 <= float(score) <= 1.0:
            raise ScoreOutOfRange(
                f"{path}: line {line_number}: score {score!r} outside [0, 1]"
            )
        if request_id in seen:
            raise DuplicateClaimId(
                f"{path}: line {line_number}: request {request_id!r} scored twice"
            )
        seen.add(request_id)
        current = best.get(claim_id)
        if current is None or float(score) > current:
            best[claim_id] = float(score)
    if evaluator is None:
        raise MissingScores(f"{path} contains no chunk scores")
    return PredictionSet(
        evaluator=evaluator,
        scores=best,
        threshold=threshold,
        coverage=len(best) / len(corpus),
    )


@dataclass(frozen=True)
class FlipCell:
    """Flip rates inside one partition; rates are unconditional shares
    of the partition, None when the partition is empty."""

    support: int
    rate_1_to_0: float | None
    rate_0_to_1: float | None


@dataclass(frozen=True)
class DatasetFlips:
    dataset: str
    positive_r2diff: FlipCell
    zero_r2diff: FlipCell
    ppr_full: float
    ppr_chunked: float


def _flip_cell(pairs: Sequence[tuple[int, int]]) -> FlipCell:
    if not pairs:
        return FlipCell(support=0, rate_1_to_0=None, rate_0_to_1=None)
    n = len(pairs)
    one_to_zero = sum(1 for full, chunked in pairs if full == 1 and chunked == 0)
    zero_to_one = sum(1 for full, chunked in pairs if full == 0 and chunked == 1)
    return FlipCell(
        support=n, rate_1_to_0=one_to_zero / n, rate_0_to_1=zero_to_one / n
    )


def flip_analysis(
    full_preds: PredictionSet,
    chunked_preds: PredictionSet,
    r2diff: Mapping[str, float],
    corpus: Corpus,
) -> tuple[DatasetFlips, ...]:
    """Prediction flips under chunking, split by whether chunking lost
    surface overlap, per dataset.

    Analyzes exactly the claims keyed in r2diff; both prediction sets
    must cover them. PPR is each side's positive prediction rate over the
    analyzed claims of the dataset.
    """
    by_dataset: dict[str, dict[str, list[tuple[int, int]]]] = {}
    ppr_inputs: dict[str, list[tuple[int, int]]] = {}
    for claim_id in sorted(r2diff):
        record = corpus.by_id.get(claim_id)
        if record is None:
            raise UnknownClaimId(f"claim_id {claim_id!r} not in corpus {corpus.name!r}")
        for p in (full_preds, chunked_preds):
            if claim_id not in p.scores:
                raise CoverageMismatch(
                    f"evaluator {p.evaluator!r} did not score claim {claim_id!r}"
                )
        pair = (
            full_preds.predicted_label(claim_id),
            chunked_preds.predicted_label(claim_id),
        )
        partition = "positive" if r2diff[claim_id] > 0 else "zero"
        by_dataset.setdefault(record.dataset, {"positive": [], "zero": []})[
            partition
        ].append(pair)
        ppr_inputs.setdefault(record.dataset, []).append(pair)
    out = []
    for dataset in sorted(by_dataset):
        pairs = ppr_inputs[dataset]
        out.append(
            DatasetFlips(
                dataset=dataset,
                positive_r2diff=_flip_cell(by_dataset[dataset]["positive"]),
                zero_r2diff=_flip_cell(by_dataset[dataset]["zero"]),
                ppr_full=sum(1 for f, _ in pairs if f == 1) / len(pairs),
                ppr_chunked=sum(1 for _, c in pairs if c == 1) / len(pairs),
            )
        )
    return tuple(out)
