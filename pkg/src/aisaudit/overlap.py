"""Surface-overlap bias probes.

Lexical overlap between a claim and its document is measured as ROUGE-2
precision: the clipped fraction of the claim's bigrams that also occur
in the document. High overlap makes attribution look easy; the question
is whether an evaluator's error profile shifts across overlap strata.
Claims are binned into within-task-group quintiles so the strata stay
comparable across very different tasks.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .corpus import Corpus, PredictionSet, TaskGroup
from .errors import CoverageMismatch, EmptyGroup
from .metrics import RateBreakdown, rate_breakdown

# lowercased alphanumeric runs; underscore is treated as a separator
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _bigram_counts(tokens: Sequence[str]) -> Counter:
    return Counter(zip(tokens, tokens[1:]))


class Rouge2Precision(NamedTuple):
    value: float
    degenerate: bool


def rouge2_precision(claim: str, document: str) -> Rouge2Precision:
    """Clipped bigram precision of the claim against the document.

    A claim with fewer than two tokens has no bigrams; it scores 0.0 and
    is flagged degenerate so downstream tables can count such cases
    instead of silently mixing them into the lowest stratum.
    """
    claim_tokens = tokenize(claim)
    if len(claim_tokens) < 2:
        return Rouge2Precision(value=0.0, degenerate=True)
    claim_bigrams = _bigram_counts(claim_tokens)
    doc_bigrams = _bigram_counts(tokenize(document))
    matched = sum(
        min(count, doc_bigrams[gram]) for gram, count in claim_bigrams.items()
    )
    total = sum(claim_bigrams.values())
    return Rouge2Precision(value=matched / total, degenerate=False)


@dataclass(frozen=True)
class BinAssignment:
    """Quantile binning of one task group's claims.

    bin_edges holds the nearest-rank percentile cut points (k-1 of them
    for k bins); assignment maps claim_id to its bin index. A claim lands
    in the smallest bin whose edge is >= its value, or in the last bin.
    """

    task_group: TaskGroup
    bin_edges: tuple[float, ...]
    assignment: Mapping[str, int]

    def members(self, bin_index: int) -> list[str]:
        return sorted(cid for cid, b in self.assignment.items() if b == bin_index)


def _nearest_rank(sorted_values: Sequence[float], q: float) -> float:
    rank = math.ceil(q * len(sorted_values))
    return sorted_values[max(rank, 1) - 1]


def assign_bins(
    corpus: Corpus, values: Mapping[str, float], bins: int = 5
) -> tuple[BinAssignment, ...]:
    """Bin every claim into within-task-group quantiles of its value.

    values must cover the whole corpus. Groups where every value is equal
    collapse into bin 0, which is the honest answer for a degenerate
    distribution. Returns one BinAssignment per task group present,
    ordered by group name.
    """
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    if not corpus.records:
        raise EmptyGroup("corpus has no records to bin")
    missing = [r.claim_id for r in corpus if r.claim_id not in values]
    if missing:
        raise CoverageMismatch(
            f"{len(missing)} claims have no value to bin, first is {missing[0]!r}"
        )
    by_group: dict[TaskGroup, list[str]] = {}
    for record in corpus:
        by_group.setdefault(record.task_group, []).append(record.claim_id)

    assignments = []
    for group in sorted(by_group, key=lambda g: g.value):
        claim_ids = by_group[group]
        ordered = sorted(values[cid] for cid in claim_ids)
        edges = tuple(_nearest_rank(ordered, i / bins) for i in range(1, bins))
        assignment = {}
        for cid in claim_ids:
            v = values[cid]
            for i, edge in enumerate(edges):
                if v <= edge:
                    assignment[cid] = i
                    break
            else:
                assignment[cid] = bins - 1
        assignments.append(
            BinAssignment(task_group=group, bin_edges=edges, assignment=assignment)
        )
    return tuple(assignments)


def bin_rates(
    bins: BinAssignment, corpus: Corpus, preds: PredictionSet
) -> tuple[RateBreakdown, ...]:
    """Per-bin rate breakdown for one task group's assignment.

    Rates with no support inside a bin come back as None, as everywhere
    else. Every binned claim must be scored.
    """
    n_bins = len(bins.bin_edges) + 1
    unscored = [cid for cid in bins.assignment if cid not in preds.scores]
    if unscored:
        raise CoverageMismatch(
            f"evaluator {preds.evaluator!r} left {len(unscored)} binned claims unscored"
        )
    out = []
    for i in range(n_bins):
        members = bins.members(i)
        labels = [corpus.by_id[cid].label for cid in members]
        predictions = [preds.predicted_label(cid) for cid in members]
        out.append(rate_breakdown(labels, predictions))
    return tuple(out)


def overlap_values(corpus: Corpus) -> tuple[dict[str, float], int]:
    """ROUGE-2 precision for every claim; returns (values, degenerate count)."""
    values: dict[str, float] = {}
    degenerate = 0
    for record in corpus:
        result = rouge2_precision(record.claim, record.document)
        values[record.claim_id] = result.value
        if result.degenerate:
            degenerate += 1
    return values, degenerate
