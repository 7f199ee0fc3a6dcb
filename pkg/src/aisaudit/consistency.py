"""Agreement between evaluators, measured on their hard decisions.

For a fixed target label (0 or 1) each evaluator induces the set of
claim_ids it assigns that label to. Pairwise agreement is the Jaccard
overlap (intersection over union) of those sets. Computing it for both
target labels matters: two evaluators can agree almost perfectly on the
majority class while assigning disjoint minority sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Sequence

from .corpus import Corpus, PredictionSet
from .errors import CoverageMismatch


def iou(set_a: AbstractSet[str], set_b: AbstractSet[str]) -> float | None:
    """Intersection-over-union of two id sets; None when both are empty."""
    union = len(set_a | set_b)
    if union == 0:
        return None
    return len(set_a & set_b) / union


@dataclass(frozen=True)
class ConsistencyMatrix:
    """Symmetric evaluator-by-evaluator IoU matrix for one target label."""

    dataset: str | None
    target_label: int
    evaluators: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]

    def pair(self, eval_a: str, eval_b: str) -> float | None:
        i = self.evaluators.index(eval_a)
        j = self.evaluators.index(eval_b)
        return self.values[i][j]


def pairwise_consistency(
    preds: Sequence[PredictionSet],
    corpus: Corpus,
    target_label: int,
    dataset: str | None = None,
) -> ConsistencyMatrix:
    """IoU matrix over the claims of one dataset slice.

    Every prediction set must cover the slice completely; silently
    intersecting coverage would make the sets incomparable.
    """
    if target_label not in (0, 1):
        raise ValueError(f"target_label must be 0 or 1, got {target_label!r}")
    records = [r for r in corpus if dataset is None or r.dataset == dataset]
    claim_ids = [r.claim_id for r in records]
    for p in preds:
        missing = [cid for cid in claim_ids if cid not in p.scores]
        if missing:
            raise CoverageMismatch(
                f"evaluator {p.evaluator!r} is missing {len(missing)} scores "
                f"for slice {dataset if dataset is not None else corpus.name!r}"
            )
    target_sets = [
        {cid for cid in claim_ids if p.predicted_label(cid) == target_label}
        for p in preds
    ]
    n = len(preds)
    values = tuple(
        tuple(iou(target_sets[i], target_sets[j]) for j in range(n))
        for i in range(n)
    )
    return ConsistencyMatrix(
        dataset=dataset,
        target_label=target_label,
        evaluators=tuple(p.evaluator for p in preds),
        values=values,
    )
