"""Binary classification metrics with the attributable class as positive.

Rates whose support is zero are reported as None rather than 0 or NaN so
that "no negatives in this slice" cannot be confused with "perfect
specificity". Balanced accuracy needs both class supports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import LengthMismatch


def binarize(score: float, threshold: float) -> int:
    """Map a score in [0, 1] to a hard label: 1 iff score >= threshold."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score!r} outside [0, 1]")
    return 1 if score >= threshold else 0


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def support_pos(self) -> int:
        """Number of examples whose true label is 1."""
        return self.tp + self.fn

    @property
    def support_neg(self) -> int:
        """Number of examples whose true label is 0."""
        return self.tn + self.fp


@dataclass(frozen=True)
class RateBreakdown:
    """Per-class rates; None marks a rate with zero support."""

    tpr: float | None
    tnr: float | None
    fpr: float | None
    fnr: float | None
    bacc: float | None
    support_pos: int
    support_neg: int


def confusion(labels: Sequence[int], preds: Sequence[int]) -> ConfusionCounts:
    """Count the four confusion cells; label 1 is the positive class."""
    if len(labels) != len(preds):
        raise LengthMismatch(f"{len(labels)} labels vs {len(preds)} predictions")
    tp = fp = tn = fn = 0
    for label, pred in zip(labels, preds):
        if label == 1:
            if pred == 1:
                tp += 1
            else:
                fn += 1
        else:
            if pred == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def rates(counts: ConfusionCounts) -> RateBreakdown:
    """Derive TPR/TNR/FPR/FNR and balanced accuracy from counts.

    BAcc is the plain average of TPR and TNR and is only defined when both
    classes have support.
    """
    pos = counts.support_pos
    neg = counts.support_neg
    tpr = counts.tp / pos if pos else None
    fnr = counts.fn / pos if pos else None
    tnr = counts.tn / neg if neg else None
    fpr = counts.fp / neg if neg else None
    bacc = (tpr + tnr) / 2 if tpr is not None and tnr is not None else None
    return RateBreakdown(
        tpr=tpr, tnr=tnr, fpr=fpr, fnr=fnr, bacc=bacc,
        support_pos=pos, support_neg=neg,
    )


def rate_breakdown(labels: Sequence[int], preds: Sequence[int]) -> RateBreakdown:
    return rates(confusion(labels, preds))
