"""System ranking under statistical significance.

A leaderboard position is only meaningful when the gap between two
systems' error rates is larger than sampling noise. Pairwise decisions
use a two-proportion z-test; a pair is Indistinguishable unless the
two-sided p-value clears alpha. Comparing the decisions induced by human
labels with those induced by an evaluator's predictions gives a 3x3
ranking confusion table; correlation coefficients (Kendall, Pearson)
summarize agreement of the underlying rate vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .corpus import Corpus, PredictionSet
from .errors import (
    InvalidCounts,
    LengthMismatch,
    PairSetMismatch,
    TooFewSystems,
    TooShort,
    ZeroVariance,
)
from .quantify import Level, response_outcomes


def two_prop_ztest(
    k1: int, n1: int, k2: int, n2: int, pooled: bool = True
) -> tuple[float, float]:
    """Two-sided two-proportion z-test for k1/n1 versus k2/n2.

    The pooled form (default) uses p = (k1+k2)/(n1+n2) in the standard
    error. The two-sided p-value comes from the normal survival function
    computed with math.erfc, which is accurate to well below 1e-9.
    Degenerate inputs (pooled p of exactly 0 or 1) carry no evidence of a
    difference, so they return z=0, p=1. In the unpooled form a zero
    standard error with unequal proportions yields an infinite z.
    """
    for k, n, side in ((k1, n1, "first"), (k2, n2, "second")):
        if n < 1:
            raise InvalidCounts(f"{side} sample size must be >= 1, got {n}")
        if not 0 <= k <= n:
            raise InvalidCounts(f"{side} count {k} outside [0, {n}]")
    p1 = k1 / n1
    p2 = k2 / n2
    if pooled:
        p = (k1 + k2) / (n1 + n2)
        if p == 0.0 or p == 1.0:
            return 0.0, 1.0
        se = math.sqrt(p * (1.0 - p) * (1.0 / n1 + 1.0 / n2))
    else:
        var = p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2
        if var == 0.0:
            if p1 == p2:
                return 0.0, 1.0
            return math.copysign(math.inf, p1 - p2), 0.0
        se = math.sqrt(var)
    z = (p1 - p2) / se
    p_value = math.erfc(abs(z) / math.sqrt(2.0))
    return z, p_value


class Direction(Enum):
    LOWER = "Lower"
    INDISTINGUISHABLE = "Indistinguishable"
    HIGHER = "Higher"


@dataclass(frozen=True)
class RankDecision:
    """Significance-gated comparison of system_a's error rate to system_b's."""

    system_a: str
    system_b: str
    direction: Direction
    z: float
    p_value: float


def _decide(rate_a: float, rate_b: float, p_value: float, alpha: float) -> Direction:
    if p_value >= alpha:
        return Direction.INDISTINGUISHABLE
    return Direction.LOWER if rate_a < rate_b else Direction.HIGHER


def error_counts(
    corpus: Corpus,
    source: PredictionSet | None = None,
    level: Level = Level.CLAIM,
) -> dict[str, tuple[int, int]]:
    """Per-system (errors, total) pairs from labels or from predictions.

    source=None reads the human labels; a PredictionSet reads thresholded
    scores. At the response level strict aggregation applies first, and
    responses with unscored members are left out when predictions are the
    source.
    """
    counts: dict[str, tuple[int, int]] = {}
    if level is Level.CLAIM:
        by_system: dict[str, list[int]] = {}
        for record in corpus:
            if record.system is None:
                continue
            if source is None:
                value = record.label
            else:
                if record.claim_id not in source.scores:
                    continue
                value = source.predicted_label(record.claim_id)
            by_system.setdefault(record.system, []).append(value)
        for system, values in by_system.items():
            counts[system] = (sum(1 for v in values if v == 0), len(values))
    else:
        outcomes, _ = response_outcomes(corpus, source)
        by_system_vals: dict[str, list[int]] = {}
        for outcome in outcomes:
            value = outcome.label if source is None else outcome.predicted
            if value is None:
                continue
            by_system_vals.setdefault(outcome.group.system, []).append(value)
        for system, values in by_system_vals.items():
            counts[system] = (sum(1 for v in values if v == 0), len(values))
    return counts


def pair_decisions(
    corpus: Corpus,
    source: PredictionSet | None = None,
    alpha: float = 0.05,
    level: Level = Level.CLAIM,
    pooled: bool = True,
) -> tuple[RankDecision, ...]:
    """One decision per unordered system pair, ordered by system name."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    counts = error_counts(corpus, source, level)
    systems = sorted(counts)
    if len(systems) < 2:
        raise TooFewSystems(f"need at least 2 systems, found {len(systems)}")
    decisions = []
    for i, a in enumerate(systems):
        for b in systems[i + 1:]:
            k1, n1 = counts[a]
            k2, n2 = counts[b]
            z, p_value = two_prop_ztest(k1, n1, k2, n2, pooled=pooled)
            direction = _decide(k1 / n1, k2 / n2, p_value, alpha)
            decisions.append(
                RankDecision(
                    system_a=a, system_b=b, direction=direction, z=z, p_value=p_value
                )
            )
    return tuple(decisions)


_DIRECTIONS = (Direction.LOWER, Direction.INDISTINGUISHABLE, Direction.HIGHER)


@dataclass(frozen=True)
class RankingConfusion:
    """3x3 table of labeled direction (rows) vs predicted direction
    (columns), both in (Lower, Indistinguishable, Higher) order.

    pct_err is the off-diagonal share in percent. pct_major_err counts
    only reversals: pairs called significant in opposite directions.
    """

    cells: tuple[tuple[int, int, int], ...]
    pct_err: float
    pct_major_err: float

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.cells)


def ranking_confusion(
    gold: Sequence[RankDecision], predicted: Sequence[RankDecision]
) -> RankingConfusion:
    gold_pairs = {(d.system_a, d.system_b): d for d in gold}
    pred_pairs = {(d.system_a, d.system_b): d for d in predicted}
    if set(gold_pairs) != set(pred_pairs):
        raise PairSetMismatch(
            f"gold covers {len(gold_pairs)} pairs, predictions cover "
            f"{len(pred_pairs)}, and the sets differ"
        )
    if not gold_pairs:
        raise PairSetMismatch("no pairs to compare")
    index = {d: i for i, d in enumerate(_DIRECTIONS)}
    cells = [[0, 0, 0] for _ in range(3)]
    major = 0
    agree = 0
    for pair, gold_decision in gold_pairs.items():
        pred_decision = pred_pairs[pair]
        gi = index[gold_decision.direction]
        pi = index[pred_decision.direction]
        cells[gi][pi] += 1
        if gi == pi:
            agree += 1
        if {gold_decision.direction, pred_decision.direction} == {
            Direction.LOWER,
            Direction.HIGHER,
        }:
            major += 1
    total = len(gold_pairs)
    return RankingConfusion(
        cells=tuple(tuple(row) for row in cells),
        pct_err=100.0 * (total - agree) / total,
        pct_major_err=100.0 * major / total,
    )


def kendall_tau(
    x: Sequence[float], y: Sequence[float], variant: str = "a"
) -> float:
    """Kendall rank correlation.

    Variant "a" divides concordant-minus-discordant by all n(n-1)/2
    pairs, so ties only dilute. Variant "b" applies the usual tie
    correction and raises ZeroVariance when either ranking is constant.
    """
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)} values")
    n = len(x)
    if n < 2:
        raise TooShort(f"need at least 2 points, got {n}")
    if variant not in ("a", "b"):
        raise ValueError(f"variant must be 'a' or 'b', got {variant!r}")
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = (x[i] > x[j]) - (x[i] < x[j])
            dy = (y[i] > y[j]) - (y[i] < y[j])
            if dx == 0:
                ties_x += 1
            if dy == 0:
                ties_y += 1
            if dx == 0 or dy == 0:
                continue
            if dx == dy:
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    if variant == "a":
        return (concordant - discordant) / n0
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0.0:
        raise ZeroVariance("tau-b is undefined when a ranking is constant")
    return (concordant - discordant) / denom


def pearson_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation; refuses constant inputs instead of dividing
    by zero."""
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)} values")
    n = len(x)
    if n < 2:
        raise TooShort(f"need at least 2 points, got {n}")
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    sxx = sum((a - mean_x) ** 2 for a in x)
    syy = sum((b - mean_y) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation is undefined for a constant sequence")
    sxy = sum((a - mean_x) * (b - mean_y) for a, b in zip(x, y))
    return sxy / math.sqrt(sxx * syy)
