"""Error-rate quantification: how much unattributable content a system
produces, according to humans versus according to an automatic evaluator.

The quantified class throughout is the unattributable one (label 0), so a
"rate" here is the fraction of zeros. Bias is always predicted minus
labeled: negative bias means the evaluator understates the error rate.

Three bias-correction routes are provided:

* adjusted counts: invert a known confusion profile, per Forman's
  classic prevalence-estimation method;
* threshold tuning for zero bias: pick the cut where predicted and
  labeled rates match on a calibration system;
* threshold tuning for max balanced accuracy.

``cross_validate_calibration`` fits each route on one system at a time
and measures the residual bias on every other system, which is the only
honest way to tell whether a correction transfers.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, PredictionSet, ResponseGroup, response_groups
from .errors import (
    DataError,
    DegenerateClassifier,
    EmptyCalibration,
    EmptySlice,
    LengthMismatch,
    NoResponses,
    NoSystems,
    OneClassOnly,
    TooFewSystems,
)


class Level(Enum):
    CLAIM = "claim"
    RESPONSE = "response"


class TuneObjective(Enum):
    ZERO_BIAS = "zero_bias"
    MAX_BACC = "max_bacc"


class CalibrationMethod(Enum):
    ADJUSTED_COUNTS = "adjusted_counts"
    TUNE_ZERO_BIAS = "tune_zero_bias"
    TUNE_MAX_BACC = "tune_max_bacc"


def error_rate(labels: Iterable[int]) -> float:
    """Fraction of 0-labels in a non-empty sequence."""
    labels = list(labels)
    if not labels:
        raise EmptySlice("cannot take an error rate over zero examples")
    return sum(1 for v in labels if v == 0) / len(labels)


@dataclass(frozen=True)
class ResponseOutcome:
    """Strict response-level aggregate of one response's member claims.

    label/predicted are 1 only when every member claim is 1; a single
    unsupported claim makes the whole response unsupported. predicted is
    None when any member claim lacks a score, because a conjunction over
    partial evidence is undefined.
    """

    group: ResponseGroup
    label: int
    predicted: int | None


def response_outcomes(
    corpus: Corpus, preds: PredictionSet | None = None
) -> tuple[tuple[ResponseOutcome, ...], int]:
    """Aggregate claims to responses; returns (outcomes, ungrouped_count)."""
    grouping = response_groups(corpus)
    outcomes = []
    for group in grouping.groups:
        members = [corpus.by_id[cid] for cid in group.claim_ids]
        label = 1 if all(m.label == 1 for m in members) else 0
        predicted: int | None = None
        if preds is not None and all(cid in preds.scores for cid in group.claim_ids):
            predicted = 1 if all(
                preds.predicted_label(cid) == 1 for cid in group.claim_ids
            ) else 0
        outcomes.append(ResponseOutcome(group=group, label=label, predicted=predicted))
    return tuple(outcomes), grouping.excluded_count


@dataclass(frozen=True)
class BiasRow:
    system: str
    labeled_rate: float
    predicted_rate: float | None
    bias: float | None
    labeled_support: int
    predicted_support: int


@dataclass(frozen=True)
class Headroom:
    """Column-wise minima across systems; the best any system achieves."""

    labeled_min: float
    predicted_min: float | None
    bias: float | None


@dataclass(frozen=True)
class BiasReport:
    level: Level
    evaluator: str
    rows: tuple[BiasRow, ...]
    headroom: Headroom
    excluded_missing_system: int = 0
    excluded_ungrouped: int = 0
    excluded_unscored_responses: int = 0


def _bias_row(
    system: str, labels: Sequence[int], predictions: Sequence[int]
) -> BiasRow:
    labeled = error_rate(labels)
    predicted = error_rate(predictions) if predictions else None
    return BiasRow(
        system=system,
        labeled_rate=labeled,
        predicted_rate=predicted,
        bias=None if predicted is None else predicted - labeled,
        labeled_support=len(labels),
        predicted_support=len(predictions),
    )


def _headroom(rows: Sequence[BiasRow]) -> Headroom:
    labeled_min = min(r.labeled_rate for r in rows)
    predicted = [r.predicted_rate for r in rows if r.predicted_rate is not None]
    predicted_min = min(predicted) if predicted else None
    bias = None if predicted_min is None else predicted_min - labeled_min
    return Headroom(labeled_min=labeled_min, predicted_min=predicted_min, bias=bias)


def system_bias(corpus: Corpus, preds: PredictionSet, level: Level) -> BiasReport:
    """Labeled vs predicted error rate per system, plus headroom.

    Claim level compares per-claim labels to thresholded scores. Response
    level first aggregates strictly (see ResponseOutcome); responses with
    unscored members are dropped from the predicted column and counted.
    Records without a system cannot be attributed and are counted too.
    """
    if level is Level.CLAIM:
        by_system: dict[str, list] = {}
        missing_system = 0
        for record in corpus:
            if record.system is None:
                missing_system += 1
                continue
            by_system.setdefault(record.system, []).append(record)
        if not by_system:
            raise NoSystems(f"no record in {corpus.name!r} carries a system")
        rows = []
        for system in sorted(by_system):
            records = by_system[system]
            labels = [r.label for r in records]
            predictions = [
                preds.predicted_label(r.claim_id)
                for r in records
                if r.claim_id in preds.scores
            ]
            rows.append(_bias_row(system, labels, predictions))
        return BiasReport(
            level=level,
            evaluator=preds.evaluator,
            rows=tuple(rows),
            headroom=_headroom(rows),
            excluded_missing_system=missing_system,
        )

    outcomes, ungrouped = response_outcomes(corpus, preds)
    if not outcomes:
        raise NoResponses(f"no record in {corpus.name!r} carries a response_id")
    by_system_out: dict[str, list[ResponseOutcome]] = {}
    for outcome in outcomes:
        by_system_out.setdefault(outcome.group.system, []).append(outcome)
    rows = []
    unscored = 0
    for system in sorted(by_system_out):
        outs = by_system_out[system]
        labels = [o.label for o in outs]
        predictions = [o.predicted for o in outs if o.predicted is not None]
        unscored += sum(1 for o in outs if o.predicted is None)
        rows.append(_bias_row(system, labels, predictions))
    return BiasReport(
        level=level,
        evaluator=preds.evaluator,
        rows=tuple(rows),
        headroom=_headroom(rows),
        excluded_ungrouped=ungrouped,
        excluded_unscored_responses=unscored,
    )


def adjusted_count(p0: float, recall0: float, fallout0: float) -> float:
    """Correct an observed predicted-0 rate for classifier error.

    recall0 is the chance the classifier says 0 on a true 0, fallout0 the
    chance it says 0 on a true 1. Solving
    p0 = recall0 * p + fallout0 * (1 - p) for the true prevalence p and
    clipping to [0, 1] gives the estimate. Equal recall and fallout carry
    no information about p.
    """
    if recall0 == fallout0:
        raise DegenerateClassifier(
            f"recall0 == fallout0 == {recall0}; the observed rate does not "
            "depend on the true prevalence"
        )
    estimate = (p0 - fallout0) / (recall0 - fallout0)
    return min(1.0, max(0.0, estimate))


def fit_adjusted_counts(
    labels: Sequence[int], predictions: Sequence[int]
) -> tuple[float, float]:
    """Estimate (recall0, fallout0) from labeled calibration examples."""
    if len(labels) != len(predictions):
        raise LengthMismatch(f"{len(labels)} labels vs {len(predictions)} predictions")
    zeros = [p for l, p in zip(labels, predictions) if l == 0]
    ones = [p for l, p in zip(labels, predictions) if l == 1]
    if not zeros:
        raise DegenerateClassifier(
            "calibration slice has no 0-labels; recall0 is undefined"
        )
    if not ones:
        raise DegenerateClassifier(
            "calibration slice has no 1-labels; fallout0 is undefined"
        )
    recall0 = sum(1 for p in zeros if p == 0) / len(zeros)
    fallout0 = sum(1 for p in ones if p == 0) / len(ones)
    return recall0, fallout0


def candidate_thresholds(scores: Iterable[float]) -> list[float]:
    """Midpoints between consecutive distinct scores, plus 0 and 1.

    With >=-binarization this grid realizes every achievable split of the
    given scores, including all-positive (at 0).
    """
    distinct = sorted(set(scores))
    candidates = {0.0, 1.0}
    for lo, hi in zip(distinct, distinct[1:]):
        candidates.add((lo + hi) / 2.0)
    return sorted(candidates)


def tune_threshold(
    scores: Mapping[str, float],
    labels: Mapping[str, int],
    objective: TuneObjective,
) -> float:
    """Pick a decision threshold on a labeled calibration set.

    ZERO_BIAS minimizes |predicted error rate - labeled error rate|,
    breaking ties by higher balanced accuracy and then lower threshold.
    MAX_BACC maximizes balanced accuracy, breaking ties by lower absolute
    bias and then lower threshold; it needs both classes present.
    """
    if not scores:
        raise EmptyCalibration("no calibration examples")
    if set(scores) != set(labels):
        raise LengthMismatch("scores and labels must be keyed by the same claim_ids")

    items = sorted(zip(scores.values(), (labels[k] for k in scores)))
    ordered_scores = [s for s, _ in items]
    n = len(items)
    ones_prefix = [0] * (n + 1)
    for i, (_, label) in enumerate(items):
        ones_prefix[i + 1] = ones_prefix[i] + (1 if label == 1 else 0)
    total_ones = ones_prefix[n]
    total_zeros = n - total_ones
    labeled_rate = total_zeros / n

    if objective is TuneObjective.MAX_BACC and (total_ones == 0 or total_zeros == 0):
        raise OneClassOnly(
            "balanced accuracy cannot be tuned on a one-class calibration set"
        )

    best: tuple | None = None
    best_threshold = 0.0
    for t in candidate_thresholds(ordered_scores):
        below = bisect_left(ordered_scores, t)  # predicted 0
        fn = ones_prefix[below]
        tn = below - fn
        predicted_rate = below / n
        abs_bias = abs(predicted_rate - labeled_rate)
        if total_ones and total_zeros:
            bacc = ((total_ones - fn) / total_ones + tn / total_zeros) / 2.0
        else:
            bacc = 0.0
        if objective is TuneObjective.ZERO_BIAS:
            key = (abs_bias, -bacc, t)
        else:
            key = (-bacc, abs_bias, t)
        if best is None or key < best:
            best = key
            best_threshold = t
    return best_threshold


@dataclass(frozen=True)
class CalibrationResult:
    """One cross-validation fold: fitted on calibration_system, applied
    to every other system."""

    method: CalibrationMethod
    calibration_system: str
    fitted: Mapping[str, float]
    holdout_bias: Mapping[str, float]
    mean_abs_bias: float
    worst_abs_bias: float


@dataclass(frozen=True)
class CalibrationRun:
    method: CalibrationMethod
    folds: tuple[CalibrationResult, ...]
    fold_errors: Mapping[str, str]
    cv_mean_abs_bias: float | None
    cv_worst_abs_bias: float | None


def _predicted_zero_rate(scores: Sequence[float], threshold: float) -> float:
    return sum(1 for s in scores if s < threshold) / len(scores)


def cross_validate_calibration(
    corpus: Corpus,
    preds: PredictionSet,
    method: CalibrationMethod,
) -> CalibrationRun:
    """Leave-one-system-in calibration at the claim level.

    Each system takes a turn as the calibration set; the fitted correction
    is scored by its absolute bias on every held-out system. A fold whose
    calibration slice cannot support the method (one class only, or a
    degenerate confusion profile) is recorded as a fold error instead of
    aborting the run. The run-level summary averages the per-fold mean and
    worst absolute biases over the folds that succeeded.
    """
    by_system: dict[str, list] = {}
    for record in corpus:
        if record.system is None or record.claim_id not in preds.scores:
            continue
        by_system.setdefault(record.system, []).append(record)
    systems = sorted(by_system)
    if len(systems) < 2:
        raise TooFewSystems(
            f"cross-validation needs at least 2 systems, found {len(systems)}"
        )

    folds: list[CalibrationResult] = []
    fold_errors: dict[str, str] = {}
    for cal_system in systems:
        cal_records = by_system[cal_system]
        try:
            if method is CalibrationMethod.ADJUSTED_COUNTS:
                cal_labels = [r.label for r in cal_records]
                cal_preds = [preds.predicted_label(r.claim_id) for r in cal_records]
                recall0, fallout0 = fit_adjusted_counts(cal_labels, cal_preds)
                fitted = {"recall0": recall0, "fallout0": fallout0}

                def estimate(records):
                    p0 = _predicted_zero_rate(
                        [preds.scores[r.claim_id] for r in records], preds.threshold
                    )
                    return adjusted_count(p0, recall0, fallout0)
            else:
                objective = (
                    TuneObjective.ZERO_BIAS
                    if method is CalibrationMethod.TUNE_ZERO_BIAS
                    else TuneObjective.MAX_BACC
                )
                tuned = tune_threshold(
                    {r.claim_id: preds.scores[r.claim_id] for r in cal_records},
                    {r.claim_id: r.label for r in cal_records},
                    objective,
                )
                fitted = {"threshold": tuned}

                def estimate(records, _t=tuned):
                    return _predicted_zero_rate(
                        [preds.scores[r.claim_id] for r in records], _t
                    )

            holdout_bias = {}
            for holdout in systems:
                if holdout == cal_system:
                    continue
                records = by_system[holdout]
                labeled = error_rate([r.label for r in records])
                holdout_bias[holdout] = estimate(records) - labeled
        except DataError as exc:
            fold_errors[cal_system] = str(exc)
            continue
        abs_biases = [abs(b) for b in holdout_bias.values()]
        folds.append(
            CalibrationResult(
                method=method,
                calibration_system=cal_system,
                fitted=fitted,
                holdout_bias=holdout_bias,
                mean_abs_bias=sum(abs_biases) / len(abs_biases),
                worst_abs_bias=max(abs_biases),
            )
        )
    if folds:
        cv_mean = sum(f.mean_abs_bias for f in folds) / len(folds)
        cv_worst = sum(f.worst_abs_bias for f in folds) / len(folds)
    else:
        cv_mean = cv_worst = None
    return CalibrationRun(
        method=method,
        folds=tuple(folds),
        fold_errors=fold_errors,
        cv_mean_abs_bias=cv_mean,
        cv_worst_abs_bias=cv_worst,
    )
