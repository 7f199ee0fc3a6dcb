"""Run configuration, analysis orchestration, and table rendering.

``run`` executes the selected analyses over one merged corpus and a set
of prediction files, writing CSV tables (percentages, one decimal),
plot-data JSON (full precision) and, last, a manifest with a sha256 per
output. Identical inputs produce byte-identical output trees: nothing
written here may depend on wall clock, filesystem paths, or dict order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import chunking as chunking_mod
from .consistency import pairwise_consistency
from .corpus import (
    Corpus,
    PredictionSet,
    TaskGroup,
    load_corpus,
    load_predictions,
    merge_corpora,
)
from .errors import (
    ConfigError,
    DataError,
    NoSystems,
    PairSetMismatch,
    RaggedRows,
    TooFewSystems,
    ZeroVariance,
)
from .metrics import rate_breakdown
from .overlap import assign_bins, bin_rates, rouge2_precision
from .quantify import (
    CalibrationMethod,
    Level,
    cross_validate_calibration,
    error_rate,
    system_bias,
)
from .rank import error_counts, kendall_tau, pair_decisions, pearson_rho, ranking_confusion

ANALYSES = (
    "metrics",
    "consistency",
    "quantify",
    "calibrate",
    "rank",
    "rouge-bins",
    "chunking",
)

MANIFEST_NAME = "manifest.json"

_SLUG = re.compile(r"[^A-Za-z0-9._-]+")


def _slug(name: str) -> str:
    return _SLUG.sub("_", name)


def _pct(value: float | None) -> str:
    return "n/a" if value is None else f"{100.0 * value:.1f}"


def _rate_bias(rate: float | None, bias: float | None) -> str:
    """Render the standard 'rate (bias)' cell, e.g. '6.3 (-12.9)'."""
    if rate is None:
        return "n/a"
    if bias is None:
        return f"{100.0 * rate:.1f} (n/a)"
    return f"{100.0 * rate:.1f} ({100.0 * bias:.1f})"


def _mean_worst(mean: float | None, worst: float | None) -> str:
    if mean is None or worst is None:
        return "n/a"
    return f"{100.0 * mean:.1f} ({100.0 * worst:.1f})"


def render_table(
    rows: Sequence[Mapping[str, object]],
    fmt: str = "csv",
    columns: Sequence[str] | None = None,
) -> str:
    """Render mappings as CSV or a markdown pipe table.

    Column order comes from the explicit columns argument or from the
    first row. Every row must carry exactly those keys; silently dropping
    or inventing cells would misalign the table.
    """
    if columns is None:
        if not rows:
            raise RaggedRows("cannot infer columns from zero rows")
        columns = list(rows[0].keys())
    columns = list(columns)
    for i, row in enumerate(rows):
        if set(row.keys()) != set(columns):
            raise RaggedRows(
                f"row {i} keys {sorted(row.keys())} do not match columns {sorted(columns)}"
            )
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
        return buffer.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(columns) + " |"]
        lines.append("| " + " | ".join("---" for _ in columns) + " |")
        for row in rows:
            lines.append(
                "| " + " | ".join(_cell(row[c]).replace("|", "\\|") for c in columns) + " |"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _cell(value: object) -> str:
    if value is None:
        return "n/a"
    return str(value)


def _plot_json(figure_id: str, series: list[dict]) -> bytes:
    payload = {"figure_id": figure_id, "series": series}
    return (json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n").encode("utf-8")


@dataclass(frozen=True)
class RunConfig:
    """Everything one audit run needs, resolved and validated."""

    corpus_paths: tuple[Path, ...]
    prediction_paths: tuple[Path, ...]
    out_dir: Path
    threshold: float = 0.5
    alpha: float = 0.05
    chunk_limit: int = chunking_mod.DEFAULT_CHUNK_LIMIT
    strict_coverage: bool = False
    task_groups: Mapping[str, TaskGroup] = field(default_factory=dict)
    analyses: tuple[str, ...] = ANALYSES
    chunk_score_paths: Mapping[str, Path] = field(default_factory=dict)


def load_run_config(
    path: str | Path,
    out_dir: str | Path | None = None,
    threshold: float | None = None,
    alpha: float | None = None,
    chunk_limit: int | None = None,
    analyses: Sequence[str] | None = None,
) -> RunConfig:
    """Parse a config file, apply CLI overrides, and validate everything.

    Paths inside the config resolve relative to the config file; the
    out_dir override resolves relative to the working directory.
    """
    config_path = Path(path)
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    base = config_path.parent

    def _paths(key: str, required: bool) -> tuple[Path, ...]:
        value = raw.get(key, [])
        if required and (not isinstance(value, list) or not value):
            raise ConfigError(f"config key {key!r} must be a non-empty list of paths")
        if not isinstance(value, list):
            raise ConfigError(f"config key {key!r} must be a list of paths")
        resolved = []
        for item in value:
            if not isinstance(item, str):
                raise ConfigError(f"config key {key!r} holds a non-string path: {item!r}")
            p = base / item
            if not p.is_file():
                raise ConfigError(f"{key} path does not exist: {p}")
            resolved.append(p)
        return tuple(resolved)

    corpus_paths = _paths("corpora", required=True)
    prediction_paths = _paths("predictions", required=True)

    if threshold is None:
        threshold = raw.get("threshold", 0.5)
    if not isinstance(threshold, (int, float)) or not 0.0 <= float(threshold) <= 1.0:
        raise ConfigError(f"threshold must be in [0, 1], got {threshold!r}")
    if alpha is None:
        alpha = raw.get("alpha", 0.05)
    if not isinstance(alpha, (int, float)) or not 0.0 < float(alpha) < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha!r}")
    if chunk_limit is None:
        chunk_limit = raw.get("chunk_limit", chunking_mod.DEFAULT_CHUNK_LIMIT)
    if not isinstance(chunk_limit, int) or chunk_limit < 1:
        raise ConfigError(f"chunk_limit must be a positive integer, got {chunk_limit!r}")

    strict = raw.get("strict_coverage", False)
    if not isinstance(strict, bool):
        raise ConfigError(f"strict_coverage must be a boolean, got {strict!r}")

    groups_raw = raw.get("task_groups", {})
    if not isinstance(groups_raw, dict):
        raise ConfigError("task_groups must map dataset names to group names")
    task_groups = {}
    for dataset, group in groups_raw.items():
        try:
            task_groups[dataset] = TaskGroup.parse(group)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"task_groups[{dataset!r}]: {exc}") from exc

    if analyses is None:
        analyses = raw.get("analyses", list(ANALYSES))
    if not isinstance(analyses, (list, tuple)) or not analyses:
        raise ConfigError("analyses must be a non-empty list")
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise ConfigError(f"unknown analyses {unknown}; valid: {list(ANALYSES)}")
    # canonical execution order, independent of config order
    selected = tuple(a for a in ANALYSES if a in set(analyses))

    chunk_scores_raw = raw.get("chunk_scores", {})
    if not isinstance(chunk_scores_raw, dict):
        raise ConfigError("chunk_scores must map evaluator names to score files")
    chunk_score_paths = {}
    for evaluator, file_path in chunk_scores_raw.items():
        if not isinstance(file_path, str):
            raise ConfigError(f"chunk_scores[{evaluator!r}] must be a path string")
        p = base / file_path
        if not p.is_file():
            raise ConfigError(f"chunk_scores path does not exist: {p}")
        chunk_score_paths[evaluator] = p

    if out_dir is None:
        out_dir = base / raw.get("out_dir", "audit_out")
    return RunConfig(
        corpus_paths=corpus_paths,
        prediction_paths=prediction_paths,
        out_dir=Path(out_dir),
        threshold=float(threshold),
        alpha=float(alpha),
        chunk_limit=int(chunk_limit),
        strict_coverage=strict,
        task_groups=task_groups,
        analyses=selected,
        chunk_score_paths=chunk_score_paths,
    )


@dataclass
class _Context:
    config: RunConfig
    corpus: Corpus
    preds: tuple[PredictionSet, ...]


def _load_context(config: RunConfig) -> _Context:
    corpora = [
        load_corpus(p, task_groups=config.task_groups) for p in config.corpus_paths
    ]
    corpus = merge_corpora(corpora, name="audit")
    preds = []
    seen = set()
    for path in config.prediction_paths:
        p = load_predictions(
            path, corpus, threshold=config.threshold, strict=config.strict_coverage
        )
        if p.evaluator in seen:
            raise ConfigError(
                f"evaluator {p.evaluator!r} appears in more than one prediction file"
            )
        seen.add(p.evaluator)
        preds.append(p)
    for evaluator in config.chunk_score_paths:
        if evaluator not in seen:
            raise ConfigError(
                f"chunk_scores names evaluator {evaluator!r} with no prediction file"
            )
    return _Context(
        config=config, corpus=corpus, preds=tuple(sorted(preds, key=lambda p: p.evaluator))
    )


# ---- individual analyses; each adds rel-path -> bytes entries ----


def _run_metrics(ctx: _Context, outputs: dict[str, bytes]) -> None:
    for dataset in ctx.corpus.datasets:
        sub = ctx.corpus.for_dataset(dataset)
        rows = []
        tpr_series, tnr_series, bacc_series = [], [], []
        names = []
        for p in ctx.preds:
            scored = [r for r in sub if r.claim_id in p.scores]
            bd = rate_breakdown(
                [r.label for r in scored],
                [p.predicted_label(r.claim_id) for r in scored],
            )
            rows.append(
                {
                    "evaluator": p.evaluator,
                    "tpr": _pct(bd.tpr),
                    "tnr": _pct(bd.tnr),
                    "fpr": _pct(bd.fpr),
                    "fnr": _pct(bd.fnr),
                    "bacc": _pct(bd.bacc),
                    "support_pos": bd.support_pos,
                    "support_neg": bd.support_neg,
                    "scored": len(scored),
                }
            )
            names.append(p.evaluator)
            tpr_series.append(bd.tpr)
            tnr_series.append(bd.tnr)
            bacc_series.append(bd.bacc)
        slug = _slug(dataset)
        outputs[f"metrics/{slug}.csv"] = render_table(rows).encode("utf-8")
        outputs[f"metrics/{slug}.plot.json"] = _plot_json(
            f"metrics__{dataset}",
            [
                {"name": "tpr", "x": names, "y": tpr_series},
                {"name": "tnr", "x": names, "y": tnr_series},
                {"name": "bacc", "x": names, "y": bacc_series},
            ],
        )


def _run_consistency(ctx: _Context, outputs: dict[str, bytes]) -> None:
    for dataset in ctx.corpus.datasets:
        rows = []
        series = []
        for target_label in (0, 1):
            matrix = pairwise_consistency(ctx.preds, ctx.corpus, target_label, dataset)
            n = len(matrix.evaluators)
            for i in range(n):
                for j in range(i + 1, n):
                    value = matrix.values[i][j]
                    rows.append(
                        {
                            "target_label": target_label,
                            "evaluator_a": matrix.evaluators[i],
                            "evaluator_b": matrix.evaluators[j],
                            "iou": "n/a" if value is None else f"{value:.2f}",
                        }
                    )
            for i in range(n):
                series.append(
                    {
                        "name": f"label{target_label}:{matrix.evaluators[i]}",
                        "x": list(matrix.evaluators),
                        "y": list(matrix.values[i]),
                    }
                )
        slug = _slug(dataset)
        columns = ["target_label", "evaluator_a", "evaluator_b", "iou"]
        outputs[f"consistency/{slug}.csv"] = render_table(rows, columns=columns).encode("utf-8")
        outputs[f"consistency/{slug}.plot.json"] = _plot_json(
            f"consistency__{dataset}", series
        )


def _run_quantify(ctx: _Context, outputs: dict[str, bytes]) -> None:
    for dataset in ctx.corpus.datasets:
        sub = ctx.corpus.for_dataset(dataset)
        has_responses = any(r.response_id is not None for r in sub)
        levels = [Level.CLAIM] + ([Level.RESPONSE] if has_responses else [])
        rows = []
        notes: dict[str, object] = {}
        bias_series = []
        for level in levels:
            try:
                reports = {
                    p.evaluator: system_bias(sub, p, level) for p in ctx.preds
                }
            except NoSystems:
                # no system metadata: report the dataset as a single slice
                labels = [r.label for r in sub]
                labeled = error_rate(labels)
                row = {"level": level.value, "system": "ALL", "labeled": _pct(labeled)}
                for p in ctx.preds:
                    scored = [r for r in sub if r.claim_id in p.scores]
                    if scored:
                        predicted = error_rate(
                            [p.predicted_label(r.claim_id) for r in scored]
                        )
                        row[p.evaluator] = _rate_bias(predicted, predicted - labeled)
                    else:
                        row[p.evaluator] = "n/a"
                rows.append(row)
                continue
            first = reports[ctx.preds[0].evaluator]
            for index, bias_row in enumerate(first.rows):
                row = {
                    "level": level.value,
                    "system": bias_row.system,
                    "labeled": _pct(bias_row.labeled_rate),
                }
                for p in ctx.preds:
                    r = reports[p.evaluator].rows[index]
                    row[p.evaluator] = _rate_bias(r.predicted_rate, r.bias)
                rows.append(row)
            headroom_row = {
                "level": level.value,
                "system": "HEADROOM",
                "labeled": _pct(first.headroom.labeled_min),
            }
            for p in ctx.preds:
                h = reports[p.evaluator].headroom
                headroom_row[p.evaluator] = _rate_bias(h.predicted_min, h.bias)
            rows.append(headroom_row)
            notes[level.value] = {
                "excluded_missing_system": first.excluded_missing_system,
                "excluded_ungrouped": first.excluded_ungrouped,
                "excluded_unscored_responses": {
                    p.evaluator: reports[p.evaluator].excluded_unscored_responses
                    for p in ctx.preds
                },
            }
            if level is Level.CLAIM:
                for p in ctx.preds:
                    report = reports[p.evaluator]
                    bias_series.append(
                        {
                            "name": p.evaluator,
                            "x": [r.system for r in report.rows],
                            "y": [r.bias for r in report.rows],
                        }
                    )
        slug = _slug(dataset)
        columns = ["level", "system", "labeled"] + [p.evaluator for p in ctx.preds]
        outputs[f"quantify/{slug}.csv"] = render_table(rows, columns=columns).encode("utf-8")
        outputs[f"quantify/{slug}.notes.json"] = (
            json.dumps(notes, ensure_ascii=False, sort_keys=True) + "\n"
        ).encode("utf-8")
        if bias_series:
            outputs[f"quantify/{slug}.plot.json"] = _plot_json(
                f"quantify__{dataset}", bias_series
            )


def _run_calibrate(ctx: _Context, outputs: dict[str, bytes]) -> None:
    methods = (
        CalibrationMethod.ADJUSTED_COUNTS,
        CalibrationMethod.TUNE_ZERO_BIAS,
        CalibrationMethod.TUNE_MAX_BACC,
    )
    columns = ["evaluator", "calibration_system", "no_adjustment"] + [
        m.value for m in methods
    ]
    for dataset in ctx.corpus.datasets:
        sub = ctx.corpus.for_dataset(dataset)
        rows: list[dict] = []
        n_systems = len({r.system for r in sub if r.system is not None})
        for p in ctx.preds if n_systems >= 2 else ():
            try:
                runs = {m: cross_validate_calibration(sub, p, m) for m in methods}
            except TooFewSystems:
                continue
            bias_report = system_bias(sub, p, Level.CLAIM)
            raw_bias = {
                r.system: r.bias for r in bias_report.rows if r.bias is not None
            }
            systems = sorted(raw_bias)
            fold_cells: dict[str, dict[str, str]] = {}
            no_adjustment_means, no_adjustment_worsts = [], []
            for cal_system in systems:
                held_out = [abs(raw_bias[s]) for s in systems if s != cal_system]
                cells = {}
                if held_out:
                    mean = sum(held_out) / len(held_out)
                    worst = max(held_out)
                    cells["no_adjustment"] = _mean_worst(mean, worst)
                    no_adjustment_means.append(mean)
                    no_adjustment_worsts.append(worst)
                else:
                    cells["no_adjustment"] = "n/a"
                fold_cells[cal_system] = cells
            for method in methods:
                run = runs[method]
                by_system = {f.calibration_system: f for f in run.folds}
                for cal_system in systems:
                    fold = by_system.get(cal_system)
                    fold_cells[cal_system][method.value] = (
                        "n/a"
                        if fold is None
                        else _mean_worst(fold.mean_abs_bias, fold.worst_abs_bias)
                    )
            for cal_system in systems:
                rows.append(
                    {
                        "evaluator": p.evaluator,
                        "calibration_system": cal_system,
                        **fold_cells[cal_system],
                    }
                )
            cv_row = {
                "evaluator": p.evaluator,
                "calibration_system": "Cross-Validated",
                "no_adjustment": _mean_worst(
                    sum(no_adjustment_means) / len(no_adjustment_means)
                    if no_adjustment_means
                    else None,
                    sum(no_adjustment_worsts) / len(no_adjustment_worsts)
                    if no_adjustment_worsts
                    else None,
                ),
            }
            for method in methods:
                run = runs[method]
                cv_row[method.value] = _mean_worst(
                    run.cv_mean_abs_bias, run.cv_worst_abs_bias
                )
            rows.append(cv_row)
        outputs[f"calibrate/{_slug(dataset)}.csv"] = render_table(
            rows, columns=columns
        ).encode("utf-8")


def _run_rank(ctx: _Context, outputs: dict[str, bytes]) -> None:
    alpha = ctx.config.alpha
    for dataset in ctx.corpus.datasets:
        sub = ctx.corpus.for_dataset(dataset)
        has_responses = any(r.response_id is not None for r in sub)
        levels = [Level.CLAIM] + ([Level.RESPONSE] if has_responses else [])
        rows = []
        for level in levels:
            try:
                gold = pair_decisions(sub, None, alpha=alpha, level=level)
            except TooFewSystems:
                continue
            gold_counts = error_counts(sub, None, level)
            systems = sorted(gold_counts)
            labeled_rates = [gold_counts[s][0] / gold_counts[s][1] for s in systems]
            for decision in gold:
                rows.append(
                    {
                        "level": level.value,
                        "evaluator": "HUMAN",
                        "quantity": f"direction[{decision.system_a} vs {decision.system_b}]",
                        "value": decision.direction.value,
                    }
                )
            for p in ctx.preds:
                predicted = pair_decisions(sub, p, alpha=alpha, level=level)
                for decision in predicted:
                    rows.append(
                        {
                            "level": level.value,
                            "evaluator": p.evaluator,
                            "quantity": f"direction[{decision.system_a} vs {decision.system_b}]",
                            "value": decision.direction.value,
                        }
                    )
                try:
                    confusion = ranking_confusion(gold, predicted)
                except PairSetMismatch as exc:
                    rows.append(
                        {
                            "level": level.value,
                            "evaluator": p.evaluator,
                            "quantity": "error",
                            "value": str(exc),
                        }
                    )
                    continue
                direction_names = ("Lower", "Indistinguishable", "Higher")
                for gi, gname in enumerate(direction_names):
                    for pi, pname in enumerate(direction_names):
                        rows.append(
                            {
                                "level": level.value,
                                "evaluator": p.evaluator,
                                "quantity": f"count[{gname}->{pname}]",
                                "value": confusion.cells[gi][pi],
                            }
                        )
                rows.append(
                    {
                        "level": level.value,
                        "evaluator": p.evaluator,
                        "quantity": "pct_err",
                        "value": f"{confusion.pct_err:.1f}",
                    }
                )
                rows.append(
                    {
                        "level": level.value,
                        "evaluator": p.evaluator,
                        "quantity": "pct_major_err",
                        "value": f"{confusion.pct_major_err:.1f}",
                    }
                )
                pred_counts = error_counts(sub, p, level)
                if sorted(pred_counts) == systems:
                    predicted_rates = [
                        pred_counts[s][0] / pred_counts[s][1] for s in systems
                    ]
                    tau = kendall_tau(labeled_rates, predicted_rates)
                    rows.append(
                        {
                            "level": level.value,
                            "evaluator": p.evaluator,
                            "quantity": "kendall_tau",
                            "value": f"{tau:.4f}",
                        }
                    )
                    try:
                        rho = pearson_rho(labeled_rates, predicted_rates)
                        rho_cell = f"{rho:.4f}"
                    except ZeroVariance:
                        rho_cell = "n/a"
                    rows.append(
                        {
                            "level": level.value,
                            "evaluator": p.evaluator,
                            "quantity": "pearson_rho",
                            "value": rho_cell,
                        }
                    )
        slug = _slug(dataset)
        columns = ["level", "evaluator", "quantity", "value"]
        outputs[f"rank/{slug}.csv"] = render_table(rows, columns=columns).encode("utf-8")
        outputs[f"rank/{slug}.md"] = render_table(
            rows, fmt="markdown", columns=columns
        ).encode("utf-8")


def _run_rouge_bins(ctx: _Context, outputs: dict[str, bytes]) -> None:
    values: dict[str, float] = {}
    degenerate_ids: set[str] = set()
    for record in ctx.corpus:
        result = rouge2_precision(record.claim, record.document)
        values[record.claim_id] = result.value
        if result.degenerate:
            degenerate_ids.add(record.claim_id)
    assignments = assign_bins(ctx.corpus, values, bins=5)
    for assignment in assignments:
        group = assignment.task_group
        n_bins = len(assignment.bin_edges) + 1
        rows = []
        series = []
        for p in ctx.preds:
            breakdowns = bin_rates(assignment, ctx.corpus, p)
            for index, bd in enumerate(breakdowns):
                edge = (
                    f"{assignment.bin_edges[index]:.4f}"
                    if index < len(assignment.bin_edges)
                    else "max"
                )
                rows.append(
                    {
                        "evaluator": p.evaluator,
                        "bin": index,
                        "upper_edge": edge,
                        "tpr": _pct(bd.tpr),
                        "tnr": _pct(bd.tnr),
                        "bacc": _pct(bd.bacc),
                        "support_pos": bd.support_pos,
                        "support_neg": bd.support_neg,
                    }
                )
            series.append(
                {
                    "name": f"{p.evaluator}:tpr",
                    "x": list(range(n_bins)),
                    "y": [bd.tpr for bd in breakdowns],
                }
            )
            series.append(
                {
                    "name": f"{p.evaluator}:tnr",
                    "x": list(range(n_bins)),
                    "y": [bd.tnr for bd in breakdowns],
                }
            )
        group_degenerate = sum(
            1 for cid in assignment.assignment if cid in degenerate_ids
        )
        slug = _slug(group.value)
        outputs[f"rouge-bins/{slug}.csv"] = render_table(rows).encode("utf-8")
        outputs[f"rouge-bins/{slug}.plot.json"] = _plot_json(
            f"rouge-bins__{group.value}", series
        )
        outputs[f"rouge-bins/{slug}.notes.json"] = (
            json.dumps(
                {
                    "task_group": group.value,
                    "bin_edges": list(assignment.bin_edges),
                    "claims": len(assignment.assignment),
                    "degenerate_claims": group_degenerate,
                },
                ensure_ascii=False,
                sort_keys=True,
            )
            + "\n"
        ).encode("utf-8")


def _run_chunking(ctx: _Context, outputs: dict[str, bytes]) -> None:
    limit = ctx.config.chunk_limit
    plans: dict[str, chunking_mod.ChunkPlan] = {}
    plan_cache: dict[str, chunking_mod.ChunkPlan] = {}
    applicable: dict[str, list] = {}
    for record in ctx.corpus:
        if chunking_mod.token_count(record.document) <= limit:
            continue
        plan = plan_cache.get(record.document)
        if plan is None:
            plan = chunking_mod.plan_chunks(record.document, limit)
            plan_cache[record.document] = plan
        plans[record.claim_id] = plan
        applicable.setdefault(record.dataset, []).append(record)

    r2diff_all: dict[str, float] = {}
    for dataset_records in applicable.values():
        for record in dataset_records:
            r2diff_all[record.claim_id] = chunking_mod.r2_diff(
                record.claim, record.document, plans[record.claim_id]
            )

    chunked_sets: dict[str, PredictionSet] = {}
    for evaluator, path in sorted(ctx.config.chunk_score_paths.items()):
        chunked_sets[evaluator] = chunking_mod.load_chunk_scores(
            path, ctx.corpus, threshold=ctx.config.threshold
        )
    flip_results: dict[str, dict[str, chunking_mod.DatasetFlips]] = {}
    for evaluator, chunked in chunked_sets.items():
        full = next(p for p in ctx.preds if p.evaluator == evaluator)
        per_dataset = chunking_mod.flip_analysis(full, chunked, r2diff_all, ctx.corpus)
        flip_results[evaluator] = {f.dataset: f for f in per_dataset}

    columns = [
        "evaluator",
        "documents",
        "applicable_claims",
        "oversized_sentences",
        "mean_r2diff",
        "frac_r2diff_positive",
        "pos_support",
        "pos_rate_1_to_0",
        "pos_rate_0_to_1",
        "zero_support",
        "zero_rate_1_to_0",
        "zero_rate_0_to_1",
        "ppr_full",
        "ppr_chunked",
    ]
    for dataset in ctx.corpus.datasets:
        sub = ctx.corpus.for_dataset(dataset)
        records = applicable.get(dataset, [])
        diffs = [r2diff_all[r.claim_id] for r in records]
        oversized = sum(plans[r.claim_id].oversized_sentence_count for r in records)
        base = {
            "evaluator": "-",
            "documents": len(sub),
            "applicable_claims": len(records),
            "oversized_sentences": oversized,
            "mean_r2diff": f"{sum(diffs) / len(diffs):.4f}" if diffs else "n/a",
            "frac_r2diff_positive": _pct(
                sum(1 for d in diffs if d > 0) / len(diffs) if diffs else None
            ),
        }
        rows = [{**base, **{c: "n/a" for c in columns if c not in base}}]
        for evaluator in sorted(flip_results):
            flips = flip_results[evaluator].get(dataset)
            if flips is None:
                continue
            rows.append(
                {
                    **base,
                    "evaluator": evaluator,
                    "pos_support": flips.positive_r2diff.support,
                    "pos_rate_1_to_0": _pct(flips.positive_r2diff.rate_1_to_0),
                    "pos_rate_0_to_1": _pct(flips.positive_r2diff.rate_0_to_1),
                    "zero_support": flips.zero_r2diff.support,
                    "zero_rate_1_to_0": _pct(flips.zero_r2diff.rate_1_to_0),
                    "zero_rate_0_to_1": _pct(flips.zero_r2diff.rate_0_to_1),
                    "ppr_full": _pct(flips.ppr_full),
                    "ppr_chunked": _pct(flips.ppr_chunked),
                }
            )
        slug = _slug(dataset)
        outputs[f"chunking/{slug}.csv"] = render_table(rows, columns=columns).encode("utf-8")
        if records:
            request_lines = []
            for record in records:
                plan = plans[record.claim_id]
                for index, chunk in enumerate(plan.chunks):
                    request_lines.append(
                        json.dumps(
                            {
                                "schema_version": 1,
                                "request_id": f"{record.claim_id}#{index}",
                                "claim": record.claim,
                                "chunk_text": chunk,
                            },
                            ensure_ascii=False,
                            sort_keys=True,
                        )
                    )
            outputs[f"chunking/{slug}.requests.jsonl"] = (
                "\n".join(request_lines) + "\n"
            ).encode("utf-8")


_RUNNERS = {
    "metrics": _run_metrics,
    "consistency": _run_consistency,
    "quantify": _run_quantify,
    "calibrate": _run_calibrate,
    "rank": _run_rank,
    "rouge-bins": _run_rouge_bins,
    "chunking": _run_chunking,
}


def run(config: RunConfig) -> dict:
    """Execute the configured analyses and write the output tree.

    Returns the manifest that was written. Output bytes are assembled
    fully in memory first so a failing analysis leaves no partial tree.
    """
    ctx = _load_context(config)
    outputs: dict[str, bytes] = {}
    for analysis in config.analyses:
        runner = _RUNNERS[analysis]
        try:
            runner(ctx, outputs)
        except DataError as exc:
            exc.analysis = analysis
            raise
    manifest = {
        "schema_version": 1,
        "outputs": [
            {
                "path": path,
                "sha256": hashlib.sha256(outputs[path]).hexdigest(),
                "bytes": len(outputs[path]),
            }
            for path in sorted(outputs)
        ],
    }
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in sorted(outputs):
        target = out_dir / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(outputs[path])
    manifest_bytes = (
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    ).encode("utf-8")
    (out_dir / MANIFEST_NAME).write_bytes(manifest_bytes)
    return manifest
