"""Meta-evaluation toolkit for automatic attribution (AutoAIS) evaluators.

The package audits binary attribution evaluators against human labels:
error-rate breakdowns, cross-evaluator consistency, quantification bias
and its correction, ranking reliability under significance testing,
surface-overlap bias, and the effect of document chunking.
"""

from .corpus import (
    ClaimRecord,
    Corpus,
    GroupingResult,
    PredictionSet,
    ResponseGroup,
    TaskGroup,
    load_corpus,
    load_predictions,
    merge_corpora,
    response_groups,
    save_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "ClaimRecord",
    "Corpus",
    "GroupingResult",
    "PredictionSet",
    "ResponseGroup",
    "TaskGroup",
    "load_corpus",
    "load_predictions",
    "merge_corpora",
    "response_groups",
    "save_corpus",
    "__version__",
]
