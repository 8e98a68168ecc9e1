"""Exceptional model mining for soft binary classifiers.

Finds conjunctive subgroups on which a classifier's ranking performance
(average ranking loss, ROC AUC, linearly interpolated PR AUC) deviates
from the whole dataset.
"""

from subperf.dataset import (
    Attribute,
    Cover,
    DataError,
    Dataset,
    Selector,
    cover,
    extract,
    generate_selectors,
    load_csv,
)
from subperf.metrics import (
    LabeledScoreSet,
    UndefinedMeasureError,
    arl,
    class_balance,
    pen,
    pr_auc,
    roc_auc,
    weight,
)
from subperf.scoring import Measure, ScoredPattern, ScoringSpec
from subperf.search import ResultSet, SearchConfig, mine, mine_gen_aware
from subperf.stats import SignificanceConfig, by_correct, significance_filter

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "Cover",
    "DataError",
    "Dataset",
    "LabeledScoreSet",
    "Measure",
    "ResultSet",
    "ScoredPattern",
    "ScoringSpec",
    "SearchConfig",
    "Selector",
    "SignificanceConfig",
    "UndefinedMeasureError",
    "arl",
    "by_correct",
    "class_balance",
    "cover",
    "extract",
    "generate_selectors",
    "load_csv",
    "mine",
    "mine_gen_aware",
    "pen",
    "pr_auc",
    "roc_auc",
    "significance_filter",
    "weight",
]
