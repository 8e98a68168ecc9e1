"""Optimistic estimates for branch-and-bound pruning.

Each base bound caps the relative score any subset of a cover can reach;
the weight bound caps ``|I|**alpha * cb(I)**beta`` over subsets. Their
product (base estimate clamped at zero) bounds the weighted score of every
specialization.
"""

from __future__ import annotations

import numpy as np

from subperf.metrics import (
    LabeledScoreSet,
    UndefinedMeasureError,
    max_pen,
    pr_auc,
)


def oe_arl(s: LabeledScoreSet, arl_full: float) -> float:
    """Max PEN in the cover minus the reference ARL; tight."""
    return max_pen(s) - arl_full


def _extremes(s: LabeledScoreSet):
    pos = s.scores[s.labels == 1]
    neg = s.scores[s.labels == 0]
    return pos, neg


def lb_roc_auc(s: LabeledScoreSet) -> float:
    """Smallest ROC AUC reachable by any two-class subset: 1, 1/2 or 0."""
    pos, neg = _extremes(s)
    if len(pos) == 0 or len(neg) == 0:
        raise UndefinedMeasureError("ROC AUC needs both classes")
    lo_pos, hi_neg = pos.min(), neg.max()
    if lo_pos > hi_neg:
        return 1.0
    if lo_pos == hi_neg:
        return 0.5
    return 0.0


def ub_roc_auc(s: LabeledScoreSet) -> float:
    """Largest ROC AUC reachable by any two-class subset (mirror of the lower bound)."""
    pos, neg = _extremes(s)
    if len(pos) == 0 or len(neg) == 0:
        raise UndefinedMeasureError("ROC AUC needs both classes")
    hi_pos, lo_neg = pos.max(), neg.min()
    if hi_pos > lo_neg:
        return 1.0
    if hi_pos == lo_neg:
        return 0.5
    return 0.0


def worst_subset(s: LabeledScoreSet) -> LabeledScoreSet:
    """One lowest-scored positive together with every negative."""
    pos, neg = _extremes(s)
    if len(pos) == 0:
        raise UndefinedMeasureError("PR AUC needs at least one positive instance")
    labels = np.zeros(len(neg) + 1, dtype=np.int8)
    labels[0] = 1
    return LabeledScoreSet(labels, np.concatenate(([pos.min()], neg)))


def lb_pr_auc(s: LabeledScoreSet) -> float:
    return pr_auc(worst_subset(s))


def ub_weight_counts(P: int, N: int, alpha: float, beta: float) -> float:
    if alpha == 0 and beta == 0:
        return 1.0
    if 0 < alpha <= beta:
        return float(2 * min(P, N)) ** alpha
    # alpha > beta, or alpha == 0 < beta: cb**beta <= 1 only; not tight
    return float(P + N) ** alpha


def ub_weight(s: LabeledScoreSet, alpha: float, beta: float) -> float:
    return ub_weight_counts(s.P, s.N, alpha, beta)


def weight_bound_is_tight(alpha: float, beta: float) -> bool:
    return (alpha == 0 and beta == 0) or 0 < alpha <= beta


def optimistic_estimate(p, ds, spec) -> float:
    """Bound on the weighted score of every specialization of ``p`` (Selector objects)."""
    from subperf.scoring import Scorer

    return Scorer(ds, list(p), spec).optimistic_estimate(tuple(range(len(p))))
