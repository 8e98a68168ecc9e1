"""Rank-based performance kernels on (label, score) multisets.

Every measure here depends on the scores only through their order, so
callers may pass dense ranks instead of raw scores and get identical
results. All curves use strict ``score > threshold`` counting with the
unique observed scores plus ``-inf`` as thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class UndefinedMeasureError(ValueError):
    """A measure was requested on a multiset lacking a required class."""


@dataclass(frozen=True)
class LabeledScoreSet:
    """Parallel label/score arrays with cached class counts."""

    labels: np.ndarray
    scores: np.ndarray
    _groups: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        scores = np.asarray(self.scores)
        if scores.dtype.kind not in "iuf":
            scores = scores.astype(float)
        if labels.shape != scores.shape or labels.ndim != 1:
            raise ValueError("labels and scores must be 1-d arrays of equal length")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_pairs(cls, pairs) -> "LabeledScoreSet":
        pairs = list(pairs)
        if not pairs:
            return cls(np.zeros(0, dtype=np.int8), np.zeros(0))
        labels, scores = zip(*pairs)
        return cls(np.array(labels), np.array(scores, dtype=float))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def P(self) -> int:
        return int(np.count_nonzero(self.labels))

    @property
    def N(self) -> int:
        return len(self.labels) - self.P

    def groups(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive and negative counts per unique score, highest score first."""
        if self._groups is None:
            uniq, inv = np.unique(self.scores, return_inverse=True)
            g = len(uniq)
            pos = np.bincount(inv, weights=self.labels, minlength=g).astype(np.int64)
            neg = np.bincount(inv, minlength=g).astype(np.int64) - pos
            object.__setattr__(self, "_groups", (pos[::-1].copy(), neg[::-1].copy()))
        return self._groups


def _require_positive(s: LabeledScoreSet, what: str) -> None:
    if s.P == 0:
        raise UndefinedMeasureError(f"{what} needs at least one positive instance")


def pen(i: int, s: LabeledScoreSet) -> float:
    """Negatives ranked above positive ``i``; tied negatives count one half."""
    if s.labels[i] != 1:
        raise ValueError(f"instance {i} is not a positive")
    neg_scores = s.scores[s.labels == 0]
    above = np.count_nonzero(neg_scores > s.scores[i])
    tied = np.count_nonzero(neg_scores == s.scores[i])
    return above + 0.5 * tied


def _pen_numerators(s: LabeledScoreSet) -> tuple[np.ndarray, np.ndarray]:
    # twice the PEN of a positive in each score group, and group positive counts
    pos, neg = s.groups()
    fp_before = np.cumsum(neg) - neg
    return 2 * fp_before + neg, pos


def arl(s: LabeledScoreSet) -> float:
    """Average ranking loss: mean PEN over all positives."""
    _require_positive(s, "ARL")
    twice_pen, pos = _pen_numerators(s)
    return int(np.dot(twice_pen, pos)) / (2 * int(pos.sum()))


def max_pen(s: LabeledScoreSet) -> float:
    """Largest PEN of any positive (attained by the lowest-scored positive)."""
    _require_positive(s, "max PEN")
    twice_pen, pos = _pen_numerators(s)
    return int(twice_pen[pos > 0].max()) / 2


def roc_auc(s: LabeledScoreSet) -> float:
    """Trapezoidal ROC AUC; equals the pair-counting probability with ties worth 1/2."""
    pos, neg = s.groups()
    P, N = int(pos.sum()), int(neg.sum())
    if P == 0 or N == 0:
        raise UndefinedMeasureError("ROC AUC needs both classes")
    tp_before = np.cumsum(pos) - pos
    # twice the trapezoid area in integer units, exact
    area2 = int(np.dot(neg, 2 * tp_before + pos))
    return area2 / (2 * P * N)


def pr_auc(s: LabeledScoreSet) -> float:
    """Area under the linearly interpolated precision-recall curve.

    Precision at a threshold with no predicted positives is taken as 1.
    """
    _require_positive(s, "PR AUC")
    pos, neg = s.groups()
    tp = np.concatenate(([0], np.cumsum(pos)))
    fp = np.concatenate(([0], np.cumsum(neg)))
    denom = tp + fp
    prec = np.ones(len(tp))
    nz = denom > 0
    prec[nz] = tp[nz] / denom[nz]
    dtp = np.diff(tp)
    terms = dtp * (prec[1:] + prec[:-1]) / 2
    return math.fsum(terms.tolist()) / int(tp[-1])


def class_balance(s: LabeledScoreSet) -> float:
    return class_balance_counts(s.P, s.N)


def class_balance_counts(P: int, N: int) -> float:
    if P == 0 or N == 0:
        return 0.0
    return min(N / P, P / N)


def weight(s: LabeledScoreSet, alpha: float, beta: float) -> float:
    """Cover-size and class-balance weight ``(P+N)**alpha * cb**beta``."""
    return weight_counts(s.P, s.N, alpha, beta)


def weight_counts(P: int, N: int, alpha: float, beta: float) -> float:
    # Python's 0.0 ** 0 == 1.0, which is the convention we want
    return float(P + N) ** alpha * class_balance_counts(P, N) ** beta


# -- batched kernels for resampling ---------------------------------------

def roc_auc_rows(scores: np.ndarray, n_pos: int) -> np.ndarray:
    """ROC AUC per row of ``scores`` whose first ``n_pos`` columns are positives.

    Uses the Mann-Whitney identity with mid-ranks, computed in integer
    units so results match :func:`roc_auc` bit for bit.
    """
    from scipy.stats import rankdata

    n_neg = scores.shape[1] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMeasureError("ROC AUC needs both classes")
    twice_ranks = np.rint(2 * rankdata(scores, axis=1)).astype(np.int64)
    twice_u = twice_ranks[:, :n_pos].sum(axis=1) - n_pos * (n_pos + 1)
    return twice_u / (2 * n_pos * n_neg)


def arl_rows(scores: np.ndarray, n_pos: int) -> np.ndarray:
    """ARL per row; same column convention as :func:`roc_auc_rows`."""
    from scipy.stats import rankdata

    if n_pos == 0:
        raise UndefinedMeasureError("ARL needs at least one positive instance")
    n_neg = scores.shape[1] - n_pos
    if n_neg == 0:
        return np.zeros(scores.shape[0])
    twice_ranks = np.rint(2 * rankdata(scores, axis=1)).astype(np.int64)
    twice_u = twice_ranks[:, :n_pos].sum(axis=1) - n_pos * (n_pos + 1)
    # sum of PEN = P*N - U
    return (2 * n_pos * n_neg - twice_u) / (2 * n_pos)
