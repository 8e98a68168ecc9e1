"""Interestingness functions built from the base measures.

Relative scores are oriented so that a positive value means the subgroup
performs worse than the reference data (higher ARL, lower AUC). Searching
for over-performance flips the sign.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from subperf import bounds
from subperf.dataset import Dataset, Selector, describe, make_cover
from subperf.metrics import (
    LabeledScoreSet,
    UndefinedMeasureError,
    arl,
    pr_auc,
    roc_auc,
    weight_counts,
)


class Measure(str, enum.Enum):
    ARL = "arl"
    ROC_AUC = "roc_auc"
    PR_AUC = "pr_auc"

    def defined(self, n_pos: int, n_neg: int) -> bool:
        if self is Measure.ROC_AUC:
            return n_pos > 0 and n_neg > 0
        return n_pos > 0


METRICS = {Measure.ARL: arl, Measure.ROC_AUC: roc_auc, Measure.PR_AUC: pr_auc}


def loss_sign(measure: Measure) -> int:
    """+1 when larger metric values mean worse ranking (ARL), else -1."""
    return 1 if measure is Measure.ARL else -1


@dataclass(frozen=True)
class ScoringSpec:
    measure: Measure = Measure.ROC_AUC
    alpha: float = 0.0
    beta: float = 0.0
    generalization_aware: bool = False
    overperformance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a finite non-negative number, got {v}")

    @property
    def unweighted(self) -> "ScoringSpec":
        return ScoringSpec(self.measure, 0.0, 0.0, False, self.overperformance)


@dataclass(frozen=True)
class ScoredPattern:
    pattern: tuple
    description: str
    interestingness: float
    size: int
    n_pos: int
    n_neg: int
    arl: float | None
    roc_auc: float | None
    pr_auc: float | None

    @property
    def ncr(self) -> float:
        return self.n_neg / self.size if self.size else float("nan")

    @property
    def sort_key(self):
        return (-self.interestingness, len(self.pattern), self.pattern)


def relative_value(measure: Measure, cover_value: float, reference_value: float,
                   overperformance: bool = False) -> float:
    rel = loss_sign(measure) * (cover_value - reference_value)
    return -rel if overperformance else rel


def relative_score(p: Sequence[Selector], ds: Dataset, measure: Measure,
                   overperformance: bool = False) -> float:
    """Relative score of a pattern given as Selector objects."""
    measure = Measure(measure)
    return Scorer(ds, list(p), ScoringSpec(measure, overperformance=overperformance)).relative(
        tuple(range(len(p)))
    )


def weighted_score(p: Sequence[Selector], ds: Dataset, spec: ScoringSpec) -> float:
    return Scorer(ds, list(p), spec).weighted(tuple(range(len(p))))


def gen_aware_score(p: Sequence[Selector], ds: Dataset, spec: ScoringSpec,
                    gen_scores: Mapping[frozenset, float]) -> float:
    """Weighted score minus the best weighted score of any strict generalization.

    ``gen_scores`` maps frozensets of selectors to weighted scores and must
    hold every strict subset of ``p`` (the empty set included).
    """
    key = frozenset(p)
    best = None
    for r in range(len(key)):
        for h in itertools.combinations(sorted(key, key=str), r):
            try:
                v = gen_scores[frozenset(h)]
            except KeyError:
                raise KeyError(f"generalization {[str(x) for x in h]} missing from cache") from None
            best = v if best is None else max(best, v)
    return weighted_score(p, ds, spec) - best


class Scorer:
    """Scores patterns (tuples of selector ids) against one reference dataset.

    Predictions are replaced by their dense ranks once; every measure is
    rank-based, so this changes no value and makes per-cover sorting cheap.
    Instances of this class are safe to share between threads.
    """

    def __init__(self, ds: Dataset, selectors: Sequence[Selector], spec: ScoringSpec):
        self.ds = ds
        self.selectors = list(selectors)
        self.spec = spec
        self.labels = ds.labels
        _, self.ranks = np.unique(ds.predictions, return_inverse=True)
        self.ranks = self.ranks.reshape(-1).astype(np.int64)
        self._masks: dict[int, np.ndarray] = {}
        self._weighted: dict[tuple, float] = {(): 0.0}
        full = LabeledScoreSet(self.labels, self.ranks)
        if not spec.measure.defined(full.P, full.N):
            raise UndefinedMeasureError(f"{spec.measure.value} is undefined on the reference data")
        self.reference = METRICS[spec.measure](full)

    # -- covers ----------------------------------------------------------
    def mask(self, sel_id: int) -> np.ndarray:
        m = self._masks.get(sel_id)
        if m is None:
            m = self.selectors[sel_id].mask(self.ds)
            self._masks[sel_id] = m
        return m

    def bits(self, pattern: tuple) -> np.ndarray:
        b = np.ones(self.ds.n, dtype=bool)
        for i in pattern:
            b &= self.mask(i)
        return b

    def cover(self, pattern: tuple):
        return make_cover(self.bits(pattern), self.labels)

    def score_set(self, bits: np.ndarray) -> LabeledScoreSet:
        return LabeledScoreSet(self.labels[bits], self.ranks[bits])

    # -- scores ----------------------------------------------------------
    def relative_of(self, s: LabeledScoreSet) -> float:
        if not self.spec.measure.defined(s.P, s.N):
            raise UndefinedMeasureError(f"{self.spec.measure.value} undefined on this cover")
        value = METRICS[self.spec.measure](s)
        return relative_value(self.spec.measure, value, self.reference, self.spec.overperformance)

    def weighted_of(self, s: LabeledScoreSet) -> float:
        rel = self.relative_of(s)
        if self.spec.alpha == 0 and self.spec.beta == 0:
            return rel
        return weight_counts(s.P, s.N, self.spec.alpha, self.spec.beta) * rel

    def relative(self, pattern: tuple) -> float:
        return self.relative_of(self.score_set(self.bits(pattern)))

    def weighted(self, pattern: tuple) -> float:
        """Weighted score, memoized; undefined covers count as 0."""
        v = self._weighted.get(pattern)
        if v is None:
            s = self.score_set(self.bits(pattern))
            v = self.weighted_of(s) if self.spec.measure.defined(s.P, s.N) else 0.0
            self._weighted[pattern] = v
        return v

    def remember(self, pattern: tuple, weighted: float) -> None:
        self._weighted[pattern] = weighted

    def best_generalization(self, pattern: tuple) -> float:
        best = 0.0  # the empty pattern
        for r in range(1, len(pattern)):
            for h in itertools.combinations(pattern, r):
                best = max(best, self.weighted(h))
        return best

    def final(self, pattern: tuple, weighted: float) -> float:
        if self.spec.generalization_aware and len(pattern) > 1:
            return weighted - self.best_generalization(pattern)
        return weighted

    # -- bounds ----------------------------------------------------------
    def base_estimate(self, s: LabeledScoreSet) -> float:
        m, over, ref = self.spec.measure, self.spec.overperformance, self.reference
        if m is Measure.ARL:
            # best over-performing subset: positives only, ARL 0
            return ref if over else bounds.oe_arl(s, ref)
        if m is Measure.ROC_AUC:
            return bounds.ub_roc_auc(s) - ref if over else ref - bounds.lb_roc_auc(s)
        # a single positive has PR AUC 1
        return 1.0 - ref if over else ref - bounds.lb_pr_auc(s)

    def optimistic_estimate_of(self, s: LabeledScoreSet) -> float:
        base = max(0.0, self.base_estimate(s))
        if base == 0.0:
            return 0.0
        return bounds.ub_weight_counts(s.P, s.N, self.spec.alpha, self.spec.beta) * base

    def optimistic_estimate(self, pattern: tuple) -> float:
        return self.optimistic_estimate_of(self.score_set(self.bits(pattern)))

    # -- reporting -------------------------------------------------------
    def diagnostics(self, pattern: tuple, interestingness: float) -> ScoredPattern:
        bits = self.bits(pattern)
        s = LabeledScoreSet(self.labels[bits], self.ds.predictions[bits])
        P, N = s.P, s.N
        return ScoredPattern(
            pattern=tuple(pattern),
            description=describe(pattern, self.selectors),
            interestingness=float(interestingness),
            size=P + N,
            n_pos=P,
            n_neg=N,
            arl=arl(s) if P else None,
            roc_auc=roc_auc(s) if P and N else None,
            pr_auc=pr_auc(s) if P else None,
        )
