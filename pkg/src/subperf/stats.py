"""Holdout significance testing of mined subgroups.

A subgroup's unweighted relative score on the validation split is compared
against random validation subsets with the same number of positives and
negatives. P-values are then corrected jointly.
"""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from subperf.dataset import Dataset, Selector, describe
from subperf.metrics import LabeledScoreSet, arl_rows, roc_auc_rows
from subperf.scoring import METRICS, Measure, ScoredPattern, Scorer, ScoringSpec, loss_sign
from subperf.search import ResultSet

log = logging.getLogger(__name__)

CORRECTIONS = ("by", "bonferroni", "none")


@dataclass(frozen=True)
class SignificanceConfig:
    n_resamples: int = 1000
    correction: str = "by"
    threshold: float = 0.05
    kprime: int = 100
    k: int = 5
    seed: int = 0
    plus_one: bool = False  # use (r+1)/(n+1) instead of r/n
    threads: int = 1

    def __post_init__(self):
        if self.n_resamples < 1:
            raise ValueError("n_resamples must be >= 1")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.k > self.kprime:
            raise ValueError("k must not exceed kprime")
        if self.correction not in CORRECTIONS:
            raise ValueError(f"correction must be one of {CORRECTIONS}")


def pattern_stream(seed: int, key: str) -> np.random.Generator:
    """Independent RNG stream for one pattern, stable across runs and threads."""
    return np.random.default_rng([seed, zlib.crc32(key.encode("utf-8"))])


def _draw_rows(pool: np.ndarray, k: int, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    if k == 0:
        return np.empty((n_draws, 0), dtype=pool.dtype)
    if 4 * k < len(pool):
        # small samples from a big pool: per-row choice avoids shuffling the pool
        return np.stack([rng.choice(pool, k, replace=False, shuffle=False) for _ in range(n_draws)])
    return rng.permuted(np.broadcast_to(pool, (n_draws, len(pool))), axis=1)[:, :k]


def stratified_draws(pos_idx: np.ndarray, neg_idx: np.ndarray, n_pos: int, n_neg: int,
                     n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Index matrix, one draw per row: ``n_pos`` positives then ``n_neg`` negatives."""
    if n_pos > len(pos_idx) or n_neg > len(neg_idx):
        raise ValueError("cannot stratify: cover exceeds the class counts of the pool")
    return np.concatenate([_draw_rows(pos_idx, n_pos, n_draws, rng),
                           _draw_rows(neg_idx, n_neg, n_draws, rng)], axis=1)


def _resampled_values(measure: Measure, labels, scores, draws, n_pos) -> np.ndarray:
    sub = scores[draws]
    if measure is Measure.ROC_AUC:
        return roc_auc_rows(sub, n_pos)
    if measure is Measure.ARL:
        return arl_rows(sub, n_pos)
    lab = labels[draws]
    return np.array([METRICS[measure](LabeledScoreSet(l, s)) for l, s in zip(lab, sub)])


def empirical_p_value(pattern: tuple, validation: Dataset, selectors: Sequence[Selector],
                      spec: ScoringSpec, cfg: SignificanceConfig) -> float | None:
    """Fraction of stratified random subsets scoring at least as high as the pattern.

    Returns None when the pattern is untestable on the validation split
    (its cover there violates the measure's definedness constraint).
    """
    scorer = Scorer(validation, selectors, spec.unweighted)
    bits = scorer.bits(pattern)
    s = scorer.score_set(bits)
    if not spec.measure.defined(s.P, s.N):
        return None
    observed = METRICS[spec.measure](s)
    labels, ranks = scorer.labels, scorer.ranks
    pos_idx = np.flatnonzero(labels == 1)
    neg_idx = np.flatnonzero(labels == 0)
    rng = pattern_stream(cfg.seed, describe(pattern, selectors))
    draws = stratified_draws(pos_idx, neg_idx, s.P, s.N, cfg.n_resamples, rng)
    values = _resampled_values(spec.measure, labels, ranks, draws, s.P)
    # compare raw metric values: same order as relative scores, no rounding
    sign = loss_sign(spec.measure) * (-1 if spec.overperformance else 1)
    hits = int(np.count_nonzero(sign * values >= sign * observed))
    if cfg.plus_one:
        return (hits + 1) / (cfg.n_resamples + 1)
    return hits / cfg.n_resamples


def by_correct(pvalues: Sequence[float]) -> list[float]:
    """Benjamini-Yekutieli step-up adjusted p-values, in input order."""
    p = np.asarray(pvalues, dtype=float)
    m = len(p)
    if m == 0:
        return []
    c_m = float(np.sum(1.0 / np.arange(1, m + 1)))
    order = np.argsort(p, kind="stable")
    scaled = p[order] * (m * c_m) / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adjusted, 1.0)
    return out.tolist()


def bonferroni_correct(pvalues: Sequence[float]) -> list[float]:
    m = len(pvalues)
    return [min(1.0, m * p) for p in pvalues]


def correct(pvalues: Sequence[float], method: str) -> list[float]:
    if method == "by":
        return by_correct(pvalues)
    if method == "bonferroni":
        return bonferroni_correct(pvalues)
    return [float(p) for p in pvalues]


@dataclass
class SignificanceReport:
    entries: list[dict]
    filtered: ResultSet
    n_significant: int
    n_candidates: int
    n_resamples: int

    @property
    def counts(self) -> tuple[int, int, int]:
        """(filtered, significant, candidates) as in a Filtered/Significant/Top-k' table."""
        return len(self.filtered), self.n_significant, self.n_candidates

    def to_json(self) -> dict:
        return {
            "n_resamples": self.n_resamples,
            "counts": {
                "filtered": len(self.filtered),
                "significant": self.n_significant,
                "candidates": self.n_candidates,
            },
            "patterns": self.entries,
        }


def significance_filter(results: ResultSet, validation: Dataset, selectors: Sequence[Selector],
                        spec: ScoringSpec, cfg: SignificanceConfig) -> SignificanceReport:
    """Keep the k best patterns whose corrected p-value passes the threshold."""
    candidates: list[ScoredPattern] = list(results)[: cfg.kprime]

    def one(r: ScoredPattern):
        return empirical_p_value(r.pattern, validation, selectors, spec, cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            raw = list(pool.map(one, candidates))
    else:
        raw = [one(r) for r in candidates]

    for r, p in zip(candidates, raw):
        if p is None:
            log.info("pattern %s untestable on validation split; treated as non-significant",
                     r.description)
    # untestable patterns enter the correction as p = 1
    adjusted = correct([1.0 if p is None else p for p in raw], cfg.correction)
    entries, kept = [], []
    for r, p, q in zip(candidates, raw, adjusted):
        sig = p is not None and q <= cfg.threshold
        entries.append({
            "pattern": r.description,
            "interestingness": r.interestingness,
            "p_value": p,
            "adjusted_p_value": q,
            "significant": sig,
            "resamples": cfg.n_resamples,
        })
        if sig:
            kept.append(r)
    n_sig = len(kept)
    filtered = ResultSet(kept[: cfg.k], results.evaluated, results.pruned, results.wall_time)
    return SignificanceReport(entries, filtered, n_sig, len(candidates), cfg.n_resamples)
