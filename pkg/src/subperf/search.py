"""Exhaustive top-k subgroup search with optimistic-estimate pruning."""

from __future__ import annotations

import bisect
import csv
import heapq
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from subperf.dataset import Dataset, Selector
from subperf.scoring import ScoredPattern, Scorer, ScoringSpec

# relative slack when comparing an estimate against the k-th best score;
# only ever weakens pruning
PRUNE_SLACK = 1e-12

RESULT_COLUMNS = ["interestingness", "pattern", "ARL", "PR AUC", "ROC AUC", "cover", "NCR"]


@dataclass(frozen=True)
class SearchConfig:
    top_k: int = 5
    max_depth: int = 4
    min_cover: int = 20
    pruning: bool = True
    spec: ScoringSpec = field(default_factory=ScoringSpec)
    strategy: str = "best-first"  # or "dfs"
    threads: int = 1
    debug: bool = False

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_cover < 1:
            raise ValueError("min_cover must be >= 1")
        if self.strategy not in ("best-first", "dfs"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class ResultSet:
    results: list[ScoredPattern]
    evaluated: int = 0
    pruned: int = 0
    wall_time: float = 0.0

    def __len__(self) -> int:
        return len(self.results)

    def __iter__(self):
        return iter(self.results)

    def __getitem__(self, i):
        return self.results[i]

    def patterns(self) -> list[tuple]:
        return [r.pattern for r in self.results]

    def rows(self) -> list[dict]:
        return [_row(r) for r in self.results]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in self.rows():
            w.writerow(["" if row[c] is None else _cell(row[c]) for c in RESULT_COLUMNS])
        return buf.getvalue()

    def to_json(self, include_stats: bool = True) -> dict:
        out = {"results": [dict(_row(r), selectors=list(r.pattern)) for r in self.results]}
        if include_stats:
            out["statistics"] = {"evaluated": self.evaluated, "pruned": self.pruned}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(include_stats=False), indent=2, sort_keys=True)


def _row(r: ScoredPattern) -> dict:
    return {
        "interestingness": r.interestingness,
        "pattern": r.description,
        "ARL": r.arl,
        "PR AUC": r.pr_auc,
        "ROC AUC": r.roc_auc,
        "cover": r.size,
        "NCR": r.ncr,
    }


def _cell(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


class _TopK:
    def __init__(self, k: int):
        self.k = k
        self.items: list[tuple] = []  # (sort_key, pattern, score)

    def offer(self, pattern: tuple, score: float) -> None:
        key = (-score, len(pattern), pattern)
        if len(self.items) == self.k and key >= self.items[-1][0]:
            return
        bisect.insort(self.items, (key, pattern, score))
        del self.items[self.k:]

    def threshold(self) -> float:
        if len(self.items) < self.k:
            return -np.inf
        return self.items[-1][2]


@dataclass
class _Node:
    pattern: tuple
    estimate: float


def _attr_index(selectors: Sequence[Selector]) -> list[str]:
    return [s.attribute for s in selectors]


def _children(pattern: tuple, attrs: list[str], n_sel: int):
    used = {attrs[i] for i in pattern}
    start = pattern[-1] + 1 if pattern else 0
    for j in range(start, n_sel):
        if attrs[j] not in used:
            yield pattern + (j,)


def mine(ds: Dataset, selectors: Sequence[Selector], cfg: SearchConfig) -> ResultSet:
    """Top-k patterns of length <= max_depth with cover >= min_cover.

    Patterns are generated canonically (selector ids increasing, one
    selector per attribute). With pruning on, a pattern's specializations
    are skipped once its optimistic estimate falls below the current k-th
    best score; the returned set is the same either way.
    """
    if not selectors:
        raise ValueError("no selectors to search over")
    t0 = time.perf_counter()
    scorer = Scorer(ds, selectors, cfg.spec)
    attrs = _attr_index(selectors)
    n_sel = len(selectors)
    measure = cfg.spec.measure
    top = _TopK(cfg.top_k)
    stats = {"evaluated": 0, "pruned": 0}
    seen: set | None = set() if cfg.debug else None

    def evaluate(pattern: tuple, parent_bits: np.ndarray):
        bits = parent_bits & scorer.mask(pattern[-1])
        size = int(np.count_nonzero(bits))
        if size < cfg.min_cover:
            return None
        s = scorer.score_set(bits)
        P, N = s.P, s.N
        if not measure.defined(P, N):
            # every specialization lacks the same class
            return None
        weighted = scorer.weighted_of(s)
        scorer.remember(pattern, weighted)
        est = scorer.optimistic_estimate_of(s) if len(pattern) < cfg.max_depth else None
        return pattern, bits, weighted, est

    def expand(node_pattern: tuple, node_bits: np.ndarray):
        return [evaluate(c, node_bits) for c in _children(node_pattern, attrs, n_sel)]

    def cutoff() -> float:
        t = top.threshold()
        return t - PRUNE_SLACK * max(1.0, abs(t))

    # frontier entries: (-estimate, counter, pattern, bits)
    frontier: list = []
    counter = 0
    all_bits = np.ones(ds.n, dtype=bool)
    frontier.append((-np.inf, counter, (), all_bits))
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        while frontier:
            batch = []
            while frontier and len(batch) < cfg.threads:
                if cfg.strategy == "dfs":
                    neg_est, _, pat, bits = frontier.pop()
                else:
                    neg_est, _, pat, bits = heapq.heappop(frontier)
                if cfg.pruning and pat and -neg_est < cutoff():
                    stats["pruned"] += 1
                    if cfg.strategy == "best-first":
                        # everything left has a lower estimate
                        stats["pruned"] += len(frontier)
                        frontier.clear()
                    continue
                batch.append((pat, bits))
            if pool is None:
                expanded = [expand(p, b) for p, b in batch]
            else:
                expanded = list(pool.map(lambda pb: expand(*pb), batch))
            for children in expanded:
                for item in children:
                    if item is None:
                        continue
                    pattern, bits, weighted, est = item
                    if seen is not None:
                        assert pattern not in seen, f"pattern {pattern} visited twice"
                        seen.add(pattern)
                    stats["evaluated"] += 1
                    top.offer(pattern, scorer.final(pattern, weighted))
                    if est is None:
                        continue
                    if cfg.pruning and est < cutoff():
                        stats["pruned"] += 1
                        continue
                    counter += 1
                    entry = (-est, counter, pattern, bits)
                    if cfg.strategy == "dfs":
                        frontier.append(entry)
                    else:
                        heapq.heappush(frontier, entry)
    finally:
        if pool is not None:
            pool.shutdown()

    results = [scorer.diagnostics(p, score) for _, p, score in top.items]
    return ResultSet(results, stats["evaluated"], stats["pruned"], time.perf_counter() - t0)


def mine_gen_aware(ds: Dataset, selectors: Sequence[Selector], cfg: SearchConfig) -> ResultSet:
    """Like :func:`mine` with each score reduced by its best generalization's score."""
    if not cfg.spec.generalization_aware:
        spec = cfg.spec
        cfg = SearchConfig(
            cfg.top_k, cfg.max_depth, cfg.min_cover, cfg.pruning,
            ScoringSpec(spec.measure, spec.alpha, spec.beta, True, spec.overperformance),
            cfg.strategy, cfg.threads, cfg.debug,
        )
    return mine(ds, selectors, cfg)


def brute_force(ds: Dataset, selectors: Sequence[Selector], cfg: SearchConfig) -> list[tuple]:
    """Reference enumeration: (pattern, score) for every admissible pattern, best first."""
    import itertools

    scorer = Scorer(ds, selectors, cfg.spec)
    attrs = _attr_index(selectors)
    out = []
    for r in range(1, cfg.max_depth + 1):
        for combo in itertools.combinations(range(len(selectors)), r):
            if len({attrs[i] for i in combo}) < r:
                continue
            s = scorer.score_set(scorer.bits(combo))
            if len(s) < cfg.min_cover or not cfg.spec.measure.defined(s.P, s.N):
                continue
            out.append((combo, scorer.final(combo, scorer.weighted(combo))))
    out.sort(key=lambda t: (-t[1], len(t[0]), t[0]))
    return out
