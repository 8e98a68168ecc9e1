"""Desk-scale versions of the evaluation protocols.

Three-way splits, subgroup injection, synthetic size/class-ratio skew
surfaces, pruning benchmarks and cover-overlap statistics.
"""

from __future__ import annotations

import itertools
import statistics
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from subperf.dataset import Attribute, Cover, Dataset, Selector, cover, describe, generate_selectors
from subperf.metrics import LabeledScoreSet, weight
from subperf.scoring import METRICS, Measure, ScoringSpec, relative_value
from subperf.search import ResultSet, SearchConfig, mine


def split3(ds: Dataset, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Random (train, search, validation) split into near-equal thirds."""
    if ds.n < 3:
        raise ValueError("need at least 3 instances to split in three")
    perm = np.random.default_rng(seed).permutation(ds.n)
    base, extra = divmod(ds.n, 3)
    sizes = [base + (i < extra) for i in range(3)]
    bounds = np.cumsum([0] + sizes)
    return tuple(ds.take(np.sort(perm[bounds[i]:bounds[i + 1]])) for i in range(3))


def _bits(ds: Dataset, pattern, selectors) -> np.ndarray:
    if isinstance(pattern, Cover):
        return pattern.bits
    return cover(pattern, ds, selectors).bits


def inject(ds: Dataset, pattern, selectors: Sequence[Selector] | None = None) -> Dataset:
    """Copy of ``ds`` with the predictions inside the pattern's cover negated."""
    bits = _bits(ds, pattern, selectors)
    if not bits.any():
        raise ValueError("cannot inject into an empty cover")
    preds = ds.predictions.copy()
    preds[bits] = -preds[bits]
    return ds.with_predictions(preds)


def injectable_candidates(ds: Dataset, selectors: Sequence[Selector], len_max: int = 3,
                          frac: tuple[float, float] = (0.004, 0.006), min_cover: int = 1,
                          min_class_count: int = 0) -> list[tuple]:
    attrs = [s.attribute for s in selectors]
    masks = [s.mask(ds) for s in selectors]
    lo, hi = frac[0] * ds.n, frac[1] * ds.n
    out = []
    for r in range(1, len_max + 1):
        for combo in itertools.combinations(range(len(selectors)), r):
            if len({attrs[i] for i in combo}) < r:
                continue
            bits = np.logical_and.reduce([masks[i] for i in combo])
            size = int(bits.sum())
            if not (lo <= size <= hi) or size < min_cover:
                continue
            n_pos = int(ds.labels[bits].sum())
            if min(n_pos, size - n_pos) < min_class_count:
                continue
            out.append(combo)
    return out


def pick_injectable(ds: Dataset, selectors: Sequence[Selector], seed: int, len_max: int = 3,
                    frac: tuple[float, float] = (0.004, 0.006), min_cover: int = 1,
                    min_class_count: int = 0) -> tuple:
    """Uniformly drawn pattern of length <= len_max whose cover fraction lies in ``frac``."""
    cands = injectable_candidates(ds, selectors, len_max, frac, min_cover, min_class_count)
    if not cands:
        raise ValueError(
            f"no pattern of length <= {len_max} covers {frac[0]:.2%}-{frac[1]:.2%} of the data;"
            " widen the fraction band"
        )
    return cands[int(np.random.default_rng(seed).integers(len(cands)))]


def iou(a, b) -> float:
    a = a.bits if isinstance(a, Cover) else np.asarray(a, dtype=bool)
    b = b.bits if isinstance(b, Cover) else np.asarray(b, dtype=bool)
    union = np.count_nonzero(a | b)
    return np.count_nonzero(a & b) / union if union else 0.0


def mean_pairwise_iou(covers: Sequence) -> float | None:
    """Mean IoU over unordered pairs; None for fewer than two covers."""
    if len(covers) < 2:
        return None
    return float(np.mean([iou(a, b) for a, b in itertools.combinations(covers, 2)]))


def result_covers(rs: ResultSet, ds: Dataset, selectors: Sequence[Selector]) -> list[np.ndarray]:
    return [cover(r.pattern, ds, selectors).bits for r in rs]


# -- synthetic data ------------------------------------------------------------

def synth_skew(corr: float, size: int, q: float, seed) -> LabeledScoreSet:
    """Bivariate standard normal (z, zhat) with correlation ``corr``.

    The lowest ``round(q*size)`` values of z are negatives, so the negative
    class ratio is q up to rounding; zhat is the score.
    """
    if not -1 <= corr <= 1 or size < 1 or not 0 < q < 1:
        raise ValueError("need corr in [-1, 1], size >= 1, q in (0, 1)")
    n_neg = int(round(q * size))
    if n_neg == 0 or n_neg == size:
        raise ValueError(f"q={q} with size={size} leaves one class empty")
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, size))
    z = a
    zhat = corr * a + np.sqrt(max(0.0, 1 - corr * corr)) * b
    labels = np.ones(size, dtype=np.int8)
    labels[np.argsort(z, kind="stable")[:n_neg]] = 0
    return LabeledScoreSet(labels, zhat)


def skew_score(s: LabeledScoreSet, ref: LabeledScoreSet, measure: Measure,
               alpha: float = 0.0, beta: float = 0.0) -> float:
    fn = METRICS[measure]
    rel = relative_value(measure, fn(s), fn(ref))
    return weight(s, alpha, beta) * rel


DEFAULT_CORRS = (-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_SIZES = (10, 20, 50, 100, 200, 500, 1000)
DEFAULT_NCRS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


def skew_surface(measure, axis: str, grid: Sequence[float] | None = None,
                 corrs: Sequence[float] = DEFAULT_CORRS, repeats: int = 20, seed: int = 0,
                 alpha: float = 0.0, beta: float = 0.0) -> list[dict]:
    """Mean relative score per (correlation, size or NCR) cell.

    The reference set has correlation 0, size 100 and q = 0.5 and is drawn
    afresh for every repeat.
    """
    measure = Measure(measure)
    if axis not in ("cover_size", "ncr"):
        raise ValueError("axis must be 'cover_size' or 'ncr'")
    if grid is None:
        grid = DEFAULT_SIZES if axis == "cover_size" else DEFAULT_NCRS
    rows = []
    for ci, corr in enumerate(corrs):
        for gi, x in enumerate(grid):
            size, q = (int(x), 0.5) if axis == "cover_size" else (100, float(x))
            scores = []
            for r in range(repeats):
                ref = synth_skew(0.0, 100, 0.5, [seed, r, 0])
                s = synth_skew(corr, size, q, [seed, r, 1, ci, gi])
                scores.append(skew_score(s, ref, measure, alpha, beta))
            mean = statistics.fmean(scores)
            sd = statistics.stdev(scores) if repeats > 1 else 0.0
            rows.append({
                "measure": measure.value,
                "alpha": alpha,
                "beta": beta,
                "corr": corr,
                axis: x,
                "mean": mean,
                "sd": sd,
                "se": sd / np.sqrt(repeats),
                "repeats": repeats,
            })
    return rows


INJECTION_CARDS = (4, 5, 6, 6, 8)


def synth_tabular(n: int, seed: int, cards: Sequence[int] = INJECTION_CARDS,
                  effect: float = 0.8, slope: float = 1.0, hidden: float = 2.5,
                  noise: float = 1.0, shift: float = 1.0) -> Dataset:
    """Tabular data with labels and a strong but imperfect scorer.

    Nominal attributes ``a0, a1, ...`` have the given cardinalities and one
    random log-odds effect per level; ``x`` is numeric with a linear effect.
    A further unobserved component of weight ``hidden`` drives labels and
    predictions alike, so the scorer still ranks well inside any subgroup
    the attributes can describe. Predictions are a noisy monotone function
    of the latent log-odds.
    """
    rng = np.random.default_rng(seed)
    latent = np.zeros(n)
    attrs = []
    for i, k in enumerate(cards):
        c = rng.integers(0, k, n)
        latent += rng.normal(0, effect, k)[c]
        attrs.append(Attribute(f"a{i}", "nominal", np.array([f"v{v}" for v in c], dtype=object)))
    x = rng.normal(0, 1, n)
    attrs.append(Attribute("x", "numeric", np.round(x, 3)))
    latent += slope * x + hidden * rng.normal(0, 1, n) - shift
    labels = (rng.random(n) < 1 / (1 + np.exp(-2.0 * latent))).astype(np.int8)
    preds = 1 / (1 + np.exp(-(latent + rng.normal(0, noise * 0.5, n))))
    return Dataset(tuple(attrs), labels, np.round(preds, 6))


@dataclass
class InjectionRun:
    seed: int
    pattern: tuple
    description: str
    cover_size: int
    ious: list[float]
    search: Dataset
    validation: Dataset
    selectors: list[Selector]
    results: ResultSet

    @property
    def best_iou(self) -> float:
        return max(self.ious, default=0.0)


def injection_setup(seed: int, n_total: int = 30000, bins: int = 5, len_max: int = 3,
                    frac: tuple[float, float] = (0.004, 0.006), min_cover: int = 5,
                    data: Dataset | None = None):
    """Generate (or take), split, and inject one benchmark instance.

    Returns (search, validation, selectors, pattern). The injected pattern is
    drawn on the search split among patterns holding both classes and at
    least ``min_cover`` instances; the same pattern is injected into the
    validation split. Without ``data`` the synthetic benchmark of size
    ``n_total`` is generated from ``seed``.
    """
    ds = synth_tabular(n_total, seed) if data is None else data
    _, search, validation = split3(ds, seed)
    selectors = generate_selectors(search, bins)
    pattern = pick_injectable(search, selectors, seed, len_max, frac, min_cover, min_class_count=1)
    return inject(search, pattern, selectors), inject(validation, pattern, selectors), selectors, pattern


def run_injection(seed: int, spec: ScoringSpec, top_k: int = 10, max_depth: int = 4,
                  min_cover: int = 5, n_total: int = 30000, threads: int = 1,
                  data: Dataset | None = None, frac: tuple[float, float] = (0.004, 0.006),
                  bins: int = 5) -> InjectionRun:
    search, validation, selectors, pattern = injection_setup(
        seed, n_total, bins=bins, frac=frac, min_cover=min_cover, data=data)
    cfg = SearchConfig(top_k=top_k, max_depth=max_depth, min_cover=min_cover, spec=spec,
                       threads=threads)
    rs = mine(search, selectors, cfg)
    target = cover(pattern, search, selectors).bits
    ious = [iou(target, b) for b in result_covers(rs, search, selectors)]
    return InjectionRun(seed, pattern, describe(pattern, selectors), int(target.sum()), ious,
                        search, validation, selectors, rs)


def structured_bench_data(n: int = 5000, seed: int = 0) -> tuple[Dataset, list[Selector]]:
    """Synthetic data with one large subgroup (``a0=v0``) whose scores are negated.

    A strongly degraded, well-populated subgroup raises the top-k threshold
    early, which is where optimistic estimates pay off.
    """
    ds = synth_tabular(n, seed)
    selectors = generate_selectors(ds)
    first = next(i for i, s in enumerate(selectors) if s.attribute == "a0")
    return inject(ds, (first,), selectors), selectors


def bench_pruning(ds: Dataset, selectors: Sequence[Selector], specs: Sequence[ScoringSpec],
                  repeats: int = 3, top_k: int = 5, max_depth: int = 4,
                  min_cover: int = 20) -> list[dict]:
    """Median runtime and node counts with and without pruning per scoring spec."""
    rows = []
    for spec in specs:
        times = {True: [], False: []}
        runs = {}
        for _ in range(repeats):
            for pruning in (True, False):
                cfg = SearchConfig(top_k=top_k, max_depth=max_depth, min_cover=min_cover,
                                   pruning=pruning, spec=spec)
                t0 = time.perf_counter()
                rs = mine(ds, selectors, cfg)
                times[pruning].append(time.perf_counter() - t0)
                runs[pruning] = rs
        if runs[True].patterns() != runs[False].patterns():
            raise AssertionError(f"pruned and unpruned results differ for {spec}")
        t_on, t_off = statistics.median(times[True]), statistics.median(times[False])
        rows.append({
            "measure": spec.measure.value,
            "alpha": spec.alpha,
            "beta": spec.beta,
            "nodes_pruned": runs[True].evaluated,
            "nodes_unpruned": runs[False].evaluated,
            "node_ratio": runs[True].evaluated / max(1, runs[False].evaluated),
            "median_time_pruned": t_on,
            "median_time_unpruned": t_off,
            "speedup": t_off / t_on if t_on > 0 else float("inf"),
            "identical": True,
        })
    return rows
