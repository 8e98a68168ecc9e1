"""Slow, independent reference implementations used only by the tests.

Everything here works on plain Python lists and exact fractions so it
shares no code path with the numpy kernels under test.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def pairs(s):
    return list(zip(s.labels.tolist(), s.scores.tolist()))


def roc_pairs(data) -> Fraction:
    """Probability that a random positive outranks a random negative, ties 1/2."""
    pos = [y for l, y in data if l == 1]
    neg = [y for l, y in data if l == 0]
    total = Fraction(0)
    for p in pos:
        for n in neg:
            total += 1 if p > n else Fraction(1, 2) if p == n else 0
    return total / (len(pos) * len(neg))


def pen_count(data, i) -> Fraction:
    y = data[i][1]
    return sum((Fraction(1) if s > y else Fraction(1, 2) if s == y else 0)
               for l, s in data if l == 0)


def arl_count(data) -> Fraction:
    idx = [i for i, (l, _) in enumerate(data) if l == 1]
    return sum((pen_count(data, i) for i in idx), Fraction(0)) / len(idx)


def _curve(data):
    """(TP, FP) at thresholds = unique scores descending, then -inf; strict '>'."""
    thresholds = sorted({y for _, y in data}, reverse=True) + [float("-inf")]
    pts = []
    for t in thresholds:
        tp = sum(1 for l, y in data if l == 1 and y > t)
        fp = sum(1 for l, y in data if l == 0 and y > t)
        pts.append((tp, fp))
    return pts


def roc_trapezoid(data) -> Fraction:
    pts = _curve(data)
    P = sum(l for l, _ in data)
    N = len(data) - P
    area = Fraction(0)
    for (tp0, fp0), (tp1, fp1) in zip(pts, pts[1:]):
        area += Fraction(abs(fp1 - fp0), N) * Fraction(tp1 + tp0, 2 * P)
    return area


def pr_trapezoid(data) -> Fraction:
    pts = _curve(data)
    P = sum(l for l, _ in data)

    def prec(tp, fp):
        return Fraction(1) if tp + fp == 0 else Fraction(tp, tp + fp)

    area = Fraction(0)
    for (tp0, fp0), (tp1, fp1) in zip(pts, pts[1:]):
        area += Fraction(abs(tp1 - tp0), P) * (prec(tp0, fp0) + prec(tp1, fp1)) / 2
    return area


def nonempty_subsets(data):
    for r in range(1, len(data) + 1):
        yield from itertools.combinations(data, r)


def weight_exact(P, N, alpha, beta) -> float:
    cb = 0.0 if P == 0 or N == 0 else min(N / P, P / N)
    return float(P + N) ** alpha * cb ** beta


def random_multiset(rng: np.random.Generator, n_max: int, ties: bool, min_n: int = 1):
    n = int(rng.integers(min_n, n_max + 1))
    labels = rng.integers(0, 2, n)
    if ties:
        scores = rng.integers(0, max(2, n // 3), n).astype(float) / 4
    else:
        scores = rng.random(n)
    return labels, scores
