from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import arl_count, pairs, pen_count, pr_trapezoid, roc_pairs, roc_trapezoid
from subperf.metrics import (
    LabeledScoreSet,
    UndefinedMeasureError,
    arl,
    arl_rows,
    class_balance,
    class_balance_counts,
    max_pen,
    pen,
    pr_auc,
    roc_auc,
    roc_auc_rows,
    weight,
)

S4 = LabeledScoreSet.from_pairs([(1, 0.9), (0, 0.8), (1, 0.3), (0, 0.7)])
ALT = LabeledScoreSet.from_pairs([(1, 0.8), (0, 0.7), (1, 0.6), (0, 0.4)])


@st.composite
def score_sets(draw, min_size=1, max_size=40, need_pos=False, need_both=False):
    n = draw(st.integers(min_size, max_size))
    labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    if need_pos or need_both:
        labels[0] = 1
    if need_both and n > 1:
        labels[-1] = 0
    tie_heavy = draw(st.booleans())
    elem = st.integers(0, 4).map(float) if tie_heavy else st.floats(-1e3, 1e3, allow_nan=False)
    scores = draw(st.lists(elem, min_size=n, max_size=n))
    return LabeledScoreSet(np.array(labels), np.array(scores))


# -- pen / arl ------------------------------------------------------------------

def test_pen_examples():
    assert pen(2, S4) == 2
    assert pen(0, S4) == 0
    assert pen(0, LabeledScoreSet.from_pairs([(1, 0.5), (0, 0.5)])) == 0.5


def test_pen_rejects_negative_index():
    with pytest.raises(ValueError):
        pen(1, S4)


def test_arl_examples():
    assert arl(S4) == 1
    assert arl(LabeledScoreSet.from_pairs([(1, 0.9), (1, 0.8), (0, 0.1)])) == 0
    assert arl(LabeledScoreSet.from_pairs([(1, 0.3), (0, 0.7)])) == 1


def test_arl_undefined_without_positives():
    with pytest.raises(UndefinedMeasureError):
        arl(LabeledScoreSet.from_pairs([(0, 0.3), (0, 0.7)]))


@given(score_sets(need_pos=True))
def test_arl_matches_counting_oracle(s):
    assert arl(s) == pytest.approx(float(arl_count(pairs(s))), abs=1e-12)


@given(score_sets(need_pos=True))
def test_max_pen_is_largest_pen(s):
    data = pairs(s)
    expected = max(pen_count(data, i) for i, (l, _) in enumerate(data) if l == 1)
    assert max_pen(s) == float(expected)


# -- roc auc --------------------------------------------------------------------

def test_roc_examples():
    assert roc_auc(LabeledScoreSet.from_pairs([(1, 0.9), (0, 0.1)])) == 1.0
    assert roc_auc(LabeledScoreSet.from_pairs([(1, 0.5), (0, 0.5)])) == 0.5
    assert roc_auc(ALT) == 0.75


def test_roc_undefined_single_class():
    with pytest.raises(UndefinedMeasureError):
        roc_auc(LabeledScoreSet.from_pairs([(1, 0.9), (1, 0.1)]))
    with pytest.raises(UndefinedMeasureError):
        roc_auc(LabeledScoreSet.from_pairs([(0, 0.9)]))


@given(score_sets(min_size=2, need_both=True))
def test_roc_matches_pair_counting_and_trapezoid_oracles(s):
    data = pairs(s)
    assert roc_auc(s) == pytest.approx(float(roc_pairs(data)), abs=1e-12)
    assert roc_pairs(data) == roc_trapezoid(data)


@given(score_sets(min_size=2, need_both=True))
def test_roc_label_swap_duality(s):
    flipped = LabeledScoreSet(1 - s.labels, -s.scores)
    assert roc_auc(flipped) == pytest.approx(roc_auc(s), abs=1e-12)


@given(score_sets(min_size=2, need_both=True))
def test_arl_roc_identity(s):
    # holds with ties too: both count tied pairs as one half
    assert arl(s) == pytest.approx(s.N * (1 - roc_auc(s)), abs=1e-9)


def test_arl_roc_identity_on_published_table_rows():
    # (ARL, ROC AUC, cover, NCR) rows of a published Adult result table
    rows = [(213.0197, 0.9241, 11305, 0.2482), (354.2510, 0.8508, 5280, 0.4496),
            (372.3026, 0.7780, 4309, 0.3892)]
    for arl_v, auc, size, ncr in rows:
        n_neg = round(size * ncr)
        assert n_neg * (1 - auc) == pytest.approx(arl_v, rel=2e-3)


# -- pr auc ---------------------------------------------------------------------

def test_pr_examples():
    assert pr_auc(LabeledScoreSet.from_pairs([(1, 0.9), (0, 0.1)])) == 1.0
    assert pr_auc(LabeledScoreSet.from_pairs([(1, 0.9), (1, 0.1)])) == 1.0
    assert pr_auc(ALT) == pytest.approx(19 / 24, abs=1e-12)
    assert pr_trapezoid(pairs(ALT)) == Fraction(19, 24)


def test_pr_undefined_without_positives():
    with pytest.raises(UndefinedMeasureError):
        pr_auc(LabeledScoreSet.from_pairs([(0, 0.9)]))


@given(score_sets(need_pos=True))
def test_pr_matches_trapezoid_oracle(s):
    value = pr_auc(s)
    assert value == pytest.approx(float(pr_trapezoid(pairs(s))), abs=1e-12)
    assert 0 < value <= 1


# -- rank invariance ----------------------------------------------------------------

@given(score_sets(min_size=2, need_both=True), st.sampled_from(["exp", "cube", "affine"]))
def test_measures_invariant_under_increasing_maps(s, kind):
    # a 1e-3 grid keeps the maps strictly increasing in floating point
    x = np.round(s.scores / 1e3, 3)
    f = {"exp": np.exp, "cube": lambda v: v ** 3 + v, "affine": lambda v: 3 * v - 7}[kind]
    t = LabeledScoreSet(s.labels, f(x))
    base = LabeledScoreSet(s.labels, x)
    for m in (arl, roc_auc, pr_auc):
        assert m(t) == pytest.approx(m(base), abs=1e-12)


@given(score_sets(min_size=2, need_both=True), st.randoms(use_true_random=False))
def test_measures_ignore_instance_order(s, rnd):
    idx = list(range(len(s)))
    rnd.shuffle(idx)
    t = LabeledScoreSet(s.labels[idx], s.scores[idx])
    for m in (arl, roc_auc, pr_auc):
        assert m(t) == m(s)


@given(score_sets(min_size=2, need_both=True))
def test_ranges(s):
    assert 0 <= arl(s) <= s.N
    assert 0 <= roc_auc(s) <= 1
    assert 0 < pr_auc(s) <= 1


# -- class balance and weight -----------------------------------------------------

def test_class_balance_examples():
    assert class_balance_counts(2, 2) == 1
    assert class_balance_counts(3, 1) == pytest.approx(1 / 3)
    assert class_balance_counts(0, 5) == 0
    assert class_balance(S4) == 1


@given(st.integers(0, 50), st.integers(0, 50))
def test_class_balance_symmetric(p, n):
    assert class_balance_counts(p, n) == class_balance_counts(n, p)


def test_weight_examples():
    three_three = LabeledScoreSet(np.array([1] * 3 + [0] * 3), np.arange(6.0))
    three_five = LabeledScoreSet(np.array([1] * 3 + [0] * 5), np.arange(8.0))
    assert weight(S4, 0, 0) == 1
    assert weight(three_three, 1, 1) == 6
    assert weight(three_five, 1, 1) == pytest.approx(4.8)
    # single class with beta = 0: 0**0 is 1
    assert weight(LabeledScoreSet.from_pairs([(1, 0.1)]), 0, 0) == 1


# -- batched kernels --------------------------------------------------------------

@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1), st.booleans())
def test_row_kernels_match_scalar(n_pos, n_neg, seed, ties):
    rng = np.random.default_rng(seed)
    scores = rng.integers(0, 4, (5, n_pos + n_neg)).astype(float) if ties else rng.random((5, n_pos + n_neg))
    labels = np.array([1] * n_pos + [0] * n_neg)
    rocs = roc_auc_rows(scores, n_pos)
    arls = arl_rows(scores, n_pos)
    for row, r, a in zip(scores, rocs, arls):
        s = LabeledScoreSet(labels, row)
        assert r == roc_auc(s)
        assert a == arl(s)
