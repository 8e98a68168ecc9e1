import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subperf.dataset import (
    Attribute,
    DataError,
    Dataset,
    Selector,
    cover,
    describe,
    extract,
    generate_selectors,
    load_csv,
    parse_label_map,
    read_config,
    write_csv,
)


def small_ds():
    sex = Attribute("sex", "nominal", np.array(["f", "m", "f"], dtype=object))
    age = Attribute("age", "numeric", np.array([20.0, 35.0, 50.0]))
    return Dataset((sex, age), np.array([1, 0, 1]), np.array([0.9, 0.4, 0.2]))


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# -- Dataset invariants ----------------------------------------------------------

def test_dataset_validation():
    a = Attribute("a", "numeric", np.arange(3.0))
    with pytest.raises(DataError):
        Dataset((a,), np.array([0, 1]), np.array([0.1, 0.2]))
    with pytest.raises(DataError):
        Dataset((a,), np.array([0, 1, 2]), np.array([0.1, 0.2, 0.3]))
    with pytest.raises(DataError):
        Dataset((a,), np.array([0, 1, 1]), np.array([0.1, np.nan, 0.3]))
    with pytest.raises(DataError):
        Dataset((), np.array([], dtype=int), np.array([]))
    # scores outside [0, 1] are fine
    Dataset((a,), np.array([0, 1, 1]), np.array([-0.8, 5.0, 0.3]))


# -- load_csv --------------------------------------------------------------------

def test_load_small_csv(tmp_path):
    p = write(tmp_path, "sex,age,y,yhat\nf,20,1,0.9\nm,35,0,0.4\nf,50,1,0.2\nm,41,0,0.7\n")
    ds = load_csv(p, "y", "yhat")
    assert ds.n == 4
    assert [a.name for a in ds.attributes] == ["sex", "age"]
    assert ds.attribute("sex").kind == "nominal"
    assert ds.attribute("age").kind == "numeric"
    assert ds.labels.tolist() == [1, 0, 1, 0]


def test_load_with_label_mapping(tmp_path):
    p = write(tmp_path, "g,y,yhat\na,sick,0.9\nb,healthy,0.1\na,healthy,0.3\n")
    ds = load_csv(p, "y", "yhat", parse_label_map("sick:1, healthy:0"))
    assert ds.labels.tolist() == [1, 0, 0]


def test_nan_score_is_reported_with_position(tmp_path):
    p = write(tmp_path, "g,y,yhat\na,1,0.9\nb,0,NaN\n")
    with pytest.raises(DataError, match=r"row 3, column 'yhat'"):
        load_csv(p, "y", "yhat")


def test_unparseable_score(tmp_path):
    p = write(tmp_path, "g,y,yhat\na,1,high\n")
    with pytest.raises(DataError, match=r"row 2, column 'yhat'"):
        load_csv(p, "y", "yhat")


def test_non_binary_labels_list_distinct_values(tmp_path):
    p = write(tmp_path, "g,y,yhat\na,1,0.9\nb,2,0.1\nc,0,0.5\n")
    with pytest.raises(DataError, match=r"\['0', '1', '2'\]"):
        load_csv(p, "y", "yhat")


def test_missing_label_rejected(tmp_path):
    p = write(tmp_path, "g,y,yhat\na,,0.9\n")
    with pytest.raises(DataError, match="missing label"):
        load_csv(p, "y", "yhat")


def test_missing_column_and_ragged_row(tmp_path):
    p = write(tmp_path, "g,y,yhat\na,1,0.9\n")
    with pytest.raises(DataError, match="not in header"):
        load_csv(p, "label", "yhat")
    p = write(tmp_path, "g,y,yhat\na,1\n", "r.csv")
    with pytest.raises(DataError, match="row 2 has 2 fields"):
        load_csv(p, "y", "yhat")


def test_mapping_must_cover_values(tmp_path):
    p = write(tmp_path, "g,y,yhat\na,sick,0.9\nb,well,0.1\n")
    with pytest.raises(DataError, match="missing from mapping"):
        load_csv(p, "y", "yhat", {"sick": 1})
    with pytest.raises(DataError):
        parse_label_map("sick:2")


def test_missing_attribute_values_and_forced_nominal(tmp_path):
    p = write(tmp_path, "zip,age,y,yhat\n1000,?,1,0.9\n2000,30,0,0.1\n1000,40,0,0.3\n")
    ds = load_csv(p, "y", "yhat", nominal=["zip"])
    assert ds.attribute("zip").kind == "nominal"
    age = ds.attribute("age")
    assert age.kind == "numeric" and np.isnan(age.values[0])
    sel = Selector("age", "interval", lo=0.0, hi=100.0, closed=True)
    assert sel.mask(ds).tolist() == [False, True, True]


def test_csv_round_trip(tmp_path):
    ds = small_ds()
    write_csv(ds, tmp_path / "o.csv")
    back = load_csv(tmp_path / "o.csv", "y", "yhat")
    assert back.labels.tolist() == ds.labels.tolist()
    assert back.predictions.tolist() == ds.predictions.tolist()
    assert back.attribute("sex").values.tolist() == ["f", "m", "f"]


def test_read_config(tmp_path):
    p = write(tmp_path, "# comment\nlabel-col = y\nscore_col=yhat  # trailing\n\n", "c.cfg")
    assert read_config(p) == {"label_col": "y", "score_col": "yhat"}
    bad = write(tmp_path, "just words\n", "b.cfg")
    with pytest.raises(DataError, match="b.cfg:1"):
        read_config(bad)


# -- selectors ---------------------------------------------------------------------

def test_nominal_selectors():
    a = Attribute("g", "nominal", np.array(["a", "b", "a"], dtype=object))
    ds = Dataset((a,), np.array([0, 1, 0]), np.zeros(3))
    assert [str(s) for s in generate_selectors(ds)] == ["g=a", "g=b"]


def test_numeric_equal_frequency_bins():
    vals = np.arange(1.0, 11.0)
    ds = Dataset((Attribute("x", "numeric", vals),), np.zeros(10, dtype=int), np.zeros(10))
    sels = generate_selectors(ds, bins=2)
    # sort-and-split oracle: the median of 1..10 is 5.5
    s = np.sort(vals)
    median = (s[4] + s[5]) / 2
    assert [(x.lo, x.hi, x.closed) for x in sels] == [(1.0, median, False), (median, 10.0, True)]
    assert [str(x) for x in sels] == ["x=[1,5.5)", "x=[5.5,10]"]
    assert sum(int(x.mask(ds).sum()) for x in sels) == 10


def test_constant_column_yields_no_selectors():
    ds = Dataset((Attribute("c", "nominal", np.array(["k"] * 4, dtype=object)),
                  Attribute("z", "numeric", np.ones(4))), np.array([0, 1, 0, 1]), np.zeros(4))
    assert generate_selectors(ds) == []


def test_duplicate_edges_merge():
    vals = np.array([0.0] * 8 + [1.0, 2.0])
    ds = Dataset((Attribute("x", "numeric", vals),), np.zeros(10, dtype=int), np.zeros(10))
    sels = generate_selectors(ds, bins=5)
    assert len(sels) < 5
    assert sum(int(x.mask(ds).sum()) for x in sels) == 10


def test_bins_must_be_at_least_two():
    ds = Dataset((Attribute("x", "numeric", np.arange(4.0)),), np.zeros(4, dtype=int), np.zeros(4))
    with pytest.raises(ValueError):
        generate_selectors(ds, bins=1)


def test_selector_generation_is_deterministic():
    from subperf.experiments import synth_tabular

    ds = synth_tabular(400, 3)
    assert generate_selectors(ds) == generate_selectors(ds)


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        Selector("x", "interval", lo=2.0, hi=2.0)


# -- cover / extract -------------------------------------------------------------------

def test_cover_examples():
    ds = small_ds()
    assert cover((), ds).bits.tolist() == [True, True, True]
    c = cover([Selector("sex", "eq", "f")], ds)
    assert np.flatnonzero(c.bits).tolist() == [0, 2]
    assert (c.n_pos, c.n_neg, c.size) == (2, 0, 2)
    clash = [Selector("age", "interval", lo=0.0, hi=30.0), Selector("age", "interval", lo=40.0, hi=60.0)]
    assert cover(clash, ds).size == 0


def test_extract_is_order_stable():
    ds = small_ds()
    s = extract(cover([Selector("sex", "eq", "f")], ds), ds)
    assert s.labels.tolist() == [1, 1]
    assert s.scores.tolist() == [0.9, 0.2]
    assert len(extract(cover((), ds), ds)) == 3


def test_describe():
    ds = small_ds()
    sels = generate_selectors(ds, bins=2)
    assert describe((), sels) == "<all>"
    assert describe((0, 2), sels).count(" AND ") == 1


@given(st.integers(0, 2**32 - 1))
def test_covers_are_anti_monotone_and_incremental(seed):
    from subperf.experiments import synth_tabular

    ds = synth_tabular(60, seed, cards=(2, 3))
    sels = generate_selectors(ds, bins=3)
    rng = np.random.default_rng(seed)
    ids = sorted(rng.choice(len(sels), size=min(3, len(sels)), replace=False).tolist())
    for r in range(len(ids)):
        for gen in itertools.combinations(ids, r):
            spec = tuple(ids)
            g, s = cover(gen, ds, sels).bits, cover(spec, ds, sels).bits
            assert not (s & ~g).any()
    incremental = cover(ids[:-1], ds, sels).bits & sels[ids[-1]].mask(ds)
    assert (incremental == cover(ids, ds, sels).bits).all()
    c = cover(ids, ds, sels)
    assert c.n_pos + c.n_neg == int(c.bits.sum())
