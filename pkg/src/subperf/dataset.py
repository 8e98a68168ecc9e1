"""Data model, selector generation and pattern covers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from subperf.metrics import LabeledScoreSet

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})

Pattern = tuple  # sorted tuple of selector ids; () is the empty pattern


class DataError(ValueError):
    """Malformed input data or schema."""


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "nominal" or "numeric"
    values: np.ndarray  # object array (None = missing) or float array (nan = missing)

    def __post_init__(self):
        if self.kind not in ("nominal", "numeric"):
            raise ValueError(f"unknown attribute kind {self.kind!r}")


@dataclass(frozen=True)
class Dataset:
    attributes: tuple[Attribute, ...]
    labels: np.ndarray
    predictions: np.ndarray
    _by_name: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        preds = np.asarray(self.predictions, dtype=float)
        n = len(labels)
        if n < 1:
            raise DataError("dataset must contain at least one instance")
        if preds.shape != (n,):
            raise DataError("labels and predictions differ in length")
        if not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        if not np.isfinite(preds).all():
            raise DataError("predictions must be finite")
        for a in self.attributes:
            if len(a.values) != n:
                raise DataError(f"attribute {a.name!r} has {len(a.values)} values, expected {n}")
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "labels", labels.astype(np.int8))
        object.__setattr__(self, "predictions", preds)
        object.__setattr__(self, "_by_name", {a.name: a for a in self.attributes})

    @property
    def n(self) -> int:
        return len(self.labels)

    def attribute(self, name: str) -> Attribute:
        return self._by_name[name]

    def take(self, idx) -> "Dataset":
        """Sub-dataset of the instances at ``idx`` (in the given order)."""
        idx = np.asarray(idx)
        attrs = tuple(Attribute(a.name, a.kind, a.values[idx]) for a in self.attributes)
        return Dataset(attrs, self.labels[idx], self.predictions[idx])

    def with_predictions(self, predictions) -> "Dataset":
        return Dataset(self.attributes, self.labels, predictions)

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence], labels, predictions) -> "Dataset":
        """Build a dataset from plain columns, auto-typing each one."""
        attrs = tuple(_typed_attribute(name, list(vals)) for name, vals in columns.items())
        return cls(attrs, np.asarray(labels), np.asarray(predictions, dtype=float))


def _is_missing(v) -> bool:
    if v is None:
        return True
    if isinstance(v, float) and math.isnan(v):
        return True
    return isinstance(v, str) and v.strip().lower() in MISSING_TOKENS


def _typed_attribute(name: str, raw: list) -> Attribute:
    present = [v for v in raw if not _is_missing(v)]
    try:
        [float(v) for v in present]
        numeric = True
    except (TypeError, ValueError):
        numeric = False
    if numeric and not all(isinstance(v, bool) for v in present):
        vals = np.array([np.nan if _is_missing(v) else float(v) for v in raw], dtype=float)
        return Attribute(name, "numeric", vals)
    vals = np.empty(len(raw), dtype=object)
    for i, v in enumerate(raw):
        vals[i] = None if _is_missing(v) else str(v).strip() if isinstance(v, str) else str(v)
    return Attribute(name, "nominal", vals)


@dataclass(frozen=True)
class Selector:
    """A boolean condition on one attribute.

    Nominal selectors test equality; numeric selectors test membership in
    ``[lo, hi)``, or ``[lo, hi]`` when ``closed`` is set. Missing values
    never match.
    """

    attribute: str
    kind: str  # "eq" or "interval"
    value: str | None = None
    lo: float | None = None
    hi: float | None = None
    closed: bool = False

    def __post_init__(self):
        if self.kind == "interval" and not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    def mask(self, ds: Dataset) -> np.ndarray:
        col = ds.attribute(self.attribute).values
        if self.kind == "eq":
            return np.asarray(col == self.value, dtype=bool)
        with np.errstate(invalid="ignore"):
            upper = col <= self.hi if self.closed else col < self.hi
            return (col >= self.lo) & upper

    def __str__(self) -> str:
        if self.kind == "eq":
            return f"{self.attribute}={self.value}"
        right = "]" if self.closed else ")"
        return f"{self.attribute}=[{_fmt(self.lo)},{_fmt(self.hi)}{right}"


def _fmt(x: float) -> str:
    # 10 significant digits hide quantile round-off like 0.8222000000000007
    return f"{float(x):.10g}"


@dataclass(frozen=True)
class Cover:
    bits: np.ndarray
    n_pos: int
    n_neg: int

    @property
    def size(self) -> int:
        return self.n_pos + self.n_neg

    def __and__(self, other: "Cover") -> np.ndarray:
        return self.bits & other.bits


def make_cover(bits: np.ndarray, labels: np.ndarray) -> Cover:
    n_pos = int(np.count_nonzero(labels[bits]))
    return Cover(bits, n_pos, int(np.count_nonzero(bits)) - n_pos)


def generate_selectors(ds: Dataset, bins: int = 5) -> list[Selector]:
    """Equality selectors for nominal values, equal-frequency intervals for numbers.

    Selectors that match every instance are dropped.
    """
    out: list[Selector] = []
    for a in ds.attributes:
        if a.kind == "nominal":
            values = sorted({v for v in a.values if v is not None})
            cands = [Selector(a.name, "eq", value=v) for v in values]
        else:
            if bins < 2:
                raise ValueError("bins must be >= 2 for numeric attributes")
            present = a.values[~np.isnan(a.values)]
            if len(present) == 0:
                continue
            edges = np.unique(np.quantile(present, np.linspace(0, 1, bins + 1)))
            cands = [
                Selector(a.name, "interval", lo=float(lo), hi=float(hi), closed=(j == len(edges) - 2))
                for j, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]))
            ]
        for s in cands:
            m = s.mask(ds)
            if m.any() and not m.all():
                out.append(s)
    return out


def cover(pattern, ds: Dataset, selectors: Sequence[Selector] | None = None) -> Cover:
    """Cover of a pattern given as selector ids (with ``selectors``) or Selector objects."""
    bits = np.ones(ds.n, dtype=bool)
    for s in pattern:
        sel = selectors[s] if selectors is not None else s
        bits &= sel.mask(ds)
    return make_cover(bits, ds.labels)


def extract(c: Cover, ds: Dataset) -> LabeledScoreSet:
    return LabeledScoreSet(ds.labels[c.bits], ds.predictions[c.bits])


def describe(pattern: Pattern, selectors: Sequence[Selector]) -> str:
    if not pattern:
        return "<all>"
    return " AND ".join(str(selectors[i]) for i in pattern)


# -- CSV / config input ----------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_label_map(text: str | None) -> dict[str, int] | None:
    """Parse ``sick:1, healthy:0``."""
    if not text:
        return None
    mapping = {}
    for item in text.split(","):
        key, _, val = item.rpartition(":")
        if not key or val.strip() not in ("0", "1"):
            raise DataError(f"bad label mapping entry {item.strip()!r}")
        mapping[key.strip()] = int(val)
    return mapping


_DEFAULT_LABELS = {"0": 0, "1": 1, "0.0": 0, "1.0": 1, "false": 0, "true": 1}


def load_csv(
    path: str | Path,
    label_col: str,
    score_col: str,
    label_map: Mapping[str, int] | None = None,
    attributes: Sequence[str] | None = None,
    nominal: Sequence[str] = (),
) -> Dataset:
    """Load a headed CSV; every column other than label and score becomes an attribute.

    ``nominal`` forces columns to be treated as categorical even if they
    parse as numbers.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    for col in (label_col, score_col):
        if col not in header:
            raise DataError(f"{path}: column {col!r} not in header {header}")
    li, si = header.index(label_col), header.index(score_col)
    attr_names = list(attributes) if attributes is not None else [
        h for h in header if h not in (label_col, score_col)
    ]
    for a in attr_names:
        if a not in header:
            raise DataError(f"{path}: attribute column {a!r} not in header")

    body = rows[1:]
    raw_labels, scores = [], []
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
        lab = row[li].strip()
        if _is_missing(lab):
            raise DataError(f"{path}: row {r}, column {label_col!r}: missing label")
        try:
            sc = float(row[si])
        except ValueError:
            raise DataError(f"{path}: row {r}, column {score_col!r}: cannot parse {row[si]!r} as a number")
        if not math.isfinite(sc):
            raise DataError(f"{path}: row {r}, column {score_col!r}: non-finite score {row[si]!r}")
        raw_labels.append(lab)
        scores.append(sc)
    if not body:
        raise DataError(f"{path}: no data rows")

    distinct = sorted(set(raw_labels))
    if label_map is not None:
        unknown = [v for v in distinct if v not in label_map]
        if unknown:
            raise DataError(f"{path}: label values {unknown} missing from mapping; distinct values: {distinct}")
        labels = [label_map[v] for v in raw_labels]
    else:
        lowered = {v: v.lower() for v in distinct}
        if len(distinct) > 2 or not all(l in _DEFAULT_LABELS for l in lowered.values()):
            raise DataError(
                f"{path}: label column {label_col!r} is not binary 0/1; distinct values: {distinct}"
                " (declare label_map)"
            )
        labels = [_DEFAULT_LABELS[v.lower()] for v in raw_labels]

    forced = set(nominal)
    attrs = []
    for name in attr_names:
        j = header.index(name)
        col = [row[j] for row in body]
        a = _typed_attribute(name, col)
        if name in forced and a.kind == "numeric":
            vals = np.array([None if _is_missing(v) else v.strip() for v in col], dtype=object)
            a = Attribute(name, "nominal", vals)
        attrs.append(a)
    return Dataset(tuple(attrs), np.array(labels), np.array(scores))


def write_csv(ds: Dataset, path: str | Path, label_col: str = "y", score_col: str = "yhat") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([a.name for a in ds.attributes] + [label_col, score_col])
        for i in range(ds.n):
            row = []
            for a in ds.attributes:
                v = a.values[i]
                if a.kind == "numeric":
                    row.append("" if np.isnan(v) else repr(float(v)))
                else:
                    row.append("" if v is None else v)
            row += [int(ds.labels[i]), repr(float(ds.predictions[i]))]
            w.writerow(row)
