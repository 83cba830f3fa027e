"""CSV ingestion, label normalization, min-max scaling and stratified splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with labels in {-1, +1}.

    Arrays are copied and made read-only on construction so a dataset can be
    shared between concurrent tuning workers.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if x.ndim != 2:
            raise DataError(f"features must be a 2-D matrix, got shape {x.shape}")
        if x.shape[1] < 1:
            raise DataError("features must have at least one column")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise DataError(
                f"labels must be a vector of length {x.shape[0]}, got shape {y.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise DataError("features contain non-finite values")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise DataError("labels must be -1 or +1")
        object.__setattr__(self, "features", _frozen(x))
        object.__setattr__(self, "labels", _frozen(y))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.labels > 0))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self.labels < 0))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx])

    def require_trainable(self) -> None:
        """Raise unless the dataset can be used to train a binary model."""
        if self.n < 2:
            raise DataError(f"training needs at least 2 points, got {self.n}")
        if self.n_pos < 1 or self.n_neg < 1:
            raise DataError(
                f"training needs both classes (n_pos={self.n_pos}, n_neg={self.n_neg})"
            )


@dataclass(frozen=True)
class ScalingParams:
    """Per-feature minimum and maximum of the data the scaling was fit on."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo, hi = _frozen(self.min), _frozen(self.max)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DataError("scaling min/max must be vectors of equal length")
        if np.any(hi < lo):
            raise DataError("scaling max must be >= min for every feature")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def identity(cls, p: int) -> "ScalingParams":
        return cls(np.zeros(p), np.ones(p))

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.min.shape[0]:
            raise DataError(
                f"expected {self.min.shape[0]} features, got {x.shape[-1]}"
            )
        span = self.max - self.min
        constant = span == 0
        out = (x - self.min) / np.where(constant, 1.0, span)
        # constant features carry no information; map them to 0
        return np.where(constant, 0.0, out)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignments", np.array(self.assignments, dtype=int))
        self.assignments.flags.writeable = False

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


# ---------------------------------------------------------------------------
# CSV


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file (a header row is required)")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(
                f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}"
            )
    return header, body


def _resolve_column(header: Sequence[str], column) -> int:
    if isinstance(column, int) and not isinstance(column, bool):
        idx = column
    elif column in header:
        return list(header).index(column)
    else:
        try:
            idx = int(column)
        except (TypeError, ValueError):
            raise DataError(f"label column {column!r} not found in header {list(header)}")
    if idx < 0:
        idx += len(header)
    if not 0 <= idx < len(header):
        raise DataError(f"label column index {column} out of range for {len(header)} columns")
    return idx


def _parse_features(path, header, body, skip: int | None) -> np.ndarray:
    cols = [c for c in range(len(header)) if c != skip]
    x = np.empty((len(body), len(cols)))
    for r, row in enumerate(body):
        for k, c in enumerate(cols):
            cell = row[c].strip()
            try:
                x[r, k] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at row {r + 1} "
                    f"(line {r + 2}), column {header[c]!r}"
                ) from None
            if not math.isfinite(x[r, k]):
                raise DataError(
                    f"{path}: non-finite value at row {r + 1}, column {header[c]!r}"
                )
    return x


def _label_order_key(value: str):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def load_csv(path, label_column) -> Dataset:
    """Load a labelled dataset from a headed CSV file.

    The label column must contain exactly two distinct values. The smaller
    one (numerically when both parse as numbers, else lexicographically)
    becomes -1 and the larger +1. Row order is preserved.
    """
    header, body = _read_table(path)
    if not body:
        raise DataError(f"{path}: no data rows")
    lab = _resolve_column(header, label_column)
    if len(header) < 2:
        raise DataError(f"{path}: need at least one feature column besides the label")
    raw = [row[lab].strip() for row in body]
    values = sorted(set(raw), key=_label_order_key)
    if len(values) != 2:
        raise DataError(
            f"{path}: label column {header[lab]!r} must have exactly 2 distinct values, "
            f"found {len(values)}: {values[:5]}"
        )
    y = np.where(np.array(raw) == values[1], 1.0, -1.0)
    x = _parse_features(path, header, body, lab)
    return Dataset(x, y)


def load_features(path, label_column=None) -> np.ndarray:
    """Load an unlabelled feature matrix; the label column is dropped if named.

    A header-only file yields a matrix with zero rows.
    """
    header, body = _read_table(path)
    skip = None if label_column is None else _resolve_column(header, label_column)
    x = _parse_features(path, header, body, skip)
    if not body:
        x = x.reshape(0, len(header) - (skip is not None))
    return x


def write_csv(path, features, labels, names=None, label_name="y") -> None:
    x = np.asarray(features, dtype=float)
    names = names or [f"x{k}" for k in range(x.shape[1])]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, label_name])
        for row, lab in zip(x, labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


# ---------------------------------------------------------------------------
# scaling


def fit_scaling(d: Dataset) -> ScalingParams:
    return ScalingParams(d.features.min(axis=0), d.features.max(axis=0))


def apply_scaling(d: Dataset, s: ScalingParams) -> Dataset:
    """Map features with ``(x - min) / (max - min)``. Out-of-range values are not clipped."""
    return Dataset(s.transform(d.features), d.labels)


# ---------------------------------------------------------------------------
# splits


def stratified_kfold(d: Dataset, k: int, seed: int) -> FoldPlan:
    """Assign every point to one of ``k`` folds, stratified by class.

    Points of each class are shuffled and dealt round-robin, with the dealer
    position carried over from one class to the next so fold sizes also stay
    within one point of each other.
    """
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    assignments = np.empty(d.n, dtype=int)
    pos = 0
    for label in (-1.0, 1.0):
        idx = np.flatnonzero(d.labels == label)
        if idx.size < k:
            raise DataError(
                f"class {int(label):+d} has {idx.size} members, fewer than k={k}"
            )
        idx = rng.permutation(idx)
        assignments[idx] = (pos + np.arange(idx.size)) % k
        pos = (pos + idx.size) % k
    return FoldPlan(k, assignments, seed)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def validation_split(d: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Carve a stratified validation set of ``round(fraction * N)`` points.

    The per-class quota follows largest-remainder rounding, adjusted so both
    classes appear in the validation set whenever it has room for two points.
    The training part must keep both classes.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must lie in (0, 1), got {fraction}")
    total = max(1, _round_half_up(fraction * d.n))
    classes = [(-1.0, d.n_neg), (1.0, d.n_pos)]
    exact = [fraction * cnt for _, cnt in classes]
    quota = [int(math.floor(e)) for e in exact]
    # hand out the remaining slots by largest remainder, larger class first on ties
    order = sorted(range(2), key=lambda c: (-(exact[c] - quota[c]), -classes[c][1], c))
    for c in order:
        if sum(quota) >= total:
            break
        quota[c] += 1
    while sum(quota) > total:
        c = max(range(2), key=lambda c: quota[c])
        quota[c] -= 1
    if total >= 2:
        for c in range(2):
            other = 1 - c
            if quota[c] == 0 and classes[c][1] > 1 and quota[other] > 1:
                quota[c] += 1
                quota[other] -= 1
    for c, (label, cnt) in enumerate(classes):
        if cnt - quota[c] < 1:
            raise DataError(
                f"validation split of {total} points leaves class {int(label):+d} "
                "empty in the training part"
            )
    rng = np.random.default_rng(seed)
    val_idx = []
    for c, (label, _) in enumerate(classes):
        idx = rng.permutation(np.flatnonzero(d.labels == label))
        val_idx.append(idx[: quota[c]])
    val = np.sort(np.concatenate(val_idx))
    mask = np.ones(d.n, dtype=bool)
    mask[val] = False
    return d.subset(np.flatnonzero(mask)), d.subset(val)


def train_test_split(d: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified holdout split; same rounding rules as :func:`validation_split`."""
    return validation_split(d, test_fraction, seed)
