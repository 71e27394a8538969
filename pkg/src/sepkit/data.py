"""Labeled feature datasets, reproducible RNG streams, and CSV I/O.

A dataset is a dense matrix of feature vectors, each row tagged as coming
from correct operation (label 0) or from an error (label 1). Files are CSV
with a mandatory header ``label,f0,...,f{n-1}``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, ValidationError

CORRECT = 0
ERROR = 1


@dataclass(frozen=True)
class RngSpec:
    """Counter-based, splittable random stream.

    Identical ``(seed, stream)`` reproduce identical sample sequences on any
    machine and under any parallel schedule. ``path`` is an internal
    substream suffix used when an operation needs several independent
    streams (k-means restarts, Monte Carlo trials, ...).
    """

    seed: int
    stream: int = 0
    path: tuple[int, ...] = field(default=())

    def child(self, *indices: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream, self.path + tuple(indices))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self.path))
        return np.random.Generator(np.random.Philox(ss))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """Immutable matrix of n-dimensional feature vectors with 0/1 labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int8)
        if feats.ndim != 2 or feats.shape[1] < 1:
            raise ValidationError("features must be a 2-D matrix with >= 1 column")
        if labels.shape != (feats.shape[0],):
            raise ValidationError("labels must align with feature rows")
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features contain NaN or Inf")
        if not np.isin(labels, (CORRECT, ERROR)).all():
            raise ValidationError("labels must be 0 (correct) or 1 (error)")
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def error_mask(self) -> np.ndarray:
        return self.labels == ERROR

    @property
    def n_errors(self) -> int:
        return int(self.error_mask.sum())

    def error_rows(self) -> np.ndarray:
        return self.features[self.error_mask]

    def correct_rows(self) -> np.ndarray:
        return self.features[~self.error_mask]


def _expected_header(n: int) -> list[str]:
    return ["label"] + [f"f{i}" for i in range(n)]


def load_dataset(path, format: str = "csv") -> LabeledDataset:
    """Read a ``label,f0,...,f{n-1}`` CSV; n is inferred from the header.

    Row order is preserved. Malformed rows (wrong arity, non-numeric values,
    NaN/Inf) raise :class:`DataFormatError` naming the offending data row
    (1-based, header excluded).
    """
    if format != "csv":
        raise ValidationError(f"unsupported format: {format!r}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        n = len(header) - 1
        if n < 1 or header != _expected_header(n):
            raise DataFormatError(f"{path}: header must be label,f0,...,f{{n-1}}")
        labels, rows = [], []
        for i, row in enumerate(reader, start=1):
            if len(row) != n + 1:
                raise DataFormatError(f"{path}: row {i}: expected {n + 1} fields, got {len(row)}")
            if row[0] not in ("0", "1"):
                raise DataFormatError(f"{path}: row {i}: label must be 0 or 1, got {row[0]!r}")
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError:
                raise DataFormatError(f"{path}: row {i}: non-numeric feature value") from None
            if not all(np.isfinite(vals)):
                raise DataFormatError(f"{path}: row {i}: NaN or Inf feature value")
            labels.append(int(row[0]))
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return LabeledDataset(np.array(rows, dtype=np.float64), np.array(labels))


def save_dataset(dataset: LabeledDataset, path) -> None:
    """Write the dataset as CSV with 17-significant-digit decimals."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_expected_header(dataset.n))
        for label, row in zip(dataset.labels, dataset.features):
            writer.writerow([int(label)] + [f"{v:.17g}" for v in row])


def sample_product_cube(n: int, count: int, rng: RngSpec) -> LabeledDataset:
    """i.i.d. uniform samples from [-1, 1]^n, all labeled correct.

    Per-coordinate mean is 0 and variance 1/3, so the expected squared
    radius of a sample is n/3.
    """
    if n < 1 or count < 1:
        raise ValidationError("n and count must be >= 1")
    feats = rng.generator().uniform(-1.0, 1.0, size=(count, n))
    return LabeledDataset(feats, np.zeros(count, dtype=np.int8))
