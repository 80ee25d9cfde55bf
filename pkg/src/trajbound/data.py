"""Datasets: the synthetic teacher-sign task, label noise, splits, CSV loading.

The toy task draws x ~ N(0, I_d) and a fixed teacher direction w_t ~ N(0, I_d),
then labels y = 1 if w_t'x > 0 else 0. Train and test sets come from disjoint
RNG substreams of the same master seed. The holdout split exists because the
package estimates population quantities on a held-out set everywhere a true
data distribution would be needed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataParseError, DataSchemaError, InvalidArgumentError
from .numerics import (
    STREAM_NOISE,
    STREAM_SPLIT,
    STREAM_TEACHER,
    STREAM_TEST_X,
    STREAM_TRAIN_X,
    RngStream,
)


@dataclass(frozen=True)
class Dataset:
    """n x d feature matrix with a length-n label vector."""

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise InvalidArgumentError(
                f"features must be a nonempty 2-D matrix, got shape {feats.shape}"
            )
        if labs.ndim != 1 or labs.shape[0] != feats.shape[0]:
            raise InvalidArgumentError(
                f"labels length {labs.shape} does not match {feats.shape[0]} rows"
            )
        if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(labs)):
            raise InvalidArgumentError("dataset entries must all be finite")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ToyConfig:
    n_train: int = 100
    n_test: int = 1000
    dim: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 2:
            raise InvalidArgumentError(f"n_train must be >= 2, got {self.n_train}")
        if self.n_test < 1:
            raise InvalidArgumentError(f"n_test must be >= 1, got {self.n_test}")
        if self.dim < 1:
            raise InvalidArgumentError(f"dim must be >= 1, got {self.dim}")


def teacher_labels(features: np.ndarray, teacher: np.ndarray) -> np.ndarray:
    """Binary labels from the teacher direction: 1 where w_t'x > 0, else 0.

    Ties at exactly zero map to 0 (measure zero under the Gaussian draw).
    """
    return (features @ teacher > 0.0).astype(np.float64)


def generate_toy(cfg: ToyConfig) -> tuple[Dataset, Dataset, np.ndarray]:
    """Toy train/test pair plus the teacher vector that labeled them."""
    teacher = RngStream(cfg.seed, STREAM_TEACHER).generator().standard_normal(cfg.dim)
    x_train = RngStream(cfg.seed, STREAM_TRAIN_X).generator().standard_normal(
        (cfg.n_train, cfg.dim)
    )
    x_test = RngStream(cfg.seed, STREAM_TEST_X).generator().standard_normal(
        (cfg.n_test, cfg.dim)
    )
    train = Dataset(x_train, teacher_labels(x_train, teacher), name="toy_train")
    test = Dataset(x_test, teacher_labels(x_test, teacher), name="toy_test")
    return train, test, teacher


def inject_label_noise(data: Dataset, flip_fraction: float, rng: RngStream) -> Dataset:
    """Flip 0<->1 on exactly round(flip_fraction * n) uniformly chosen labels.

    An exact count (rather than i.i.d. coin flips) keeps sweep-to-sweep
    variance out of noise-level comparisons.
    """
    if not 0.0 <= flip_fraction <= 1.0:
        raise InvalidArgumentError(f"flip_fraction must be in [0, 1], got {flip_fraction}")
    labels = data.labels
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise InvalidArgumentError("label noise needs binary {0,1} labels")
    n_flip = int(np.rint(flip_fraction * data.n))
    if n_flip == 0:
        return Dataset(data.features, labels, name=data.name)
    idx = rng.generator().choice(data.n, size=n_flip, replace=False)
    flipped = labels.copy()
    flipped[idx] = 1.0 - flipped[idx]
    return Dataset(data.features, flipped, name=f"{data.name}_flip{flip_fraction:g}")


def split_train_holdout(data: Dataset, holdout_fraction: float,
                        rng: RngStream) -> tuple[Dataset, Dataset]:
    """Disjoint uniform partition; the holdout gets round(fraction * n) rows."""
    if not 0.0 < holdout_fraction < 1.0:
        raise InvalidArgumentError(
            f"holdout_fraction must be strictly inside (0, 1), got {holdout_fraction}"
        )
    n_hold = int(np.rint(holdout_fraction * data.n))
    if n_hold < 1 or data.n - n_hold < 1:
        raise InvalidArgumentError(
            f"split of n={data.n} at fraction {holdout_fraction} empties one side"
        )
    perm = rng.generator().permutation(data.n)
    hold_idx = np.sort(perm[:n_hold])
    keep_idx = np.sort(perm[n_hold:])
    s = Dataset(data.features[keep_idx], data.labels[keep_idx], name=f"{data.name}_S")
    s_prime = Dataset(data.features[hold_idx], data.labels[hold_idx],
                      name=f"{data.name}_Sprime")
    return s, s_prime


def load_csv_dataset(path: str, label_column: str) -> Dataset:
    """Read a comma-separated file with a header row; one column holds labels."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataSchemaError(f"{path}: file is empty, expected a header row")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataSchemaError(
                f"{path}: label column {label_column!r} not found in header {header}"
            )
        label_pos = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_pos]
        if not feature_names:
            raise DataSchemaError(f"{path}: no feature columns besides {label_column!r}")

        rows, labels = [], []
        for r, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataSchemaError(
                    f"{path}: row {r} has {len(row)} cells, header has {len(header)}"
                )
            parsed = []
            for i, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataParseError(r, header[i], cell.strip()) from None
            labels.append(parsed[label_pos])
            rows.append([v for i, v in enumerate(parsed) if i != label_pos])

    if not rows:
        raise DataSchemaError(f"{path}: header only, no data rows")
    return Dataset(np.array(rows), np.array(labels), name=path)


def noise_stream(seed: int) -> RngStream:
    return RngStream(seed, STREAM_NOISE)


def split_stream(seed: int) -> RngStream:
    return RngStream(seed, STREAM_SPLIT)
