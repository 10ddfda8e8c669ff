"""Datasets, cross-validation folds, and error metrics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    name: str = "dataset"
    n_columns: int | None = None  # columns in the source file, target included

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.target, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"need n >= 1 and d >= 1, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DatasetError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DatasetError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, rows, name: str | None = None) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.target[rows], name or self.name, self.n_columns)


@dataclass(frozen=True)
class FoldAssignment:
    folds: np.ndarray
    k: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices ``(train, test)`` with ``fold`` held out."""
        test = np.flatnonzero(self.folds == fold)
        train = np.flatnonzero(self.folds != fold)
        return train, test

    def sizes(self) -> list[int]:
        return np.bincount(self.folds, minlength=self.k).tolist()

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "folds": self.folds.tolist()})


def _parse_float(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v


def load_csv(path, target_column: int | str = "last", name: str | None = None) -> Dataset:
    """Load a numeric CSV; the first row is treated as a header if any cell is non-numeric."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    first = rows[0]
    if any(_parse_float(c.strip()) is None for c in first):
        rows = rows[1:]
        if not rows:
            raise DatasetError(f"{path}: header but no data rows")
        header_offset = 2
    else:
        header_offset = 1
    width = len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DatasetError(
                f"{path}: line {i + header_offset} has {len(row)} columns, expected {width}"
            )
        for j, cell in enumerate(row):
            v = _parse_float(cell.strip())
            if v is None or not math.isfinite(v):
                raise DatasetError(
                    f"{path}: non-numeric cell {cell!r} at line {i + header_offset}, column {j + 1}"
                )
            values[i, j] = v
    if width < 2:
        raise DatasetError(f"{path}: need at least one feature column and a target column")
    if target_column == "last":
        tcol = width - 1
    else:
        tcol = int(target_column)
        if tcol < 0:
            tcol += width
        if not 0 <= tcol < width:
            raise DatasetError(f"target column {target_column} out of range for {width} columns")
    keep = [j for j in range(width) if j != tcol]
    return Dataset(values[:, keep], values[:, tcol], name or path.stem, n_columns=width)


def kfold_split(dataset: Dataset | int, k: int, seed: int | None = 0) -> FoldAssignment:
    """Shuffle rows under ``seed`` then deal them round-robin into ``k`` folds."""
    n = dataset if isinstance(dataset, int) else dataset.n
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows n={n}")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=int)
    folds[order] = np.arange(n) % k
    return FoldAssignment(folds, k)


def target_std(dataset: Dataset | np.ndarray) -> float:
    """Population standard deviation (divisor n) of the target."""
    y = dataset.target if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    if y.shape[0] < 2:
        raise ValueError("target_std needs at least two values")
    return float(np.std(y))


def rmse(predicted, target) -> float:
    p = np.asarray(predicted, dtype=float)
    y = np.asarray(target, dtype=float)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise ValueError("rmse of empty vectors")
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.sqrt(np.mean((p - y) ** 2)))


# --- synthetic problems ----------------------------------------------------

SYNTHETIC = ("prod-sum", "aq-mix", "poly3")


def make_synthetic(
    name: str = "prod-sum", n: int = 200, noise: float = 0.0, seed: int | None = 0
) -> Dataset:
    """Small regression problems for desk-scale runs.

    ``prod-sum``: ``y = x0*x1 + x2``; ``aq-mix``: ``y = x0 / sqrt(1 + x1^2) + 0.5*x2*x3``;
    ``poly3``: ``y = x0^3 - 2*x0*x1 + 0.3``. Features are uniform on ``[-2, 2]``.
    """
    rng = np.random.default_rng(seed)
    if name == "prod-sum":
        X = rng.uniform(-2, 2, size=(n, 3))
        y = X[:, 0] * X[:, 1] + X[:, 2]
    elif name == "aq-mix":
        X = rng.uniform(-2, 2, size=(n, 4))
        y = X[:, 0] / np.sqrt(1 + X[:, 1] ** 2) + 0.5 * X[:, 2] * X[:, 3]
    elif name == "poly3":
        X = rng.uniform(-2, 2, size=(n, 2))
        y = X[:, 0] ** 3 - 2 * X[:, 0] * X[:, 1] + 0.3
    else:
        raise DatasetError(f"unknown synthetic problem {name!r}; choose from {SYNTHETIC}")
    if noise:
        y = y + rng.normal(0.0, noise, size=n)
    return Dataset(X, y, name)


def resolve_dataset(spec: str, target_column: int | str = "last") -> Dataset:
    """``synthetic:NAME[:N[:NOISE[:SEED]]]`` or a CSV path."""
    if spec.startswith("synthetic:"):
        parts = spec.split(":")[1:]
        name = parts[0]
        n = int(parts[1]) if len(parts) > 1 else 200
        noise = float(parts[2]) if len(parts) > 2 else 0.0
        seed = int(parts[3]) if len(parts) > 3 else 0
        return make_synthetic(name, n, noise, seed)
    return load_csv(spec, target_column)
