"""Dataset construction: synthetic generators and CSV ingestion.

Classification labels become zero-mean regression targets: ``1 - 1/C`` at
the true class and ``-1/C`` elsewhere. Features are standardised per column.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import LabelOutOfRange, MalformedCsv
from .model import Dataset


def shifted_one_hot(labels, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelOutOfRange(f"labels must lie in [0, {num_classes})")
    Y = np.full((labels.shape[0], num_classes), -1.0 / num_classes)
    Y[np.arange(labels.shape[0]), labels.astype(int)] += 1.0
    return Y


def standardize(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - X.mean(axis=0)) / sd


def synthetic_1d(noise: float = 0.01) -> Dataset:
    """Three-point 1-d regression set."""
    X = np.array([[-1.0], [0.2], [1.1]])
    Y = np.array([[-0.5], [0.6], [0.1]])
    return Dataset(X, Y, noise, "synthetic-1d")


def gaussian_blobs(n: int, input_dim: int, num_classes: int, seed: int = 0, noise: float = 0.01, spread: float = 2.0):
    """Labelled isotropic Gaussian clusters with standardised features."""
    rng = np.random.default_rng(seed)
    centres = spread * rng.standard_normal((num_classes, input_dim))
    labels = np.arange(n) % num_classes
    rng.shuffle(labels)
    X = centres[labels] + rng.standard_normal((n, input_dim))
    return Dataset(standardize(X), shifted_one_hot(labels, num_classes), noise, f"gaussian-blobs(n={n},d={input_dim},C={num_classes},seed={seed})")


def linear_regression(n: int, input_dim: int, seed: int = 0, noise: float = 0.01, outputs: int = 1) -> Dataset:
    """Unit-norm Gaussian input rows with targets from a standard normal weight draw."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, input_dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    W = rng.standard_normal((input_dim, outputs))
    Y = X @ W + np.sqrt(noise) * rng.standard_normal((n, outputs))
    return Dataset(X, Y, noise, f"linear(n={n},d={input_dim},seed={seed})")


def load_csv(
    path,
    noise: float = 0.01,
    mode: str = "classification",
    label_column: int = -1,
    num_classes: int | None = None,
    target_columns=None,
) -> Dataset:
    """Read a header-row CSV.

    ``classification``: one integer label column (``label_column``), all other
    columns numeric features. ``regression``: ``target_columns`` (default: the
    last column) are passed through unchanged.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise MalformedCsv(str(exc)) from None
    if len(rows) < 2:
        raise MalformedCsv(f"{path}: need a header and at least one data row")
    header, body = rows[0], rows[1:]
    try:
        table = np.array([[float(v) for v in r] for r in body if r], dtype=float)
    except ValueError as exc:
        raise MalformedCsv(f"{path}: {exc}") from None
    if table.ndim != 2 or table.shape[1] != len(header):
        raise MalformedCsv(f"{path}: ragged rows")
    ncol = table.shape[1]
    if mode == "classification":
        col = label_column % ncol
        raw = table[:, col]
        if np.any(raw != np.round(raw)):
            raise MalformedCsv("label column must hold integers")
        labels = raw.astype(int)
        C = num_classes or int(labels.max()) + 1
        X = np.delete(table, col, axis=1)
        Y = shifted_one_hot(labels, C)
    elif mode == "regression":
        cols = [c % ncol for c in (target_columns or [-1])]
        Y = table[:, cols]
        X = np.delete(table, cols, axis=1)
    else:
        raise ValueError(f"unknown csv mode {mode!r}")
    return Dataset(standardize(X), Y, noise, f"csv:{path.name}")
