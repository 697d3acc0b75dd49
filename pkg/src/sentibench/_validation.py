"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class ShapeError(ValueError):
    pass


class TrainingError(ValueError):
    """Raised when a trainer is handed data it cannot learn from."""


def as_token_lists(docs) -> list:
    """Accept TokenDocs, token sequences or whitespace-joined strings."""
    out = []
    for d in docs:
        tokens = getattr(d, "tokens", d)
        if isinstance(tokens, str):
            tokens = tokens.split()
        out.append(list(tokens))
    return out


def labels_of(docs) -> np.ndarray:
    return np.array([d.label for d in docs], dtype=np.int64)


def check_binary_labels(y, n_rows: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {y.shape}")
    if n_rows is not None and y.shape[0] != n_rows:
        raise ShapeError(f"X has {n_rows} rows but y has {y.shape[0]} labels")
    if y.size and not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.int64)


def check_two_classes(y: np.ndarray) -> None:
    if np.unique(y).size < 2:
        raise TrainingError("training labels contain a single class")


def check_matrix(X, n_features: int | None = None):
    """Return a float64 CSR matrix or 2-D ndarray with finite entries."""
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        data = X.data
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ShapeError(f"expected a 2-D matrix, got shape {X.shape}")
        data = X
    if not np.isfinite(data).all():
        raise ValueError("input contains NaN or infinity")
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeError(f"expected {n_features} features, got {X.shape[1]}")
    return X
