"""Input validation helpers shared by the estimator and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigError, WindowError


def check_states(X, n_nodes: int | None = None) -> np.ndarray:
    """2-D float array of nodal states, one row per sample.

    A single 1-D profile is promoted to one row.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    X = check_array(X, dtype=float, ensure_min_features=3)
    if n_nodes is not None and X.shape[1] != n_nodes:
        raise ValueError(
            f"X has {X.shape[1]} nodes per sample, but the controller was fitted with {n_nodes}"
        )
    return X


def check_window(window) -> tuple:
    try:
        a, b = (float(v) for v in window)
    except (TypeError, ValueError) as exc:
        raise WindowError(f"window must be a pair (a, b), got {window!r}") from exc
    if not (0.0 <= a < b <= 1.0):
        raise WindowError(f"window must satisfy 0 <= a < b <= 1, got [{a}, {b}]")
    return a, b


def check_finite(name: str, value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a real number, got {value!r}") from exc
    if not np.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return value
