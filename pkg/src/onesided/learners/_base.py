from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ..glm import get_link

__all__ = ["Decision", "OneSidedLearner"]


@dataclass(frozen=True)
class Decision:
    """Per-item outcome of one round.

    Attributes
    ----------
    accept : ndarray of bool
        Whether each batch item was accepted (and its label revealed).
    score : ndarray of float
        Point estimate ``mu(x' beta_t)`` used for the decision.
    bonus : ndarray of float
        Additive term actually applied to the score.
    """

    accept: np.ndarray
    score: np.ndarray
    bonus: np.ndarray

    def __len__(self):
        return len(self.accept)

    @property
    def n_accepted(self) -> int:
        return int(np.count_nonzero(self.accept))


class _RowBuffer:
    """Growable (X, y) store with amortised O(1) appends."""

    def __init__(self, X, y):
        X = np.asarray(X, dtype=float)
        n, d = X.shape
        cap = max(16, 2 * n)
        self._X = np.empty((cap, d))
        self._y = np.empty(cap)
        self._X[:n] = X
        self._y[:n] = y
        self.n = n

    def append(self, x, y):
        if self.n == len(self._y):
            self._X = np.concatenate([self._X, np.empty_like(self._X)])
            self._y = np.concatenate([self._y, np.empty_like(self._y)])
        self._X[self.n] = x
        self._y[self.n] = y
        self.n += 1

    @property
    def X(self):
        return self._X[: self.n]

    @property
    def y(self):
        return self._y[: self.n]


class OneSidedLearner(BaseEstimator):
    """Common surface of every policy.

    ``fit(X, y)`` warm-starts on a labeled sample; ``run_round(X, reveal)``
    decides on one batch, calling ``reveal(j)`` only for accepted items.
    """

    def _link(self):
        return get_link(self.link)

    def _validate_batch(self, X):
        check_is_fitted(self, "n_features_in_")
        if isinstance(X, np.ndarray) and X.ndim == 2 and X.dtype == np.float64 and X.shape[0] > 0:
            # per-round hot path: same checks as check_array, minus the conversions
            if not np.isfinite(X).all():
                raise ValueError("Input X contains NaN or infinity.")
        else:
            X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def run_round(self, X, reveal) -> Decision:  # pragma: no cover - abstract
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError
