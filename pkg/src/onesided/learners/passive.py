"""Explore-then-commit learner that never updates after its exploration phase."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_X_y

from ..exceptions import StreamTooShort
from ._base import Decision, OneSidedLearner

__all__ = ["PassiveLearner", "passive_learn", "default_schedule", "sauer_bound", "one_sided_utility"]

MAX_COVER = 50_000
_CHUNK = 2048


def default_schedule(horizon: int) -> tuple[int, int]:
    """``K = ceil(T^(1/3))`` cover points and ``S = ceil(T^(2/3))`` extra exploration."""
    # round before ceil so exact powers (1000**(1/3) == 9.999...) land on the integer
    K = math.ceil(round(horizon ** (1.0 / 3.0), 9))
    S = math.ceil(round(horizon ** (2.0 / 3.0), 9))
    return K, S


def sauer_bound(K: int, d: int) -> int:
    """Maximum number of threshold dichotomies of ``K`` points in ``d`` dimensions."""
    return sum(math.comb(K, i) for i in range(min(K, d + 1) + 1))


def one_sided_utility(y, actions, cutoff) -> np.ndarray:
    """Empirical one-sided loss ``|y - c| * 1{1{y > c} != a}`` per item."""
    y = np.asarray(y, dtype=float)
    return np.abs(y - cutoff) * ((y > cutoff) != np.asarray(actions, dtype=bool))


class PassiveLearner(OneSidedLearner):
    """Accept the first ``K + S`` items, then commit to one threshold rule.

    The strategy class is discretised by drawing ``cover_samples`` parameters
    uniformly from the radius-``M`` ball and keeping one representative per
    distinct decision vector on the first ``K`` covariates. The representative
    with the smallest empirical one-sided loss on all ``K + S`` observed
    pairs is frozen and used as ``1{mu(x' beta) >= c}`` from then on.

    Warm-start data passed to :meth:`fit` only fixes the dimension; the
    learner collects its own exploration sample.

    Parameters
    ----------
    link, cutoff, M : as for the other learners
    horizon : int
        Used for the default ``K`` and ``S``.
    K, S : int or None
    cover_samples : int or None
        Defaults to ``10 * sauer_bound(K, d)`` capped at 50,000.
    random_state : int, Generator or None
    """

    def __init__(self, link="identity", cutoff=0.5, M=1.0, horizon=1000, K=None, S=None,
                 cover_samples=None, random_state=None):
        self.link = link
        self.cutoff = cutoff
        self.M = M
        self.horizon = horizon
        self.K = K
        self.S = S
        self.cover_samples = cover_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        if y is None:
            y = np.zeros(len(X))
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        d = X.shape[1]
        K0, S0 = default_schedule(self.horizon)
        self.K_ = K0 if self.K is None else int(self.K)
        self.S_ = S0 if self.S is None else int(self.S)
        if self.cover_samples is None:
            self.cover_samples_ = min(MAX_COVER, 10 * sauer_bound(self.K_, d))
        else:
            self.cover_samples_ = int(self.cover_samples)
        self.link_ = self._link()
        self.n_features_in_ = d
        self.rng_ = np.random.default_rng(self.random_state)
        self._X = []
        self._y = []
        self.coef_ = None
        self.cover_ = None
        self.t_ = 0
        self.n_seen_ = 0
        return self

    @property
    def committed_(self) -> bool:
        return self.coef_ is not None

    def _sample_ball(self, n, d):
        g = self.rng_.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.rng_.random(n) ** (1.0 / d)
        return self.M * r[:, None] * g

    def _rule(self, X, betas):
        # (n_items, n_betas) accept matrix for 1{mu(x' beta) >= c}
        return self.link_.mu(X @ betas.T) >= self.cutoff

    def build_cover(self, X_cover) -> np.ndarray:
        """Deduplicated parameter draws, one per decision vector on ``X_cover``."""
        d = X_cover.shape[1]
        betas = self._sample_ball(self.cover_samples_, d)
        patterns = self._rule(X_cover, betas).T
        _, first = np.unique(np.packbits(patterns, axis=1), axis=0, return_index=True)
        return betas[np.sort(first)]

    def _commit(self):
        X = np.asarray(self._X)
        y = np.asarray(self._y)
        self.cover_ = self.build_cover(X[: self.K_])
        best, best_loss = None, math.inf
        for start in range(0, len(self.cover_), _CHUNK):
            chunk = self.cover_[start : start + _CHUNK]
            acts = self._rule(X, chunk)
            losses = one_sided_utility(y[:, None], acts, self.cutoff).sum(axis=0)
            k = int(np.argmin(losses))
            if losses[k] < best_loss:
                best, best_loss = chunk[k], float(losses[k])
        self.coef_ = best.copy()
        self.empirical_loss_ = best_loss
        self._X, self._y = [], []

    def run_round(self, X, reveal) -> Decision:
        X = self._validate_batch(X)
        self.t_ += 1
        n = X.shape[0]
        explore = self.K_ + self.S_
        accept = np.zeros(n, dtype=bool)
        scores = np.full(n, np.nan)
        for j in range(n):
            if self.coef_ is None:
                accept[j] = True
                self._X.append(X[j])
                self._y.append(float(reveal(j)))
                self.n_seen_ += 1
                if self.n_seen_ == explore:
                    self._commit()
            else:
                scores[j] = float(self.link_.mu(X[j] @ self.coef_))
                accept[j] = scores[j] >= self.cutoff
                if accept[j]:
                    reveal(j)  # the label is shown but never used
                self.n_seen_ += 1
        return Decision(accept, scores, np.zeros(n))

    def finish(self):
        """Raise if the stream ended before the exploration phase completed."""
        if self.coef_ is None:
            raise StreamTooShort(f"stream ended after {self.n_seen_} items; K+S = {self.K_ + self.S_}")

    def predict(self, X) -> np.ndarray:
        X = self._validate_batch(X)
        if self.coef_ is None:
            return np.ones(X.shape[0], dtype=bool)
        return self.link_.mu(X @ self.coef_) >= self.cutoff


def passive_learn(stream, K=None, S=None, cover_samples=None, rng=None):
    """Run a :class:`PassiveLearner` over a whole stream.

    Returns the frozen parameter and the per-round decisions.
    """
    learner = PassiveLearner(link=stream.oracle.link.name, cutoff=stream.oracle.cutoff, M=stream.M,
                             horizon=stream.total_items, K=K, S=S, cover_samples=cover_samples,
                             random_state=rng)
    learner.fit(stream.warm_X)
    if stream.total_items < learner.K_ + learner.S_:
        raise StreamTooShort(f"stream has {stream.total_items} items; K+S = {learner.K_ + learner.S_}")
    trace = [learner.run_round(X, y.__getitem__) for X, y in stream.rounds()]
    return learner.coef_.copy(), trace
