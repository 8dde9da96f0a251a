"""Projected SGD with an optimistic acceptance bonus under one-sided feedback."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_X_y

from ..glm import GlmProblem, LinkKind, fit_mle
from ._base import Decision, OneSidedLearner

__all__ = ["SgdLearner", "project_slab"]


def project_slab(beta, x, radius: float) -> np.ndarray:
    """Euclidean projection of ``beta`` onto ``{b : |x' b| <= radius}``."""
    z = float(x @ beta)
    if abs(z) <= radius:
        return beta
    return beta - ((z - math.copysign(radius, z)) / float(x @ x)) * x


class SgdLearner(OneSidedLearner):
    """One gradient step per accepted item, gated by a shrinking distance bound.

    An item is rejected when ``mu(x' beta_t) + s_t < c`` with
    ``s_t = L (1 + delta) d_t ||x||``. On acceptance the label is compared to
    the prediction: within ``accuracy + noise_bound`` nothing changes;
    otherwise ``beta`` takes a step of size ``1 / (L ||x||^2)``, is projected
    onto the slab ``|x' beta| <= omega_radius`` and the bound shrinks as
    ``d_{t+1}^2 = d_t^2 - accuracy^2 / (||x||^2 L^2)`` (floored at zero).

    Parameters
    ----------
    link, cutoff : as for the other learners
    accuracy : float
        Residual threshold ``alpha`` that triggers an update.
    noise_bound : float
        Almost-sure bound on ``|epsilon_t|`` (zero for noiseless streams).
    delta : float
        Slack factor in the bonus. Picking ``1/delta = rho - exp(-zeta^2 /
        (2 L^2 ||beta*||^2 sigma^2))`` targets misclassification rate ``rho``
        at cutoff ``E[mu(x' beta*)] - zeta``.
    d0 : float or None
        Initial bound on ``||beta_0 - beta*||``; defaults to ``2 M``.
    beta0 : array-like or None
        Initial parameter; defaults to the warm-start fit clipped to the
        ``M``-ball.
    M : float
    omega_radius : float or None
        Slab half-width; ``None`` means no projection.
    """

    def __init__(self, link="identity", cutoff=0.0, accuracy=0.1, noise_bound=0.0, delta=1.0, d0=None,
                 beta0=None, M=1.0, omega_radius=None):
        self.link = link
        self.cutoff = cutoff
        self.accuracy = accuracy
        self.noise_bound = noise_bound
        self.delta = delta
        self.d0 = d0
        self.beta0 = beta0
        self.M = M
        self.omega_radius = omega_radius

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self.link_ = self._link()
        self.n_features_in_ = X.shape[1]
        if self.beta0 is not None:
            beta = np.array(self.beta0, dtype=float)
        else:
            beta = fit_mle(GlmProblem(X, y, self.link_)).beta
            nrm = np.linalg.norm(beta)
            if nrm > self.M:
                beta *= self.M / nrm
        self.coef_ = beta
        self.d_ = float(2.0 * self.M if self.d0 is None else self.d0)
        self.t_ = 0
        self.n_updates_ = 0
        return self

    def bonus(self, x) -> float:
        return self.link_.lipschitz * (1.0 + self.delta) * self.d_ * float(np.linalg.norm(x))

    def step(self, x, reveal_label):
        """Process one item; returns ``(accepted, score, bonus, updated)``."""
        L = self.link_.lipschitz
        xn2 = float(x @ x)
        p = float(self.link_.mu(x @ self.coef_))
        s = self.bonus(x)
        if p + s < self.cutoff:
            return False, p, s, False
        y = float(reveal_label())
        if abs(y - p) <= self.accuracy + self.noise_bound:
            return True, p, s, False
        beta = self.coef_ - (p - y) / (L * xn2) * x
        if self.omega_radius is not None:
            beta = project_slab(beta, x, self.omega_radius)
        self.coef_ = beta
        self.d_ = math.sqrt(max(0.0, self.d_**2 - self.accuracy**2 / (xn2 * L**2)))
        self.n_updates_ += 1
        return True, p, s, True

    def run_round(self, X, reveal) -> Decision:
        X = self._validate_batch(X)
        self.t_ += 1
        n = X.shape[0]
        accept = np.zeros(n, dtype=bool)
        scores = np.zeros(n)
        bonus = np.zeros(n)
        for j in range(n):
            if not np.any(X[j]):
                raise ValueError("SGD step needs a non-zero covariate")
            accept[j], scores[j], bonus[j], _ = self.step(X[j], lambda j=j: reveal(j))
        return Decision(accept, scores, bonus)

    def predict(self, X) -> np.ndarray:
        X = self._validate_batch(X)
        p = self.link_.mu(X @ self.coef_)
        s = self.link_.lipschitz * (1.0 + self.delta) * self.d_ * np.linalg.norm(X, axis=1)
        return p + s >= self.cutoff


# only the identity link needs no projection to keep mu' bounded away from zero
def default_omega_radius(link, B, M):
    return None if link.kind is LinkKind.IDENTITY else B * M
