"""Policies that refit the GLM on all observed labels every round.

:class:`AdaptiveLearner` adds a confidence bonus proportional to the
uncertainty width ``sqrt(x' A^-1 x)``; :class:`GreedyLearner` uses the point
estimate alone; :class:`BaselineLearner` implements the randomized and margin
exploration heuristics on top of the greedy score.
"""

from __future__ import annotations

import enum
import logging
import math

import numpy as np
from sklearn.utils.validation import check_is_fitted, check_X_y

from ..design import init_design
from ..exceptions import EigenFloorViolated, FitFailed, RankDeficient
from ..glm import (
    GlmProblem,
    LinkKind,
    compute_eta,
    fit_mle,
    project_beta,
    project_beta_linear,
    solve_normal_equations,
)
from ._base import Decision, OneSidedLearner, _RowBuffer

__all__ = [
    "kappa",
    "confidence_constant",
    "rho_t",
    "AdaptiveLearner",
    "GreedyLearner",
    "BaselineKind",
    "BaselineLearner",
]

logger = logging.getLogger(__name__)


def kappa(batch_size: int, B: float, lambda0: float) -> float:
    return math.sqrt(3.0 + 2.0 * math.log(1.0 + 2.0 * batch_size * B**2 / lambda0))


def confidence_constant(L, B, M, gamma, cutoff, phi, horizon, delta) -> float:
    """``C_{T,delta} = L B M + gamma + c + phi sqrt(log(2T/delta))``."""
    return L * B * M + gamma + cutoff + phi * math.sqrt(math.log(2.0 * horizon / delta))


def rho_t(t, *, d, L, eta, batch_size, B, lambda0, M, gamma, cutoff, phi, horizon, delta) -> float:
    """Confidence-width multiplier of the adaptive rule at round ``t``.

    ``(2L/eta) kappa C_{T,delta} sqrt(2 d log t) sqrt(log(2 d T / delta))``;
    zero at ``t = 1``.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    k = kappa(batch_size, B, lambda0)
    C = confidence_constant(L, B, M, gamma, cutoff, phi, horizon, delta)
    return (
        (2.0 * L / eta)
        * k
        * C
        * math.sqrt(2.0 * d * math.log(t))
        * math.sqrt(math.log(2.0 * d * horizon / delta))
    )


class _RefitLearner(OneSidedLearner):
    """Shared warm start, per-round refit and observation bookkeeping."""

    def fit(self, X, y):
        """Warm-start on a labeled sample (every row counts as observed)."""
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n, d = X.shape
        lam = self.lambda0
        if lam is None:
            eig = float(np.linalg.eigvalsh(X.T @ X)[0]) if n > d else 0.0
            if eig <= 1e-10 * max(1.0, float(np.trace(X.T @ X))):
                raise EigenFloorViolated(f"warm-start design is singular (eigmin {eig:.3g})")
            lam = eig
        self.link_ = self._link()
        self.design_ = init_design(X, lam)
        self.lambda0_ = float(lam)
        self.n_features_in_ = d
        self._rows = _RowBuffer(X, y)
        self._moment = X.T @ y
        self.t_ = 0
        self.coef_ = np.zeros(d)
        self.projected_ = False
        self._setup()
        self._stale = True
        self._refit()
        return self

    def _setup(self):
        pass

    @property
    def n_observed_(self) -> int:
        return self._rows.n

    def _refit(self):
        # the fit is a function of the observed data alone
        if not self._stale:
            return
        self._stale = False
        link, M = self.link_, self.M
        try:
            if link.kind is LinkKind.IDENTITY:
                beta = solve_normal_equations(self.design_.A, self._moment, check=False)
                problem = None
            else:
                problem = GlmProblem(self._rows.X, self._rows.y, link)
                res = fit_mle(problem, init=self.coef_, tol=self.fit_tol, max_iter=self.fit_max_iter)
                if not res.converged:
                    logger.debug("IRLS stopped at score norm %.3g after %d iterations", res.score_norm, res.iterations)
                beta = res.beta
        except RankDeficient as exc:
            raise FitFailed(f"refit failed at round {self.t_}: {exc}") from exc
        if not np.all(np.isfinite(beta)):
            raise FitFailed(f"refit produced non-finite coefficients at round {self.t_}")
        self.projected_ = bool(np.linalg.norm(beta) > M)
        if self.projected_:
            if problem is None:
                beta = project_beta_linear(beta, self.design_.A, self.design_, M)
            else:
                beta = project_beta(beta, problem, self.design_, M)
        self.coef_ = beta

    def _observe(self, x, y):
        self._rows.append(x, y)
        self.design_.update(x)
        self._moment += y * x
        self._stale = True

    def partial_fit(self, X, y):
        """Record externally revealed labels (no refit until the next round)."""
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        for x, yi in zip(X, y):
            self._observe(x, float(yi))
        return self

    # subclass hooks -------------------------------------------------------
    def _draws(self, n):
        return np.zeros((n, 0))

    def _bonus(self, x, t, draw):
        return 0.0

    def _accept(self, score, bonus, draw, t):
        return score - self.cutoff + bonus > 0.0

    def run_round(self, X, reveal) -> Decision:
        """Refit, then decide item by item; accepted labels update ``A`` at once."""
        X = self._validate_batch(X)
        self.t_ += 1
        t = self.t_
        if (t - 1) % self.refit_every == 0:
            self._refit()
        n = X.shape[0]
        scores = self.link_.mu(X @ self.coef_)
        draws = self._draws(n)
        accept = np.zeros(n, dtype=bool)
        bonus = np.zeros(n)
        for j in range(n):
            b = self._bonus(X[j], t, draws[j])
            bonus[j] = b
            if self._accept(scores[j], b, draws[j], t):
                accept[j] = True
                self._observe(X[j], float(reveal(j)))
        return Decision(accept, scores, bonus)

    def predict(self, X) -> np.ndarray:
        """Accept flags for ``X`` under the current state, without updating it.

        Evaluated as the next round would see it but with ``A`` frozen across
        the batch. Randomized policies consume their generator.
        """
        X = self._validate_batch(X)
        t = self.t_ + 1
        scores = self.link_.mu(X @ self.coef_)
        draws = self._draws(X.shape[0])
        return np.array(
            [self._accept(scores[j], self._bonus(X[j], t, draws[j]), draws[j], t) for j in range(X.shape[0])],
            dtype=bool,
        )


class GreedyLearner(_RefitLearner):
    """Accept iff the refit point estimate strictly exceeds the cutoff.

    Parameters
    ----------
    link : {"identity", "logistic"}
    cutoff : float
    M : float, default=inf
        Norm bound; fits outside the ball are projected back.
    lambda0 : float or None
        Eigenvalue floor of the warm-start design. ``None`` uses the observed
        smallest eigenvalue.
    refit_every : int, default=1
    """

    def __init__(self, link="identity", cutoff=0.5, M=math.inf, lambda0=None, refit_every=1,
                 fit_tol=1e-10, fit_max_iter=100):
        self.link = link
        self.cutoff = cutoff
        self.M = M
        self.lambda0 = lambda0
        self.refit_every = refit_every
        self.fit_tol = fit_tol
        self.fit_max_iter = fit_max_iter

    def decision_function(self, X):
        X = self._validate_batch(X)
        return self.link_.mu(X @ self.coef_) - self.cutoff


class AdaptiveLearner(_RefitLearner):
    """Accept iff ``mu(x' beta_t) - c + rho_t * sqrt(x' A^-1 x) > 0``.

    Parameters
    ----------
    link : {"identity", "logistic"}
    cutoff : float
    M, B, phi : float
        Parameter norm bound, covariate norm bound and noise scale.
    delta : float, default=0.05
        Confidence level, ``0 < delta < min(1, d/e)``.
    horizon : int
        Number of rounds ``T`` (enters the closed-form width).
    batch_size : int, default=1
    alpha : float or None, default=None
        ``None`` uses the closed-form ``rho_t``. A float replaces it by the
        tunable ``alpha * sqrt(log t)``, which keeps the growth in ``t`` but
        drops the worst-case constant.
    lambda0 : float or None
    refit_every : int, default=1
    """

    def __init__(self, link="identity", cutoff=0.5, M=1.0, B=1.0, phi=1.0, delta=0.05, horizon=1000,
                 batch_size=1, alpha=None, lambda0=None, refit_every=1, fit_tol=1e-10, fit_max_iter=100):
        self.link = link
        self.cutoff = cutoff
        self.M = M
        self.B = B
        self.phi = phi
        self.delta = delta
        self.horizon = horizon
        self.batch_size = batch_size
        self.alpha = alpha
        self.lambda0 = lambda0
        self.refit_every = refit_every
        self.fit_tol = fit_tol
        self.fit_max_iter = fit_max_iter

    def _setup(self):
        d = self.n_features_in_
        if self.alpha is not None:
            if self.alpha < 0:
                raise ValueError("alpha must be non-negative")
            return
        if not 0.0 < self.delta < min(1.0, d / math.e):
            raise ValueError(f"delta must lie in (0, min(1, d/e)) = (0, {min(1.0, d / math.e):.4g})")
        if not math.isfinite(self.M):
            raise ValueError("the closed-form width needs a finite norm bound M")
        self.eta_ = compute_eta(self.link_, self.B, self.M)

    def rho(self, t: int) -> float:
        check_is_fitted(self, "n_features_in_")
        if self.alpha is not None:
            return self.alpha * math.sqrt(math.log(t))
        link = self.link_
        return rho_t(
            t,
            d=self.n_features_in_,
            L=link.lipschitz,
            eta=self.eta_,
            batch_size=self.batch_size,
            B=self.B,
            lambda0=self.lambda0_,
            M=self.M,
            gamma=link.mu_at_zero_bound,
            cutoff=self.cutoff,
            phi=self.phi,
            horizon=self.horizon,
            delta=self.delta,
        )

    def _bonus(self, x, t, draw):
        r = self.rho(t)
        return r * self.design_.width(x) if r > 0.0 else 0.0

    def decision_function(self, X):
        X = self._validate_batch(X)
        r = self.rho(self.t_ + 1)
        return self.link_.mu(X @ self.coef_) - self.cutoff + r * self.design_.widths(X)


class BaselineKind(enum.Enum):
    EPS_GREEDY = "eps_greedy"
    ONE_SIDED_EPS_GREEDY = "os_eps_greedy"
    NOISE = "noise"
    ONE_SIDED_NOISE = "os_noise"
    MARGIN = "margin"


class BaselineLearner(_RefitLearner):
    """Exploration heuristics layered on the greedy score ``p = mu(x' beta_t)``.

    ``eps_greedy``
        With probability ``min(1, alpha/sqrt(t))`` accept with probability 1/2,
        otherwise greedy.
    ``os_eps_greedy``
        With probability ``min(1, alpha/sqrt(t))`` accept, otherwise greedy.
    ``noise`` / ``os_noise``
        Accept iff ``p + alpha u / sqrt(t) > c`` with ``u`` uniform on
        ``[-1/2, 1/2]`` / ``[0, 1]``.
    ``margin``
        Accept iff ``p + alpha / sqrt(t) > c``.

    Two uniforms are drawn per item whatever the branch, so the random
    stream never depends on labels.
    """

    def __init__(self, kind="margin", alpha=1.0, link="identity", cutoff=0.5, M=math.inf, lambda0=None,
                 refit_every=1, random_state=None, fit_tol=1e-10, fit_max_iter=100):
        self.kind = kind
        self.alpha = alpha
        self.link = link
        self.cutoff = cutoff
        self.M = M
        self.lambda0 = lambda0
        self.refit_every = refit_every
        self.random_state = random_state
        self.fit_tol = fit_tol
        self.fit_max_iter = fit_max_iter

    def _setup(self):
        self.kind_ = BaselineKind(self.kind)
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.rng_ = np.random.default_rng(self.random_state)

    def _draws(self, n):
        return self.rng_.random((n, 2))

    def _bonus(self, x, t, draw):
        scale = self.alpha / math.sqrt(t)
        kind = self.kind_
        if kind is BaselineKind.NOISE:
            return scale * (draw[0] - 0.5)
        if kind is BaselineKind.ONE_SIDED_NOISE:
            return scale * draw[0]
        if kind is BaselineKind.MARGIN:
            return scale
        return 0.0

    def _accept(self, score, bonus, draw, t):
        kind = self.kind_
        if kind in (BaselineKind.EPS_GREEDY, BaselineKind.ONE_SIDED_EPS_GREEDY):
            eps = min(1.0, self.alpha / math.sqrt(t))
            if draw[0] < eps:
                return kind is BaselineKind.ONE_SIDED_EPS_GREEDY or draw[1] < 0.5
            return score > self.cutoff
        return score - self.cutoff + bonus > 0.0
