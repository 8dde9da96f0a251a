"""Generalized linear model primitives.

Link functions with their constants, a damped Newton (IRLS) solver for the
maximum-likelihood score equations, and the norm-constrained projection
used by the adaptive learner when the unconstrained fit leaves the
parameter ball.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import DomainError, RankDeficient

__all__ = [
    "LinkKind",
    "LinkSpec",
    "IDENTITY",
    "LOGISTIC",
    "get_link",
    "link_eval",
    "link_deriv",
    "link_inverse",
    "compute_eta",
    "GlmProblem",
    "FitResult",
    "score",
    "glm_loss",
    "fit_mle",
    "solve_normal_equations",
    "project_beta",
    "project_beta_linear",
]

RIDGE_FLOOR = 1e-8
MAX_CONDITION = 1e12


class LinkKind(enum.Enum):
    IDENTITY = "identity"
    LOGISTIC = "logistic"


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    # exp of a non-positive argument never overflows
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class LinkSpec:
    """A strictly increasing link function and its constants.

    Parameters
    ----------
    kind : LinkKind
    lipschitz : float
        Upper bound ``L`` on the derivative of the link.
    mu_at_zero_bound : float
        Bound ``gamma`` with ``mu(0) <= gamma``.
    """

    kind: LinkKind
    lipschitz: float
    mu_at_zero_bound: float

    @property
    def name(self) -> str:
        return self.kind.value

    def mu(self, z):
        if self.kind is LinkKind.IDENTITY:
            return np.asarray(z, dtype=float)
        return _sigmoid(z)

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind is LinkKind.IDENTITY:
            return np.ones_like(z)
        s = _sigmoid(z)
        return s * (1.0 - s)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind is LinkKind.IDENTITY:
            return y.copy()
        if np.any((y <= 0.0) | (y >= 1.0)):
            raise DomainError(f"logistic inverse needs 0 < y < 1, got {y!r}")
        return np.log(y) - np.log1p(-y)


IDENTITY = LinkSpec(LinkKind.IDENTITY, lipschitz=1.0, mu_at_zero_bound=0.0)
LOGISTIC = LinkSpec(LinkKind.LOGISTIC, lipschitz=0.25, mu_at_zero_bound=0.5)

_LINKS = {"identity": IDENTITY, "linear": IDENTITY, "logistic": LOGISTIC}


def get_link(link) -> LinkSpec:
    """Resolve a link given by name (``"identity"``/``"logistic"``) or spec."""
    if isinstance(link, LinkSpec):
        return link
    try:
        return _LINKS[str(link).lower()]
    except KeyError:
        raise ValueError(f"unknown link {link!r}; expected one of {sorted(_LINKS)}") from None


def link_eval(link: LinkSpec, z: float) -> float:
    return float(link.mu(z))


def link_deriv(link: LinkSpec, z: float) -> float:
    return float(link.deriv(z))


def link_inverse(link: LinkSpec, y: float) -> float:
    return float(link.inverse(y))


def compute_eta(link: LinkSpec, B: float, M: float) -> float:
    """Smallest link derivative over scores in ``[-B*M, B*M]``.

    The logistic derivative is even and decreasing in ``|z|``, so the minimum
    sits at the interval endpoint.
    """
    if B <= 0 or M <= 0:
        raise ValueError("B and M must be positive")
    if link.kind is LinkKind.IDENTITY:
        return 1.0
    return link_deriv(link, B * M)


@dataclass
class GlmProblem:
    """Observed rows, labels and the constants of a GLM fit."""

    features: np.ndarray
    labels: np.ndarray
    link: LinkSpec = IDENTITY
    norm_bound: float = math.inf
    covariate_bound: float = math.inf

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float).ravel()
        self.link = get_link(self.link)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"features have {self.features.shape[0]} rows but labels have {self.labels.shape[0]}"
            )
        if np.isfinite(self.covariate_bound) and self.features.size:
            worst = np.linalg.norm(self.features, axis=1).max()
            if worst > self.covariate_bound + 1e-9:
                raise ValueError(f"row norm {worst:g} exceeds covariate bound {self.covariate_bound:g}")


@dataclass
class FitResult:
    beta: np.ndarray
    converged: bool
    iterations: int
    score_norm: float
    projected: bool = False


def score(problem: GlmProblem, beta) -> np.ndarray:
    """Score vector ``sum_i x_i (y_i - mu(x_i' beta))``."""
    X = problem.features
    return X.T @ (problem.labels - problem.link.mu(X @ np.asarray(beta, dtype=float)))


def glm_loss(problem: GlmProblem, beta) -> float:
    """Negative log-likelihood whose gradient is minus :func:`score`.

    Squared loss (halved) for the identity link, cross-entropy for logistic.
    """
    z = problem.features @ np.asarray(beta, dtype=float)
    y = problem.labels
    if problem.link.kind is LinkKind.IDENTITY:
        return 0.5 * float(np.sum((y - z) ** 2))
    # -y log s(z) - (1-y) log(1-s(z)) == logaddexp(0, z) - y z
    return float(np.sum(np.logaddexp(0.0, z) - y * z))


def _check_gram(gram: np.ndarray) -> None:
    if gram.shape[0] == 0:
        return
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise RankDeficient(f"Gram matrix condition number {cond:.3g} exceeds {MAX_CONDITION:g}")


def _spd_solve(H: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return linalg.cho_solve(linalg.cho_factor(H, check_finite=False), b, check_finite=False)
    except linalg.LinAlgError:
        return np.linalg.lstsq(H, b, rcond=None)[0]


def solve_normal_equations(gram: np.ndarray, moment: np.ndarray, check: bool = True) -> np.ndarray:
    """Least-squares coefficients from ``X'X`` and ``X'y``."""
    if check:
        _check_gram(gram)
    return _spd_solve(gram, moment)


def fit_mle(problem: GlmProblem, init=None, tol: float = 1e-10, max_iter: int = 100) -> FitResult:
    """Solve the score equations ``sum_i x_i (y_i - mu(x_i' beta)) = 0``.

    Damped Newton: the step is halved while it fails to reduce the score
    norm. A tiny ridge on the Hessian keeps the step defined when the data are
    separated; it does not move the fixed point. No norm projection is applied.

    Raises
    ------
    RankDeficient
        When ``X'X`` has condition number above ``1e12``.
    """
    X, y, link = problem.features, problem.labels, problem.link
    n, d = X.shape
    if n < d:
        raise RankDeficient(f"{n} rows cannot determine {d} coefficients")
    gram = X.T @ X
    _check_gram(gram)

    if link.kind is LinkKind.IDENTITY:
        beta = _spd_solve(gram, X.T @ y)
        # one step of iterative refinement
        beta = beta + _spd_solve(gram, score(problem, beta))
        snorm = float(np.linalg.norm(score(problem, beta)))
        return FitResult(beta, snorm <= tol, 1, snorm)

    beta = np.zeros(d) if init is None else np.array(init, dtype=float)
    s = score(problem, beta)
    snorm = float(np.linalg.norm(s))
    ridge = RIDGE_FLOOR * np.eye(d)
    it = 0
    while snorm > tol and it < max_iter:
        it += 1
        w = link.deriv(X @ beta)
        step = _spd_solve((X * w[:, None]).T @ X + ridge, s)
        lr = 1.0
        while True:
            cand = beta + lr * step
            cs = score(problem, cand)
            cnorm = float(np.linalg.norm(cs))
            if cnorm < snorm or lr < 2.0**-30:
                break
            lr *= 0.5
        if not cnorm < snorm:
            # stalled at rounding level
            break
        beta, s, snorm = cand, cs, cnorm
    return FitResult(beta, snorm <= tol, it, snorm)


def _ball(beta: np.ndarray, M: float) -> np.ndarray:
    nrm = np.linalg.norm(beta)
    return beta if nrm <= M else beta * (M / nrm)


def _projected_descent(objective, start, M, max_iter, tol):
    """Projected gradient on the M-ball with backtracking from unit step.

    ``objective(beta)`` returns ``(value, gradient)``. Only steps that do not
    increase the objective are taken.
    """
    beta = start
    f, g = objective(beta)
    for _ in range(max_iter):
        if f <= 0.0:
            break
        lr = 1.0
        accepted = False
        while lr > 1e-30:
            cand = _ball(beta - lr * g, M)
            diff = cand - beta
            fc, gc = objective(cand)
            if fc <= f + g @ diff + (diff @ diff) / (2.0 * lr) and fc <= f:
                accepted = True
                break
            lr *= 0.5
        if not accepted:
            break
        rel = (f - fc) / f
        beta, f, g = cand, fc, gc
        if rel < tol:
            break
    return beta


def _check_projection_guard(beta_hat: np.ndarray, M: float):
    nrm = float(np.linalg.norm(beta_hat))
    if nrm <= M * (1.0 + 1e-12):
        if nrm >= M * (1.0 - 1e-12):
            return True
        raise ValueError(f"projection requires ||beta_hat|| > M; got {nrm:g} <= {M:g}")
    return False


def project_beta(beta_hat, history: GlmProblem, design, M: float, *, max_iter: int = 200, tol: float = 1e-10):
    """Project an out-of-ball fit back to ``{||beta|| <= M}``.

    Minimises ``|| g(beta) - g(beta_hat) ||_{A^-1}`` with
    ``g(beta) = sum_i x_i mu(x_i' beta)`` over the observed rows, starting
    from the radial rescaling of ``beta_hat``.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    if _check_projection_guard(beta_hat, M):
        return beta_hat.copy()
    X, link = history.features, history.link
    A_inv = design.A_inv
    g_hat = X.T @ link.mu(X @ beta_hat)

    def objective(b):
        z = X @ b
        r = X.T @ link.mu(z) - g_hat
        Ar = A_inv @ r
        jac = (X * link.deriv(z)[:, None]).T @ X
        return float(r @ Ar), 2.0 * jac @ Ar

    start = beta_hat * (M / np.linalg.norm(beta_hat))
    return _projected_descent(objective, start, M, max_iter, tol)


def project_beta_linear(beta_hat, gram, design, M: float, *, max_iter: int = 200, tol: float = 1e-10):
    """Identity-link projection given the history Gram matrix ``X'X``.

    Same objective as :func:`project_beta`; with the identity link
    ``g(beta) = X'X beta`` so the rows themselves are not needed.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    if _check_projection_guard(beta_hat, M):
        return beta_hat.copy()
    G = np.asarray(gram, dtype=float)
    Q = G @ design.A_inv @ G
    Q = 0.5 * (Q + Q.T)

    def objective(b):
        diff = b - beta_hat
        Qd = Q @ diff
        return float(diff @ Qd), 2.0 * Qd

    start = beta_hat * (M / np.linalg.norm(beta_hat))
    return _projected_descent(objective, start, M, max_iter, tol)
