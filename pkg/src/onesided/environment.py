"""Data streams, the Bayes oracle and the one-sided loss ledger.

A :class:`Stream` is fully materialized from its seed: a labeled warm-start
sample plus a sequence of batches whose labels the runner reveals only for
accepted items.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InsufficientWarmStart
from .glm import GlmProblem, LinkSpec, fit_mle, get_link

__all__ = [
    "Oracle",
    "one_sided_loss",
    "LossLedger",
    "compute_cutoff",
    "StreamKind",
    "StreamSpec",
    "Stream",
    "make_synthetic_stream",
    "make_theorem1_stream",
    "fit_oracle",
    "stratified_split",
    "replay_stream",
    "build_stream",
]


@dataclass(frozen=True)
class Oracle:
    """Bayes-optimal rule ``x -> 1{mu(x' beta*) > c}``."""

    beta_star: np.ndarray
    link: LinkSpec
    cutoff: float

    def means(self, X) -> np.ndarray:
        return self.link.mu(np.atleast_2d(X) @ self.beta_star)

    def optimal(self, X) -> np.ndarray:
        return self.means(X) > self.cutoff

    def losses(self, X, actions) -> np.ndarray:
        m = self.means(X)
        actions = np.asarray(actions, dtype=bool)
        if m.shape != actions.shape:
            raise ValueError(f"{m.shape[0]} items but {actions.shape} actions")
        return np.abs(m - self.cutoff) * ((m > self.cutoff) != actions)


def one_sided_loss(oracle: Oracle, batch, actions) -> float:
    """Sum of ``|mu(x' beta*) - c|`` over items whose action disagrees with the oracle."""
    return float(oracle.losses(batch, actions).sum())


@dataclass
class LossLedger:
    """Per-round instantaneous and cumulative one-sided loss."""

    r: list = field(default_factory=list)
    R: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    false_accepts: list = field(default_factory=list)
    false_rejects: list = field(default_factory=list)
    batch_sizes: list = field(default_factory=list)

    def record(self, oracle: Oracle, batch, actions) -> float:
        actions = np.asarray(actions, dtype=bool)
        opt = oracle.optimal(batch)
        r_t = one_sided_loss(oracle, batch, actions)
        self.r.append(r_t)
        self.R.append((self.R[-1] if self.R else 0.0) + r_t)
        self.accepted.append(int(actions.sum()))
        self.false_accepts.append(int(np.sum(actions & ~opt)))
        self.false_rejects.append(int(np.sum(~actions & opt)))
        self.batch_sizes.append(int(actions.size))
        return r_t

    def __len__(self):
        return len(self.r)

    @property
    def total(self) -> float:
        return self.R[-1] if self.R else 0.0

    def rate(self) -> np.ndarray:
        """Average loss per round ``R_t / t``."""
        R = np.asarray(self.R)
        return R / np.arange(1, len(R) + 1)


def compute_cutoff(scores, p: float) -> float:
    """Midpoint between the ``floor(p n)``-th and next order statistic.

    With ``k = floor(p n)`` exactly ``k`` generic scores fall strictly below.
    ``k = 0`` returns the minimum and ``k = n`` the maximum.
    """
    s = np.sort(np.asarray(scores, dtype=float).ravel())
    n = s.size
    if n == 0:
        raise ValueError("need at least one score")
    if not 0.0 < p < 1.0:
        raise ValueError("percentile must lie in (0, 1)")
    k = math.floor(p * n)
    if k == 0:
        return float(s[0])
    if k >= n:
        return float(s[-1])
    return float(0.5 * (s[k - 1] + s[k]))


class StreamKind(enum.Enum):
    SYNTHETIC_GLM = "synthetic"
    THEOREM_ONE = "theorem1"
    CSV_REPLAY = "csv"


@dataclass
class StreamSpec:
    """Parameters that fully determine a stream given its seed.

    ``params`` holds the kind-specific settings: for ``synthetic`` the
    covariate law (``"ball"`` or ``"gaussian"``), ``beta_norm``,
    ``cutoff_percentile`` and ``label_noise``; for ``theorem1`` ``tau`` and
    ``p_v``; for ``csv`` the replay ``init_frac``.
    """

    kind: StreamKind
    d: int
    T: int
    N: int = 1
    noise_phi: float = 1.0
    seed: int = 0
    link: str = "identity"
    B: float = 1.0
    M: float | None = None
    cutoff: float | None = None
    warm_n: int | None = None
    params: dict = field(default_factory=dict)


@dataclass
class Stream:
    """A materialized stream: warm-start sample, batches and their oracle."""

    spec: StreamSpec
    oracle: Oracle
    warm_X: np.ndarray
    warm_y: np.ndarray
    X: list
    y: list
    M: float
    B: float

    @property
    def n_rounds(self) -> int:
        return len(self.X)

    @property
    def total_items(self) -> int:
        return int(sum(len(b) for b in self.X))

    def rounds(self):
        yield from zip(self.X, self.y)


def _batches(X, y, N):
    return [X[i : i + N] for i in range(0, len(X), N)], [y[i : i + N] for i in range(0, len(y), N)]


def _labels(rng, link, means, phi, noise):
    if noise == "bernoulli":
        return (rng.random(means.shape) < means).astype(float)
    return means + phi * rng.standard_normal(means.shape)


def _check_warm(X, d):
    if X.shape[0] < d + 1 or np.linalg.matrix_rank(X) < d:
        raise InsufficientWarmStart(f"warm-start set has {X.shape[0]} rows and rank {np.linalg.matrix_rank(X)}; need d+1={d + 1} rows of full rank")


def make_synthetic_stream(spec: StreamSpec) -> Stream:
    """i.i.d. GLM stream ``y = mu(x' beta*) + N(0, phi^2)``.

    Covariates are uniform in the radius-``B`` ball (``covariates="ball"``)
    or i.i.d. ``N(0, sigma^2)`` coordinates (``"gaussian"``, unbounded).
    ``beta*`` is a seeded random direction of norm ``beta_norm`` unless
    ``beta_star`` is given. The cutoff is ``spec.cutoff`` or the
    ``cutoff_percentile`` of the oracle scores over the whole stream.
    """
    p = spec.params
    link = get_link(spec.link)
    d, T, N = spec.d, spec.T, spec.N
    rng = np.random.default_rng(spec.seed)
    law = p.get("covariates", "ball")
    warm_n = spec.warm_n if spec.warm_n is not None else max(2 * (d + 1), 10)
    n = warm_n + T * N

    if "beta_star" in p:
        beta = np.asarray(p["beta_star"], dtype=float)
    else:
        beta = rng.standard_normal(d)
        beta *= p.get("beta_norm", 1.0) / np.linalg.norm(beta)

    if law == "ball":
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        X = spec.B * (rng.random(n) ** (1.0 / d))[:, None] * g
        B = spec.B
    elif law == "gaussian":
        X = p.get("sigma", 1.0) * rng.standard_normal((n, d))
        B = math.inf
    else:
        raise ValueError(f"unknown covariate law {law!r}")

    means = link.mu(X @ beta)
    y = _labels(rng, link, means, spec.noise_phi, p.get("label_noise", "gaussian"))
    cutoff = spec.cutoff
    if cutoff is None:
        cutoff = compute_cutoff(means, p.get("cutoff_percentile", 0.5))
    M = spec.M if spec.M is not None else 2.0 * float(np.linalg.norm(beta))
    _check_warm(X[:warm_n], d)
    bx, by = _batches(X[warm_n:], y[warm_n:], N)
    return Stream(spec, Oracle(beta, link, float(cutoff)), X[:warm_n], y[:warm_n], bx, by, M, B)


def make_theorem1_stream(d: int, tau: float | None = None, p_v: float = 0.1, seed: int = 0, *,
                         link="identity", cutoff: float = 0.5, T: int = 1000, N: int = 1,
                         warm_n: int = 2000, gap: float = 0.3, require_span: bool = True,
                         max_tries: int = 100) -> Stream:
    """Orthogonal-mass stream on which the greedy learner can stall.

    With probability ``p_v`` the covariate is ``v = e_1``, otherwise uniform
    over ``e_2 .. e_d``. ``beta*`` puts ``mu(v' beta*) = c + tau`` just above
    the cutoff and every other direction at ``c + gap``. Labels carry
    standard normal noise. ``tau`` defaults to ``1/sqrt(p_v * warm_n)``.
    The warm-start sample is redrawn until it spans ``R^d`` unless
    ``require_span`` is false.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if not 0.0 < p_v <= 1.0:
        raise ValueError("p_v must lie in (0, 1]")
    lk = get_link(link)
    if tau is None:
        tau = 1.0 / math.sqrt(p_v * warm_n)
    beta = np.empty(d)
    beta[0] = float(lk.inverse(cutoff + tau))
    beta[1:] = float(lk.inverse(cutoff + gap))
    spec = StreamSpec(StreamKind.THEOREM_ONE, d, T, N, 1.0, seed, lk.name, 1.0, None, cutoff, warm_n,
                      {"tau": tau, "p_v": p_v, "gap": gap})
    rng = np.random.default_rng(seed)

    def draw(n):
        is_v = rng.random(n) < p_v
        idx = np.where(is_v, 0, 1 + rng.integers(0, d - 1, size=n))
        return np.eye(d)[idx]

    for _ in range(max_tries):
        warm_X = draw(warm_n)
        if not require_span or np.linalg.matrix_rank(warm_X) == d:
            break
    else:
        raise InsufficientWarmStart(f"warm start of {warm_n} rows never spanned R^{d}")
    X = draw(T * N)
    warm_y = lk.mu(warm_X @ beta) + rng.standard_normal(warm_n)
    y = lk.mu(X @ beta) + rng.standard_normal(T * N)
    bx, by = _batches(X, y, N)
    M = 2.0 * float(np.linalg.norm(beta))
    return Stream(spec, Oracle(beta, lk, float(cutoff)), warm_X, warm_y, bx, by, M, 1.0)


def fit_oracle(X, y, link, percentile: float) -> Oracle:
    """Full-data MLE fit with the cutoff at the given percentile of its scores."""
    lk = get_link(link)
    beta = fit_mle(GlmProblem(X, y, lk)).beta
    return Oracle(beta, lk, compute_cutoff(lk.mu(np.asarray(X) @ beta), percentile))


def stratified_split(strata, frac: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Indices of a stratified ``frac`` sample and of the shuffled remainder.

    The total is ``round(frac * n)``; per-stratum quotas use largest
    remainders so every stratum's share is within one item of exact.
    """
    strata = np.asarray(strata)
    n = strata.size
    total = int(math.floor(frac * n + 0.5))
    labels, counts = np.unique(strata, return_counts=True)
    exact = frac * counts
    quota = np.floor(exact).astype(int)
    short = total - quota.sum()
    order = np.argsort(-(exact - quota), kind="stable")
    quota[order[:short]] += 1
    warm = []
    for lab, q in zip(labels, quota):
        members = np.flatnonzero(strata == lab)
        warm.append(rng.permutation(members)[:q])
    warm = np.sort(np.concatenate(warm)) if warm else np.empty(0, dtype=int)
    rest = np.setdiff1d(np.arange(n), warm)
    return warm, rng.permutation(rest)


def replay_stream(X, y, oracle: Oracle, split_seed: int, init_frac: float = 0.05, batch_size: int = 1,
                  spec: StreamSpec | None = None, M: float | None = None, B: float | None = None) -> Stream:
    """Replay a dataset: stratified warm start, then shuffled batches.

    Strata are the oracle's binarized decisions. The last batch may be short.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n * init_frac < d + 1:
        raise InsufficientWarmStart(f"{n} rows with init_frac={init_frac} cannot give d+1={d + 1} warm rows")
    rng = np.random.default_rng(split_seed)
    warm, rest = stratified_split(oracle.optimal(X), init_frac, rng)
    _check_warm(X[warm], d)
    bx, by = _batches(X[rest], y[rest], batch_size)
    if spec is None:
        spec = StreamSpec(StreamKind.CSV_REPLAY, d, len(bx), batch_size, seed=split_seed,
                          link=oracle.link.name, cutoff=oracle.cutoff, params={"init_frac": init_frac})
    if B is None:
        B = float(np.linalg.norm(X, axis=1).max())
    if M is None:
        M = 2.0 * float(np.linalg.norm(oracle.beta_star))
    return Stream(spec, oracle, X[warm], y[warm], bx, by, M, B)


def build_stream(spec: StreamSpec) -> Stream:
    if spec.kind is StreamKind.SYNTHETIC_GLM:
        return make_synthetic_stream(spec)
    if spec.kind is StreamKind.THEOREM_ONE:
        p = spec.params
        return make_theorem1_stream(spec.d, p.get("tau"), p.get("p_v", 0.1), spec.seed, link=spec.link,
                                    cutoff=0.5 if spec.cutoff is None else spec.cutoff, T=spec.T, N=spec.N,
                                    warm_n=spec.warm_n or 2000, gap=p.get("gap", 0.3))
    raise ValueError("CSV replay streams are built from a dataset with replay_stream()")
