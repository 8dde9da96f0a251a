"""Empirical covariance of observed covariates and its maintained inverse."""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .exceptions import DesignCorrupted, EigenFloorViolated

__all__ = ["DesignState", "init_design", "rank1_update", "width"]

REFRESH_EVERY = 4096
NEGATIVE_SLACK = 1e-12


def _inverse(A: np.ndarray) -> np.ndarray:
    d = A.shape[0]
    inv = linalg.cho_solve(linalg.cho_factor(A), np.eye(d))
    return 0.5 * (inv + inv.T)


class DesignState:
    """Design matrix ``A = sum x x'`` with a Sherman-Morrison inverse.

    The inverse is recomputed from ``A`` by Cholesky every
    ``REFRESH_EVERY`` updates to bound round-off drift.

    Parameters
    ----------
    A : ndarray of shape (d, d)
        Symmetric positive-definite matrix.
    lambda0 : float
        Eigenvalue floor guaranteed at initialization.
    """

    def __init__(self, A, lambda0: float = 0.0):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        self.A = 0.5 * (A + A.T)
        self.A_inv = _inverse(self.A)
        self.lambda0 = float(lambda0)
        self.update_count = 0

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def copy(self) -> "DesignState":
        new = DesignState.__new__(DesignState)
        new.A = self.A.copy()
        new.A_inv = self.A_inv.copy()
        new.lambda0 = self.lambda0
        new.update_count = self.update_count
        return new

    def update(self, x) -> None:
        """In-place rank-one update ``A <- A + x x'``."""
        x = np.asarray(x, dtype=float)
        if not np.any(x):
            return
        self.A += np.outer(x, x)
        self.A = 0.5 * (self.A + self.A.T)
        self.update_count += 1
        if self.update_count % REFRESH_EVERY == 0:
            self.A_inv = _inverse(self.A)
            return
        Ax = self.A_inv @ x
        self.A_inv -= np.outer(Ax, Ax) / (1.0 + x @ Ax)
        self.A_inv = 0.5 * (self.A_inv + self.A_inv.T)

    def quad(self, x) -> float:
        return float(np.asarray(x, dtype=float) @ self.A_inv @ np.asarray(x, dtype=float))

    def width(self, x) -> float:
        """``sqrt(x' A^-1 x)``, clamping round-off negatives to zero."""
        q = self.quad(x)
        if q < 0.0:
            if q < -NEGATIVE_SLACK:
                raise DesignCorrupted(f"negative quadratic form {q:g}")
            return 0.0
        return float(np.sqrt(q))

    def widths(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        q = np.einsum("ij,jk,ik->i", X, self.A_inv, X)
        if np.any(q < -NEGATIVE_SLACK):
            raise DesignCorrupted(f"negative quadratic form {q.min():g}")
        return np.sqrt(np.maximum(q, 0.0))

    def __repr__(self):
        return f"DesignState(dim={self.dim}, update_count={self.update_count}, lambda0={self.lambda0:g})"


def init_design(rows, lambda0: float) -> DesignState:
    """Build ``A = sum x x'`` from warm-start rows and check ``eigmin(A) >= lambda0``.

    Raises
    ------
    EigenFloorViolated
        If ``A - lambda0 I`` is not positive semi-definite.
    """
    X = np.atleast_2d(np.asarray(rows, dtype=float))
    n, d = X.shape
    if n < d + 1:
        raise EigenFloorViolated(f"need at least d+1={d + 1} warm-start rows, got {n}")
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    A = X.T @ X
    # eigmin(A) >= lambda0  <=>  A - lambda0 I is PSD; the tiny slack lets an
    # exact eigenvalue equal to lambda0 pass the Cholesky test
    shifted = A - lambda0 * (1.0 - 1e-12) * np.eye(d)
    try:
        linalg.cholesky(0.5 * (shifted + shifted.T), lower=True)
    except linalg.LinAlgError:
        eigmin = float(np.linalg.eigvalsh(A)[0])
        raise EigenFloorViolated(
            f"smallest eigenvalue {eigmin:.4g} of the warm-start design is below lambda0={lambda0:g}"
        ) from None
    return DesignState(A, lambda0)


def rank1_update(state: DesignState, x) -> DesignState:
    """Return a new state with ``x x'`` added; ``state`` is left untouched."""
    new = state.copy()
    new.update(x)
    return new


def width(state: DesignState, x) -> float:
    return state.width(x)
