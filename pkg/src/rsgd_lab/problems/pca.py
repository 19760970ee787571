"""Principal component analysis on the Stiefel manifold.

    f(U) = (1/N) sum_j ||x_j - U U^T x_j||^2,   U in St(r, n)

with Euclidean gradient -2 x_j x_j^T U per sample (from
f_j(U) = ||x_j||^2 - ||U^T x_j||^2 on the manifold).
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import DegenerateSubspaceWarning, InvalidArgumentError
from ..manifold import Manifold
from .base import Problem

log = logging.getLogger(__name__)

__all__ = ["PcaProblem", "EvdSolution", "pca_evd_oracle", "subspace_distance"]


class PcaProblem(Problem):

    kind = "pca"

    def __init__(self, X, r):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidArgumentError("PCA data must be a non-empty N x n matrix")
        self.X = X
        self.r = int(r)
        self.manifold = Manifold.stiefel(X.shape[1], self.r)
        self._evd = None

    @property
    def n_samples(self):
        return self.X.shape[0]

    def _rows(self, indices):
        idx = self._indices(indices)
        return self.X if idx is None else self.X[idx]

    def loss(self, x, indices=None):
        xs = self._rows(indices)
        residual = xs - (xs @ x) @ x.T
        return float(np.mean(np.sum(residual * residual, axis=1)))

    def egrad(self, x, indices=None):
        xs = self._rows(indices)
        return (-2.0 / xs.shape[0]) * (xs.T @ (xs @ x))

    def evd_solution(self):
        if self._evd is None:
            self._evd = pca_evd_oracle(self.X, self.r)
        return self._evd


@dataclass(frozen=True)
class EvdSolution:
    """Top-r eigenvectors of X^T X.

    ``degenerate`` is set when eigenvalues r and r+1 tie, in which case the
    basis is one of several minimizers.
    """

    basis: np.ndarray
    eigenvalues: np.ndarray
    degenerate: bool = False


def pca_evd_oracle(X, r, gap_tol=1e-10):
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if not 1 <= r <= n:
        raise InvalidArgumentError(f"need 1 <= r <= n, got r={r}, n={n}")
    evals, evecs = scipy.linalg.eigh(X.T @ X)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    degenerate = False
    if r < n:
        scale = max(1.0, abs(float(evals[0])))
        degenerate = bool(evals[r - 1] - evals[r] <= gap_tol * scale)
        if degenerate:
            msg = f"eigenvalues {r} and {r + 1} tie ({evals[r - 1]:.6g}), subspace not unique"
            log.warning(msg)
            warnings.warn(msg, DegenerateSubspaceWarning, stacklevel=2)
    return EvdSolution(basis=np.ascontiguousarray(evecs[:, :r]), eigenvalues=evals, degenerate=degenerate)


def subspace_distance(U1, U2):
    """Frobenius norm ||U1 U1^T - U2 U2^T||."""
    U1 = np.asarray(U1, dtype=float)
    U2 = np.asarray(U2, dtype=float)
    if U1.shape != U2.shape or U1.ndim != 2:
        raise InvalidArgumentError(f"shape mismatch: {U1.shape} vs {U2.shape}")
    return float(np.linalg.norm(U1 @ U1.T - U2 @ U2.T))
