"""The sqrt-abs objective on the sphere.

    f(w) = (1/N) sum_j sqrt(|<x_j, w>|),   w in S^{n-1}, ||x_j|| = 1

It is retraction-smooth away from the great circles <x_j, w> = 0, but its
gradient is unbounded near them, which ``witness_gradient_norms`` exhibits.
"""

import numpy as np

from ..errors import InvalidArgumentError, NondifferentiablePointError
from ..manifold import Manifold
from .base import Problem

__all__ = ["SqrtAbsSphereProblem", "witness_point", "witness_gradient_norms"]


class SqrtAbsSphereProblem(Problem):

    kind = "sqrt_abs"

    def __init__(self, X, tol=1e-10):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidArgumentError("data must be a non-empty N x n matrix")
        err = np.abs(np.linalg.norm(X, axis=1) - 1.0)
        if np.max(err) > tol:
            raise InvalidArgumentError(
                f"rows must be unit vectors (worst deviation {np.max(err):.3e})"
            )
        self.X = X
        self.manifold = Manifold.sphere(X.shape[1])

    @property
    def n_samples(self):
        return self.X.shape[0]

    def _products(self, w, indices):
        idx = self._indices(indices)
        xs = self.X if idx is None else self.X[idx]
        return xs, xs @ np.asarray(w, dtype=float).reshape(-1), idx

    def loss(self, x, indices=None):
        _, u, _ = self._products(x, indices)
        return float(np.mean(np.sqrt(np.abs(u))))

    def egrad(self, x, indices=None):
        xs, u, idx = self._products(x, indices)
        zero = np.flatnonzero(u == 0.0)
        if zero.size:
            bad = zero if idx is None else idx[zero]
            raise NondifferentiablePointError(
                f"<x_j, w> = 0 for sample(s) {sorted(set(bad.tolist()))}", bad
            )
        coef = 0.5 * np.sign(u) / np.sqrt(np.abs(u))
        return (xs.T @ coef / xs.shape[0]).reshape(-1, 1)


def witness_point(x_i, u, t):
    """w_t = x_i / (t ||x_i||) + sqrt(1 - 1/t^2) u, so that <x_i/||x_i||, w_t> = 1/t.

    ``u`` must be a unit vector orthogonal to ``x_i`` and ``t >= 1``.
    """
    x_i = np.asarray(x_i, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if t < 1:
        raise InvalidArgumentError(f"t must be >= 1, got {t}")
    nx = np.linalg.norm(x_i)
    if abs(np.linalg.norm(u) - 1.0) > 1e-10 or abs(u @ x_i) > 1e-10 * nx:
        raise InvalidArgumentError("u must be a unit vector orthogonal to x_i")
    w = x_i / (t * nx) + np.sqrt(1.0 - 1.0 / t ** 2) * u
    return w.reshape(-1, 1)


def witness_gradient_norms(problem, i, u, ts):
    """Riemannian gradient norms of ``problem`` along the witness sequence for sample ``i``."""
    x_i = problem.X[i]
    norms = []
    for t in ts:
        w = witness_point(x_i, u, t)
        norms.append(problem.manifold.norm(w, problem.rgrad(w)))
    return np.asarray(norms)
