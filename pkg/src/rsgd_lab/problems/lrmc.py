"""Low-rank matrix completion on the Grassmann manifold.

Columns z_j of an n x N matrix are observed on the index sets Omega_j and

    f(U) = (1/N) sum_j ||P_j(U q_j(U) - z_j)||^2,
    q_j(U) = argmin_a ||P_j(U a - z_j)||   (minimum-norm minimizer)

Differentiating with q_j held at its argmin gives the Euclidean gradient
2 P_j(U q_j - z_j) q_j^T, which is already horizontal.
"""

import logging

import numpy as np

from ..errors import InvalidArgumentError
from ..manifold import Manifold
from .base import Problem

log = logging.getLogger(__name__)

__all__ = ["LrmcProblem", "lrmc_inner_solve"]

_PINV_RCOND = 1e-12


def lrmc_inner_solve(U, z, mask):
    """Minimum-norm least-squares coefficients of one column.

    Args:
        U: n x r orthonormal basis.
        z: length-n column (entries outside ``mask`` are ignored).
        mask: length-n boolean observation pattern.

    Returns:
        q with shape (r,); zeros when the mask is empty.
    """
    U = np.asarray(U, dtype=float)
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if mask.shape[0] != U.shape[0] or z.shape[0] != U.shape[0]:
        raise InvalidArgumentError("column and mask must have n entries")
    if not mask.any():
        return np.zeros(U.shape[1])
    q, *_ = np.linalg.lstsq(U[mask], z[mask], rcond=None)
    return q


class LrmcProblem(Problem):
    """Masked low-rank completion problem.

    Args:
        values: n x N matrix of observed values (ignored outside ``mask``).
        mask: n x N boolean observation pattern.
        r: target rank.
        ground_truth: optional n x r orthonormal basis used for evaluation.
    """

    kind = "lrmc"

    def __init__(self, values, mask, r, ground_truth=None):
        values = np.asarray(values, dtype=float)
        mask = np.asarray(mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise InvalidArgumentError("values and mask must be n x N matrices of equal shape")
        if values.shape[1] < 1:
            raise InvalidArgumentError("LRMC needs at least one column")
        self.values = np.where(mask, values, 0.0)
        self.mask = mask
        self.r = int(r)
        self.manifold = Manifold.grassmann(values.shape[0], self.r)
        self.ground_truth = None if ground_truth is None else np.asarray(ground_truth, dtype=float)
        deficient = self.rank_deficient_columns()
        if deficient.size:
            log.info("%d of %d columns have fewer than r=%d observations",
                     deficient.size, self.n_samples, self.r)

    @classmethod
    def from_entries(cls, entries, n, N, r, ground_truth=None):
        values = np.zeros((n, N))
        mask = np.zeros((n, N), dtype=bool)
        for i, j, v in entries:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < N):
                raise InvalidArgumentError(f"entry ({i},{j}) outside a {n}x{N} matrix")
            if mask[i, j]:
                raise InvalidArgumentError(f"duplicate entry ({i},{j})")
            mask[i, j] = True
            values[i, j] = float(v)
        return cls(values, mask, r, ground_truth=ground_truth)

    @property
    def n_samples(self):
        return self.values.shape[1]

    @property
    def n(self):
        return self.values.shape[0]

    def entries(self):
        rows, cols = np.nonzero(self.mask)
        return [(int(i), int(j), float(self.values[i, j])) for i, j in zip(rows, cols)]

    def observed_count(self):
        return self.mask.sum(axis=0)

    def rank_deficient_columns(self):
        return np.flatnonzero(self.observed_count() < self.r)

    def _columns(self, indices):
        idx = self._indices(indices)
        if idx is None:
            return self.mask.astype(float), self.values
        return self.mask[:, idx].astype(float), self.values[:, idx]

    def _solve(self, U, m, z):
        # normal matrices U^T P_j U, one per column, solved in one stacked pinv
        gram = np.einsum("ib,ir,is->brs", m, U, U)
        rhs = z.T @ U
        q = np.linalg.pinv(gram, rcond=_PINV_RCOND, hermitian=True) @ rhs[:, :, None]
        q = q[:, :, 0]
        residual = m * (U @ q.T - z)
        return q, residual

    def coefficients(self, x, indices=None):
        m, z = self._columns(indices)
        return self._solve(x, m, z)[0]

    def loss(self, x, indices=None):
        m, z = self._columns(indices)
        _, residual = self._solve(x, m, z)
        return float(np.mean(np.sum(residual * residual, axis=0)))

    def egrad(self, x, indices=None):
        m, z = self._columns(indices)
        q, residual = self._solve(x, m, z)
        return (2.0 / q.shape[0]) * (residual @ q)

    def value_and_rgrad(self, x, indices=None):
        m, z = self._columns(indices)
        q, residual = self._solve(x, m, z)
        value = float(np.mean(np.sum(residual * residual, axis=0)))
        grad = (2.0 / q.shape[0]) * (residual @ q)
        return value, self.manifold.egrad_to_rgrad(x, grad)
