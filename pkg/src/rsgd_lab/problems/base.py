"""Common interface of the finite-sum benchmark objectives."""

import abc
import logging

import numpy as np

from ..errors import InvalidArgumentError

log = logging.getLogger(__name__)


class Problem(abc.ABC):
    """Finite-sum objective f(x) = (1/N) sum_j f_j(x) on a matrix manifold.

    Subclasses set ``self.manifold`` and implement ``loss`` and ``egrad``.
    ``indices`` selects a minibatch as a multiset of sample indices; ``None``
    means the full sum.
    """

    kind = "problem"
    manifold = None

    @property
    @abc.abstractmethod
    def n_samples(self):
        """Number of samples N."""

    @abc.abstractmethod
    def loss(self, x, indices=None):
        """Full or minibatch objective value."""

    @abc.abstractmethod
    def egrad(self, x, indices=None):
        """Euclidean gradient of the (minibatch) objective, an n x r matrix."""

    def rgrad(self, x, indices=None):
        return self.manifold.egrad_to_rgrad(x, self.egrad(x, indices))

    def value_and_rgrad(self, x, indices=None):
        return self.loss(x, indices), self.rgrad(x, indices)

    def per_sample_rgrad(self, x, j):
        return self.rgrad(x, [j])

    def _indices(self, indices):
        if indices is None:
            return None
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            raise InvalidArgumentError("minibatch must not be empty")
        if idx.min() < 0 or idx.max() >= self.n_samples:
            raise InvalidArgumentError(
                f"minibatch index out of range [0, {self.n_samples})"
            )
        return idx

    def __repr__(self):
        return f"{type(self).__name__}(N={self.n_samples}, manifold={self.manifold})"


def gradient_variance(problem, x):
    """Empirical variance (1/N) sum_j ||grad f_j(x) - grad f(x)||^2."""
    grads = np.stack([problem.per_sample_rgrad(x, j) for j in range(problem.n_samples)])
    mean = grads.mean(axis=0)
    return float(np.mean(np.sum((grads - mean) ** 2, axis=(1, 2))))
