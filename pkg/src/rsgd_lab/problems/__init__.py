"""
Benchmark objectives for RSGD.

- PCA on the Stiefel manifold (with the eigendecomposition oracle)
- Low-rank matrix completion on the Grassmann manifold
- The sqrt-abs objective on the sphere
"""

from .base import Problem, gradient_variance
from .lrmc import LrmcProblem, lrmc_inner_solve
from .pca import EvdSolution, PcaProblem, pca_evd_oracle, subspace_distance
from .sqrt_abs import SqrtAbsSphereProblem, witness_gradient_norms, witness_point

__all__ = [
    "Problem",
    "gradient_variance",
    "PcaProblem",
    "EvdSolution",
    "pca_evd_oracle",
    "subspace_distance",
    "LrmcProblem",
    "lrmc_inner_solve",
    "SqrtAbsSphereProblem",
    "witness_point",
    "witness_gradient_norms",
]
