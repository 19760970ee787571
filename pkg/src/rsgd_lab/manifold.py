"""Geometry of the sphere, Stiefel and Grassmann manifolds.

Points are tall n x r matrices with orthonormal columns (the sphere is the
r = 1 case). Grassmann points are orthonormal representatives of their
column space and tangent vectors at U live in the horizontal space
{V : U^T V = 0}. All three manifolds use the Euclidean metric
<u, v> = trace(u^T v) and the retractions

- sphere: R_x(v) = (x + v) / ||x + v||
- Stiefel / Grassmann: the Q factor of the thin QR of x + v, signs fixed so
  that R has a positive diagonal.
"""

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalDegeneracyError

log = logging.getLogger(__name__)

__all__ = [
    "ManifoldKind",
    "Manifold",
    "ORTH_TOL",
    "TANGENT_TOL",
    "SUBSPACE_TOL",
    "orthonormality_error",
    "sym",
]

ORTH_TOL = 1e-8
TANGENT_TOL = 1e-8
SUBSPACE_TOL = 1e-6


class ManifoldKind(str, enum.Enum):
    SPHERE = "sphere"
    STIEFEL = "stiefel"
    GRASSMANN = "grassmann"


def sym(a):
    return 0.5 * (a + a.T)


def orthonormality_error(x):
    """Returns ||x^T x - I_r||_F."""
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x.T @ x - np.eye(x.shape[1])))


@dataclass(frozen=True)
class Manifold:
    """A matrix manifold of n x r points.

    Args:
        kind: one of ``ManifoldKind``.
        n: ambient row dimension.
        r: number of columns, 1 for the sphere.
    """

    kind: ManifoldKind
    n: int
    r: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ManifoldKind(self.kind))
        if int(self.n) != self.n or int(self.r) != self.r:
            raise InvalidArgumentError(f"dimensions must be integers, got n={self.n}, r={self.r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r", int(self.r))
        if not 1 <= self.r <= self.n:
            raise InvalidArgumentError(f"need 1 <= r <= n, got n={self.n}, r={self.r}")
        if self.kind is ManifoldKind.SPHERE:
            if self.r != 1:
                raise InvalidArgumentError("the sphere requires r = 1")
            if self.n < 2:
                raise InvalidArgumentError("the sphere S^{n-1} requires n >= 2")

    @classmethod
    def sphere(cls, n):
        return cls(ManifoldKind.SPHERE, n, 1)

    @classmethod
    def stiefel(cls, n, r):
        return cls(ManifoldKind.STIEFEL, n, r)

    @classmethod
    def grassmann(cls, n, r):
        return cls(ManifoldKind.GRASSMANN, n, r)

    @property
    def shape(self):
        return (self.n, self.r)

    def __str__(self):
        if self.kind is ManifoldKind.SPHERE:
            return f"S^{self.n - 1}"
        prefix = "St" if self.kind is ManifoldKind.STIEFEL else "Gr"
        return f"{prefix}({self.r},{self.n})"

    # -- validation ----------------------------------------------------------

    def _as_matrix(self, a, name):
        a = np.asarray(a, dtype=float)
        if a.ndim == 1 and self.r == 1:
            a = a.reshape(-1, 1)
        if a.shape != self.shape:
            raise InvalidArgumentError(
                f"{name} has shape {a.shape}, expected {self.shape} on {self}"
            )
        return a

    def point_error(self, x):
        x = self._as_matrix(x, "point")
        if self.kind is ManifoldKind.SPHERE:
            return abs(float(np.linalg.norm(x)) - 1.0)
        return orthonormality_error(x)

    def tangent_error(self, x, v):
        x = self._as_matrix(x, "point")
        v = self._as_matrix(v, "tangent")
        if self.kind is ManifoldKind.SPHERE:
            return abs(float(np.sum(x * v)))
        if self.kind is ManifoldKind.STIEFEL:
            xtv = x.T @ v
            return float(np.linalg.norm(xtv + xtv.T))
        return float(np.linalg.norm(x.T @ v))

    def is_point(self, x, tol=ORTH_TOL):
        return self.point_error(x) <= tol

    def is_tangent(self, x, v, tol=TANGENT_TOL):
        return self.tangent_error(x, v) <= tol

    def check_point(self, x, tol=ORTH_TOL):
        """Returns ``x`` as an n x r float array or raises if it is off the manifold."""
        x = self._as_matrix(x, "point")
        err = self.point_error(x)
        if not err <= tol:
            raise InvalidArgumentError(f"not a point of {self}: orthonormality error {err:.3e}")
        return x

    def check_tangent(self, x, v, tol=TANGENT_TOL):
        v = self._as_matrix(v, "tangent")
        err = self.tangent_error(x, v)
        if not err <= tol:
            raise InvalidArgumentError(f"not a tangent vector of {self}: error {err:.3e}")
        return v

    # -- metric --------------------------------------------------------------

    def inner(self, x, u, v):
        """Returns trace(u^T v), the metric at ``x``."""
        self._as_matrix(x, "point")
        u = self._as_matrix(u, "tangent")
        v = self._as_matrix(v, "tangent")
        return float(np.sum(u * v))

    def norm(self, x, v):
        return float(np.sqrt(max(self.inner(x, v, v), 0.0)))

    # -- projections and retraction -----------------------------------------

    def project_tangent(self, x, z):
        """Orthogonal projection of an ambient n x r matrix onto T_x M.

        Args:
            x: point of the manifold.
            z: ambient matrix of the same shape.

        Returns:
            tangent (horizontal for Grassmann) vector at ``x``.
        """
        x = self._as_matrix(x, "point")
        z = self._as_matrix(z, "ambient matrix")
        if self.kind is ManifoldKind.STIEFEL:
            return z - x @ sym(x.T @ z)
        # (I - x x^T) z for both the sphere and the Grassmann horizontal space
        return z - x @ (x.T @ z)

    def egrad_to_rgrad(self, x, egrad):
        return self.project_tangent(x, egrad)

    def retract(self, x, v):
        """Moves from ``x`` along the tangent ``v`` and lands back on the manifold."""
        x = self._as_matrix(x, "point")
        v = self._as_matrix(v, "tangent")
        if not np.any(v):
            return x.copy()
        y = x + v
        if not np.all(np.isfinite(y)):
            raise NumericalDegeneracyError("retraction input is not finite")
        if self.kind is ManifoldKind.SPHERE:
            nrm = float(np.linalg.norm(y))
            if nrm == 0.0:
                raise NumericalDegeneracyError("x + v = 0, sphere retraction undefined")
            return y / nrm
        q, r = np.linalg.qr(y)
        diag = np.diag(r)
        scale = max(1.0, float(np.max(np.abs(diag))))
        if np.min(np.abs(diag)) <= 1e-14 * scale:
            raise NumericalDegeneracyError(
                f"x + v is rank deficient on {self}, QR retraction undefined"
            )
        return q * np.sign(diag)[None, :]

    # -- sampling ------------------------------------------------------------

    def random_point(self, rng):
        """QR (sign corrected) of a standard Gaussian n x r matrix."""
        g = rng.standard_normal(self.shape)
        if self.kind is ManifoldKind.SPHERE:
            return g / np.linalg.norm(g)
        q, r = np.linalg.qr(g)
        return q * np.sign(np.diag(r))[None, :]

    def random_tangent(self, x, rng):
        """Returns a unit-norm tangent vector at ``x`` with a Gaussian direction."""
        while True:
            v = self.project_tangent(x, rng.standard_normal(self.shape))
            nrm = np.linalg.norm(v)
            if nrm > 0:
                return v / nrm

    def same_point(self, x, y, tol=SUBSPACE_TOL):
        """Point equality; Grassmann compares the spanned subspaces."""
        x = self._as_matrix(x, "point")
        y = self._as_matrix(y, "point")
        if self.kind is ManifoldKind.GRASSMANN:
            return float(np.linalg.norm(x @ x.T - y @ y.T)) <= tol
        return float(np.linalg.norm(x - y)) <= tol
