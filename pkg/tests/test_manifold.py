import numpy as np
import pytest

from rsgd_lab.errors import InvalidArgumentError, NumericalDegeneracyError
from rsgd_lab.manifold import Manifold, ManifoldKind, orthonormality_error

MANIFOLDS = [Manifold.sphere(5), Manifold.stiefel(4, 2), Manifold.grassmann(6, 3), Manifold.stiefel(3, 3)]


@pytest.mark.parametrize("kind,n,r", [("stiefel", 3, 4), ("sphere", 4, 2), ("sphere", 1, 1), ("grassmann", 3, 0)])
def test_invalid_dimensions(kind, n, r):
    with pytest.raises(InvalidArgumentError):
        Manifold(kind, n, r)


def test_str_and_kind():
    assert str(Manifold.sphere(3)) == "S^2"
    assert str(Manifold.stiefel(5, 2)) == "St(2,5)"
    assert Manifold("grassmann", 4, 2).kind is ManifoldKind.GRASSMANN


def test_inner_matches_elementwise_sum(rng):
    m = Manifold.stiefel(4, 2)
    x = m.random_point(rng)
    u, v = m.random_tangent(x, rng), m.random_tangent(x, rng)
    brute = sum(u[i, j] * v[i, j] for i in range(4) for j in range(2))
    assert m.inner(x, u, v) == pytest.approx(brute, abs=1e-15)
    assert m.inner(x, np.zeros_like(u), v) == 0.0
    assert m.inner(x, u, u) > 0


def test_norm_examples(rng):
    m = Manifold.stiefel(4, 2)
    x = m.random_point(rng)
    assert m.norm(x, np.zeros((4, 2))) == 0.0
    v = np.zeros((4, 2))
    v[1, 0] = 3.0
    assert m.norm(x, v) == pytest.approx(3.0)


def test_shape_mismatch_rejected(rng):
    m = Manifold.stiefel(4, 2)
    x = m.random_point(rng)
    with pytest.raises(InvalidArgumentError):
        m.inner(x, np.zeros((2, 4)), np.zeros((4, 2)))
    with pytest.raises(InvalidArgumentError):
        m.check_point(np.ones((4, 2)))


@pytest.mark.parametrize("m", MANIFOLDS, ids=str)
def test_projection_is_tangent_idempotent_and_self_adjoint(m, rng):
    x = m.random_point(rng)
    z, w = rng.standard_normal(m.shape), rng.standard_normal(m.shape)
    pz = m.project_tangent(x, z)
    assert m.is_tangent(x, pz)
    np.testing.assert_allclose(m.project_tangent(x, pz), pz, atol=1e-12)
    lhs = m.inner(x, pz, w)
    rhs = m.inner(x, z, m.project_tangent(x, w))
    assert abs(lhs - rhs) <= 1e-12


def test_projection_annihilates_normal_directions(rng):
    s = Manifold.sphere(4)
    x = s.random_point(rng)
    np.testing.assert_allclose(s.project_tangent(x, x), 0.0, atol=1e-15)
    g = Manifold.grassmann(6, 2)
    u = g.random_point(rng)
    np.testing.assert_allclose(g.project_tangent(u, u @ rng.standard_normal((2, 2))), 0.0, atol=1e-14)


@pytest.mark.parametrize("m", MANIFOLDS, ids=str)
def test_retract_zero_is_identity(m, rng):
    x = m.random_point(rng)
    y = m.retract(x, np.zeros(m.shape))
    assert np.max(np.abs(y - x)) <= 1e-14
    assert y is not x


def test_sphere_retraction_example():
    s = Manifold.sphere(3)
    y = s.retract(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    np.testing.assert_allclose(y.ravel(), [2 ** -0.5, 2 ** -0.5, 0.0], atol=1e-15)


def test_stiefel_retraction_stays_orthonormal(rng):
    m = Manifold.stiefel(4, 2)
    x = m.random_point(rng)
    v = m.random_tangent(x, rng)
    assert orthonormality_error(m.retract(x, v)) <= 1e-10


@pytest.mark.parametrize("m", [Manifold.stiefel(6, 3), Manifold.grassmann(5, 2), Manifold.sphere(4)], ids=str)
def test_many_retractions_preserve_the_point_invariant(m, rng):
    x = m.random_point(rng)
    worst = 0.0
    for _ in range(10_000):
        v = m.random_tangent(x, rng) * rng.uniform(0.0, 2.0)
        x = m.retract(x, v)
        worst = max(worst, m.point_error(x))
    assert worst <= 1e-10


@pytest.mark.parametrize("m", MANIFOLDS, ids=str)
def test_retraction_is_first_order_identity(m, rng):
    # d/dt f(R_x(t v)) at t = 0 equals <grad f(x), v> for f(y) = <A, y>
    A = rng.standard_normal(m.shape)
    x = m.random_point(rng)
    v = m.random_tangent(x, rng)
    h = 1e-6
    fd = (np.sum(A * m.retract(x, h * v)) - np.sum(A * m.retract(x, -h * v))) / (2 * h)
    exact = m.inner(x, m.egrad_to_rgrad(x, A), v)
    assert abs(fd - exact) <= 1e-4 * max(abs(exact), 1e-3)


def test_rank_deficient_retraction_raises():
    m = Manifold.stiefel(3, 2)
    x = np.eye(3)[:, :2]
    # not tangent, but forces x + v to lose rank
    v = np.array([[0.0, 1.0], [0.0, -1.0], [0.0, 0.0]])
    with pytest.raises(NumericalDegeneracyError):
        m.retract(x, v)


def test_random_point_and_tangent(rng):
    for m in MANIFOLDS:
        x = m.random_point(rng)
        assert m.is_point(x)
        v = m.random_tangent(x, rng)
        assert m.is_tangent(x, v)
        assert m.norm(x, v) == pytest.approx(1.0)


def test_grassmann_same_point_ignores_rotation(rng):
    g = Manifold.grassmann(6, 3)
    u = g.random_point(rng)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    assert g.same_point(u, u @ q)
    s = Manifold.stiefel(6, 3)
    assert not s.same_point(u, u @ q)


def test_sphere_accepts_flat_vectors():
    s = Manifold.sphere(3)
    x = s.check_point([0.0, 0.0, 1.0])
    assert x.shape == (3, 1)
