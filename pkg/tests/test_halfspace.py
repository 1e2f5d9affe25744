import numpy as np
import pytest

from renvol.errors import GeometryError
from renvol.halfspace import (AmbientPoint, geodesic_flow, hyperbolic_distance,
                              normal_geodesic_flow, unit_normalize)


def random_point(rng):
    x1, x2 = rng.uniform(-3, 3, size=2)
    return AmbientPoint(x1, x2, rng.uniform(0.1, 5.0))


def test_vertical_distance_is_log_of_height_ratio():
    p = AmbientPoint(0.0, 0.0, 1.0)
    q = AmbientPoint(0.0, 0.0, np.e)
    assert hyperbolic_distance(p, q) == pytest.approx(1.0, abs=1e-14)


def test_distance_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p, q = random_point(rng), random_point(rng)
        assert hyperbolic_distance(p, q) == pytest.approx(
            hyperbolic_distance(q, p), abs=1e-14)


def test_triangle_inequality():
    # oracle: the closed-form distance itself, checked on random triples
    rng = np.random.default_rng(12)
    for _ in range(100):
        p, q, r = (random_point(rng) for _ in range(3))
        assert hyperbolic_distance(p, r) <= (
            hyperbolic_distance(p, q) + hyperbolic_distance(q, r) + 1e-12)


def test_identity_of_indiscernibles():
    p = AmbientPoint(0.3, -2.0, 0.7)
    assert hyperbolic_distance(p, p) == 0.0
    q = AmbientPoint(0.3, -2.0, 0.7 + 1e-7)
    assert hyperbolic_distance(p, q) > 0


def test_invalid_height_raises():
    with pytest.raises(GeometryError):
        AmbientPoint(0.0, 0.0, 0.0)
    with pytest.raises(GeometryError):
        hyperbolic_distance(np.array([0.0, 0.0, -1.0]), np.array([0, 0, 1.0]))


def test_vertical_flow():
    p = AmbientPoint(0.0, 0.0, 1.0)
    for rho in (-2.0, -0.5, 0.0, 0.7, 3.0):
        q = normal_geodesic_flow(p, (0.0, 0.0, 1.0), rho)
        assert q.xi == pytest.approx(np.exp(rho), rel=1e-14)
        assert (q.x1, q.x2) == (0.0, 0.0)


def test_horizontal_flow_distance():
    p = AmbientPoint(0.0, 0.0, 1.0)
    for rho in (0.25, 1.0, 2.5, 5.0):
        q = normal_geodesic_flow(p, (1.0, 0.0, 0.0), rho)
        assert hyperbolic_distance(p, q) == pytest.approx(rho, abs=1e-12)


def test_nonunit_velocity_rejected():
    p = AmbientPoint(0.0, 0.0, 2.0)
    with pytest.raises(GeometryError):
        normal_geodesic_flow(p, (1.0, 0.0, 0.0), 1.0)   # |n| = 1 but xi = 2


def test_flow_preserves_distance_random():
    rng = np.random.default_rng(13)
    for _ in range(50):
        p = random_point(rng)
        n = unit_normalize(p, rng.normal(size=3))
        rho = rng.uniform(-5.0, 5.0)
        q = normal_geodesic_flow(p, n, rho)
        assert hyperbolic_distance(p, q) == pytest.approx(abs(rho), abs=1e-10)


def test_flow_semigroup():
    rng = np.random.default_rng(14)
    for _ in range(30):
        p = random_point(rng)
        n = unit_normalize(p, rng.normal(size=3))
        a, b = rng.uniform(-2, 2, size=2)
        mid, vel = geodesic_flow(p, n, a)
        end1, _ = geodesic_flow(mid, vel, b)
        end2, _ = geodesic_flow(p, n, a + b)
        assert np.allclose(end1.array, end2.array, atol=1e-10)


def test_flow_reversibility():
    rng = np.random.default_rng(15)
    for _ in range(30):
        p = random_point(rng)
        n = unit_normalize(p, rng.normal(size=3))
        rho = rng.uniform(-3, 3)
        q, vel = geodesic_flow(p, n, rho)
        back, _ = geodesic_flow(q, -vel, rho)
        assert np.allclose(back.array, p.array, atol=1e-10)
