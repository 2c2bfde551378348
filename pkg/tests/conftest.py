"""
Pytest configuration and fixtures for Heron tests.
"""
import math

import numpy as np
import pytest

from services.surfaces import Ellipsoid, Paraboloid, ParameterDomain, Plane, Sphere
from settings import get_settings

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def rng():
    """Seeded random generator so sweeps are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def plane():
    """The plane t = 0 with upward normal; mu is (x, y)."""
    return Plane((0, 0, 0), (0, 0, 1), ParameterDomain.square(4.0))


@pytest.fixture
def unit_sphere():
    """Unit sphere at the origin, outward normals, mu = xi0 over [-2, 2]^2."""
    return Sphere((0, 0, 0), 1.0, ParameterDomain.square(2.0))


@pytest.fixture
def off_center_sphere():
    return Sphere((0.3, -0.2, 0.5), 1.5, ParameterDomain.square(1.5))


@pytest.fixture
def focal_ellipsoid():
    """Ellipsoid with semi-axes (2, sqrt3, sqrt3): foci at (+-1, 0, 0)."""
    return Ellipsoid((0, 0, 0), (2.0, math.sqrt(3.0), math.sqrt(3.0)), ParameterDomain.square(2.0))


@pytest.fixture
def paraboloid():
    """Paraboloid t = |z|^2 / 4 with focal length 1, normals toward the focus."""
    return Paraboloid(1.0, ParameterDomain.square(0.6))


@pytest.fixture
def catalog(plane, unit_sphere, off_center_sphere, focal_ellipsoid, paraboloid):
    return {
        "plane": plane,
        "sphere": unit_sphere,
        "off_center_sphere": off_center_sphere,
        "ellipsoid": focal_ellipsoid,
        "paraboloid": paraboloid,
    }


@pytest.fixture
def settings_override(monkeypatch):
    """Set HERON_* environment variables for one test and rebuild the cached settings."""

    def apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(f"HERON_{key.upper()}", str(value))
        get_settings.cache_clear()
        return get_settings()

    yield apply
    get_settings.cache_clear()


def random_unit_vectors(rng, count, min_z=-0.9):
    """Uniform directions, rejecting those too close to the excluded south pole."""
    vectors = rng.normal(size=(count * 2, 3))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    vectors = vectors[vectors[:, 2] > min_z]
    return vectors[:count]


@pytest.fixture
def directions(rng):
    """Callable returning `count` random chart-valid unit directions."""
    return lambda count, min_z=-0.9: random_unit_vectors(rng, count, min_z)
