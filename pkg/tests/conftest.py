"""Shared fixtures: the zoo registry and cached expensive computations."""

import numpy as np
import pytest

from srcgeolab import ZooRegistry, integrate_finsler_geodesic, shoot_geodesic


@pytest.fixture(scope="session")
def registry():
    return ZooRegistry()


@pytest.fixture(scope="session")
def euclid(registry):
    return registry.case("euclidean").R


@pytest.fixture(scope="session")
def wind(registry):
    return registry.case("euclidean-wind").R


@pytest.fixture(scope="session")
def sphere(registry):
    return registry.case("sphere").R


@pytest.fixture(scope="session")
def sphere_wind(registry):
    return registry.case("sphere-wind").R


@pytest.fixture(scope="session")
def sphere_equator_15(sphere):
    """Affine sphere geodesic of length 1.5 pi along the equator circle."""
    L = 1.5 * np.pi
    return integrate_finsler_geodesic(sphere, [1.0, 0.0], [0.0, L], steps=1000)


@pytest.fixture(scope="session")
def wind_line(wind):
    return integrate_finsler_geodesic(wind, [0.0, 0.0], [1.0, 0.0], steps=1000)


@pytest.fixture(scope="session")
def euclid_line(euclid):
    return integrate_finsler_geodesic(euclid, [0.0, 0.0], [1.0, 0.0], steps=1000)


@pytest.fixture(scope="session")
def shot_cache(registry):
    """Session cache of shot geodesics keyed by (case, steps)."""
    cache = {}

    def get(name, steps=1000, p=None, q=None, v0=None):
        key = (name, steps, None if p is None else tuple(p),
               None if q is None else tuple(q))
        if key not in cache:
            case = registry.case(name)
            cache[key] = shoot_geodesic(
                case.R,
                case.p if p is None else np.asarray(p, dtype=float),
                case.q if q is None else np.asarray(q, dtype=float),
                v0=case.v0 if v0 is None else np.asarray(v0, dtype=float),
                steps=steps,
            )
        return cache[key]

    return get
