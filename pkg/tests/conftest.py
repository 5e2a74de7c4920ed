import numpy as np
import pytest

from conegauge import ConePoint, PExponent, face_from_exposing, pnorm


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


def make_ray(p, zbar):
    """Exposed ray from a tail vector, with z0 snapped onto the dual sphere."""
    pe = PExponent(p)
    zbar = np.asarray(zbar, dtype=float)
    z0 = pnorm(zbar, pe.dual)
    return face_from_exposing(ConePoint(z0, zbar), pe)


def random_boundary_z(rng, p, n, support):
    """Random dual-boundary vector with |J_z| = support."""
    pe = PExponent(p)
    zbar = np.zeros(n)
    idx = rng.choice(n, size=support, replace=False)
    vals = rng.uniform(0.3, 1.5, size=support) * rng.choice([-1.0, 1.0], size=support)
    zbar[idx] = vals
    return ConePoint(pnorm(zbar, pe.dual), zbar)
