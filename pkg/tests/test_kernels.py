"""Compiled and pure kernels must agree; the batch API matches scalar calls."""

import numpy as np
import pytest

from conegauge import _kernels_py
from conegauge import kernels


@pytest.fixture(scope="module")
def compiled():
    return pytest.importorskip("conegauge._kernels")


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 7.0])
def test_cone_backends_agree(compiled, p, rng):
    v0 = rng.normal(size=300)
    vb = rng.normal(size=(300, 5)) * 3
    a = compiled.cone_project_batch(v0, vb, p, 1e-12, 140)
    b = _kernels_py.cone_project_batch(v0, vb, p, 1e-12, 140)
    for i in range(3):
        np.testing.assert_allclose(a[i], b[i], atol=1e-10)
    np.testing.assert_array_equal(a[4], b[4])  # case codes


@pytest.mark.parametrize("q", [1.4, 2.0, 5.0])
def test_qball_backends_agree(compiled, q, rng):
    x = rng.normal(size=(200, 6)) * 2
    r = np.full(200, 0.8)
    ya, ra = compiled.qball_project_batch(x, q, r, 1e-12, 140)
    yb, rb = _kernels_py.qball_project_batch(x, q, r, 1e-12, 140)
    np.testing.assert_allclose(ya, yb, atol=1e-10)


def test_prox_backends_agree(compiled, rng):
    x = rng.normal(size=(100, 4)) * 3
    w = np.full(100, 0.5)
    a, _ = compiled.prox_pnorm_batch(x, 3.0, w, 1e-12, 140)
    b, _ = _kernels_py.prox_pnorm_batch(x, 3.0, w, 1e-12, 140)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_batch_case_codes(rng):
    # in-cone, polar and boundary rows are flagged 0/1/2
    v0 = np.array([2.0, -2.0, 0.0])
    vb = np.array([[1.0, 0.0], [0.1, 0.0], [2.0, 0.0]])
    x0, xb, dist, resid, case = kernels.cone_project_batch(v0, vb, 3.0)
    assert list(case) == [0, 1, 2]
    assert dist[0] == 0.0
    assert dist[1] == pytest.approx(np.sqrt(4.01), abs=1e-12)


def test_pnorm_batch_matches_scalar(rng):
    x = rng.normal(size=(40, 3))
    batch = kernels.pnorm(x, 2.5)
    singles = np.array([kernels.pnorm(row, 2.5) for row in x])
    np.testing.assert_array_equal(batch, singles)


def test_backend_name_exposed():
    assert kernels.BACKEND in ("cython", "python")
