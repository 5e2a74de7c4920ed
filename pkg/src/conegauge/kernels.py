"""Backend selection for the projection kernels.

The compiled extension is used when importable; set ``CONEGAUGE_PURE=1`` to
force the pure-numpy fallback.  ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py as _py

_force_pure = os.environ.get("CONEGAUGE_PURE", "").strip().lower() not in ("", "0", "false")

if _force_pure:
    _impl = _py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _py

BACKEND: str = _impl.BACKEND_NAME

# the p-norm is shared so that both backends score membership identically
pnorm = _py.pnorm


def cone_project_batch(v0, vbar, p, tol=1e-12, max_iter=140):
    v0 = np.ascontiguousarray(np.atleast_1d(v0), dtype=float)
    vbar = np.ascontiguousarray(np.atleast_2d(vbar), dtype=float)
    return _impl.cone_project_batch(v0, vbar, float(p), tol, max_iter)


def qball_project_batch(x, q, radius, tol=1e-12, max_iter=140):
    x = np.ascontiguousarray(np.atleast_2d(x), dtype=float)
    nb = x.shape[0]
    rad = np.ascontiguousarray(np.broadcast_to(np.asarray(radius, dtype=float), (nb,)))
    return _impl.qball_project_batch(x, float(q), rad, tol, max_iter)


def prox_pnorm_batch(x, p, weight, tol=1e-12, max_iter=140):
    x = np.ascontiguousarray(np.atleast_2d(x), dtype=float)
    nb = x.shape[0]
    w = np.ascontiguousarray(np.broadcast_to(np.asarray(weight, dtype=float), (nb,)))
    return _impl.prox_pnorm_batch(x, float(p), w, tol, max_iter)
