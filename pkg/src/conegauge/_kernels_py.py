"""Pure-numpy projection kernels (fallback backend).

Everything here is vectorized over a leading batch axis: the safeguarded
root-finds run with array-valued brackets, so a batch of projections costs a
bounded number of numpy passes instead of a Python loop per point.  The
compiled backend in ``_kernels.pyx`` implements the same contracts with
scalar C loops; ``kernels.py`` picks one at import time.

Conventions shared by both backends:

* the cone projection solves a single scalar equation in the epigraph
  multiplier ``mu``: with ``x0 = v0 + mu`` the tail solves the componentwise
  stationarity ``u + c*u**(p-1) = |v_i|`` at ``c = mu / x0**(p-1)``, and the
  root of ``F(mu) = ||u(mu)||_p - x0`` gives the projection;
* the q-ball projection root-finds the Lagrange multiplier ``t`` of the same
  componentwise equation with exponent ``q-1`` until ``||u(t)||_q = radius``;
* returned residuals are in the units of the (unnormalized) input, so callers
  can compare them against absolute tolerances.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_TINY = 1e-300
_COORD_ITERS = 80
_OUTER_ITERS = 140


def pnorm(x, p):
    """p-norm along the last axis, max-normalized against overflow."""
    x = np.abs(np.asarray(x, dtype=float))
    if x.shape[-1] == 0:
        raise ValueError("pnorm of an empty vector")
    m = x.max(axis=-1)
    safe = np.where(m > 0.0, m, 1.0)
    with np.errstate(invalid="ignore"):
        s = np.power(x / safe[..., None], p).sum(axis=-1)
        out = m * np.power(s, 1.0 / p)
    return out[()] if out.ndim == 0 else out


def _coord_solve(a, c, r, u0=None):
    """Elementwise solve of ``u + c*u**r = a`` for ``u`` in ``[0, a]``.

    ``a >= 0`` and ``c >= 0`` arrays (c broadcastable to a), scalar ``r > 0``.
    Rows with infinite ``c`` get the limit solution ``u = 0``.
    """
    a = np.asarray(a, dtype=float)
    c_b = np.broadcast_to(np.asarray(c, dtype=float), a.shape)
    if r == 1.0:
        with np.errstate(invalid="ignore"):
            out = a / (1.0 + c_b)
        return np.where(np.isfinite(c_b), out, 0.0)

    finite_c = np.isfinite(c_b)
    active = finite_c & (a > 0.0) & (c_b > 0.0)
    u = np.where(finite_c, a, 0.0)  # c == 0 rows keep u = a
    if not np.any(active):
        return u

    lo = np.zeros_like(a)
    hi = a.copy()
    with np.errstate(all="ignore"):
        if u0 is None:
            init = a / (1.0 + c_b * np.power(a, r - 1.0))
        else:
            init = np.clip(u0, 0.0, a)
        init = np.where(np.isfinite(init) & (init > 0.0) & (init < a), init, 0.5 * a)
        u = np.where(active, init, u)
        for _ in range(_COORD_ITERS):
            f = u + c_b * np.power(u, r) - a
            below = f < 0.0
            lo = np.where(active & below, u, lo)
            hi = np.where(active & ~below, u, hi)
            conv = (np.abs(f) <= 1e-15 * (a + u + _TINY)) | (hi - lo <= 1e-16 * hi + _TINY)
            if np.all(conv | ~active):
                break
            d = 1.0 + c_b * r * np.power(u, r - 1.0)
            un = u - f / d
            bad = ~np.isfinite(un) | (un <= lo) | (un >= hi)
            un = np.where(bad, 0.5 * (lo + hi), un)
            u = np.where(active & ~conv, un, u)
    return u


def _illinois_step(lo, hi, flo, fhi, have_flo):
    """Vectorized safeguarded proposal inside (lo, hi).

    Secant through the bracket endpoints where both residuals are known;
    geometric midpoint when the interval spans many orders of magnitude
    (huge analytic upper bounds); plain bisection otherwise.
    """
    with np.errstate(all="ignore"):
        sec = (lo * fhi - hi * flo) / (fhi - flo)
    mid = 0.5 * (lo + hi)
    wide = hi > 1e3 * np.maximum(lo, 1e-12 * hi)
    geo = np.sqrt(np.maximum(lo, 1e-12 * hi) * hi)
    prop = np.where(have_flo & np.isfinite(sec) & (sec > lo) & (sec < hi), sec,
                    np.where(wide, geo, mid))
    return np.where((prop > lo) & (prop < hi), prop, mid)


def qball_project_batch(x, q, radius, tol=1e-12, max_iter=_OUTER_ITERS):
    """Project the rows of ``x`` onto q-norm balls of radius ``radius``.

    Returns ``(y, resid)`` where ``resid`` is the per-row residual of the
    multiplier equation (zero for rows already inside the ball).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    nb, n = x.shape
    rad = np.broadcast_to(np.asarray(radius, dtype=float), (nb,)).astype(float)
    if np.any(rad <= 0.0):
        raise ValueError("radius must be positive")

    scale = np.maximum(np.abs(x).max(axis=1), rad)
    scale = np.where(scale > 0.0, scale, 1.0)
    b = np.abs(x) / scale[:, None]
    rr = rad / scale
    nq = pnorm(b, q)
    act = nq > rr

    y = x.copy()
    resid = np.zeros(nb)
    if not np.any(act):
        return y, resid

    ab = b[act]
    ar = rr[act]
    bmax = ab.max(axis=1)
    lo = np.zeros(ar.shape)
    flo = nq[act] - ar  # phi(0) > 0
    # analytic multiplier bracket: the root satisfies t < bmax*(n**(1/q)/R)**(q-1)
    with np.errstate(over="ignore"):
        hi = bmax * np.power(n ** (1.0 / q) / ar, q - 1.0) * (1.0 + 1e-9) + 1e-12
    hi = np.where(np.isfinite(hi), hi, 1e300)
    u = 0.5 * ab
    u = _coord_solve(ab, hi[:, None], q - 1.0, u0=u)
    fhi = pnorm(u, q) - ar
    for _ in range(60):  # defensive; the analytic bound holds mathematically
        bad = fhi > 0.0
        if not np.any(bad):
            break
        lo = np.where(bad, hi, lo)
        flo = np.where(bad, fhi, flo)
        hi = np.where(bad, 2.0 * hi, hi)
        u = _coord_solve(ab, hi[:, None], q - 1.0, u0=u)
        fhi = np.where(bad, pnorm(u, q) - ar, fhi)

    have = np.ones(ar.shape, dtype=bool)
    side = np.zeros(ar.shape, dtype=np.int8)
    best_t = hi.copy()
    best_f = np.abs(fhi)
    for _ in range(max_iter):
        t = _illinois_step(lo, hi, flo, fhi, have)
        u = _coord_solve(ab, t[:, None], q - 1.0, u0=u)
        ft = pnorm(u, q) - ar
        better = np.abs(ft) < best_f
        best_f = np.where(better, np.abs(ft), best_f)
        best_t = np.where(better, t, best_t)
        pos = ft > 0.0
        fhi = np.where(pos & (side == 1), 0.5 * fhi, fhi)  # Illinois damping
        flo = np.where(~pos & (side == -1), 0.5 * flo, flo)
        lo = np.where(pos, t, lo)
        flo = np.where(pos, ft, flo)
        hi = np.where(pos, hi, t)
        fhi = np.where(pos, fhi, ft)
        side = np.where(pos, 1, -1).astype(np.int8)
        if np.all((hi - lo <= 4e-16 * hi + _TINY) | (np.abs(ft) <= 1e-15 * ar)):
            break
    u = _coord_solve(ab, best_t[:, None], q - 1.0, u0=u)

    ya = np.sign(x[act]) * u * scale[act, None]
    y[act] = ya
    resid[act] = best_f * scale[act]
    return y, resid


def cone_project_batch(v0, vbar, p, tol=1e-12, max_iter=_OUTER_ITERS):
    """Project rows ``(v0[i], vbar[i])`` onto the p-cone epigraph.

    Returns ``(x0, xbar, dist, resid, case)`` with ``case`` 0 for points
    already in the cone, 1 for points in the polar cone (projection 0) and
    2 for boundary projections obtained by the multiplier root-find.
    """
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    vbar = np.atleast_2d(np.asarray(vbar, dtype=float))
    nb, n = vbar.shape
    q = p / (p - 1.0)

    m = np.maximum(np.abs(v0), np.abs(vbar).max(axis=1))
    scale = np.where(m > 0.0, m, 1.0)
    w0 = v0 / scale
    b = np.abs(vbar) / scale[:, None]
    npb = pnorm(b, p)
    nqb = pnorm(b, q)

    incone = w0 >= npb
    polar = (~incone) & (w0 <= -nqb)
    act = ~(incone | polar)

    x0 = np.where(incone, v0, 0.0)
    xbar = np.where(incone[:, None], vbar, 0.0)
    dist = np.where(polar, np.sqrt(v0 ** 2 + (vbar ** 2).sum(axis=1)), 0.0)
    resid = np.zeros(nb)
    case = np.where(incone, 0, 1)

    if np.any(act):
        aw0 = w0[act]
        ab = b[act]

        def residual(mu, u):
            xc = aw0 + mu
            with np.errstate(all="ignore"):
                c = mu / np.power(xc, p - 1.0)
            u = _coord_solve(ab, c[:, None], p - 1.0, u0=u)
            return pnorm(u, p) - xc, u, c

        lo = np.maximum(0.0, -aw0)
        hi = pnorm(ab, p) - aw0  # F(hi) <= 0 analytically
        # F(lo) is known only when lo = 0; rows with aw0 < 0 have a pole at
        # lo and acquire flo from the first positive residual they see.
        have = aw0 >= 0.0
        flo = np.where(have, pnorm(ab, p) - aw0, 0.0)
        u = 0.5 * ab
        fhi, u, _ = residual(hi, u)
        side = np.zeros(aw0.shape, dtype=np.int8)
        for _ in range(max_iter):
            mu = _illinois_step(lo, hi, flo, fhi, have)
            fval, u, _ = residual(mu, u)
            pos = fval > 0.0
            fhi = np.where(pos & (side == 1), 0.5 * fhi, fhi)
            flo = np.where(~pos & (side == -1) & have, 0.5 * flo, flo)
            lo = np.where(pos, mu, lo)
            flo = np.where(pos, fval, flo)
            have = have | pos
            hi = np.where(pos, hi, mu)
            fhi = np.where(pos, fhi, fval)
            side = np.where(pos, 1, -1).astype(np.int8)
            if np.all(hi - lo <= 1e-17 + 1e-16 * np.abs(hi)):
                break
        mu = 0.5 * (lo + hi)
        fval, u, c = residual(mu, u)

        with np.errstate(all="ignore"):
            tail = c[:, None] * np.power(u, p - 1.0)
            tail = np.where(np.isfinite(c)[:, None], tail, ab)
        sc = scale[act]
        xbar_a = np.sign(vbar[act]) * u * sc[:, None]
        xbar[act] = xbar_a
        x0[act] = pnorm(u, p) * sc
        dist[act] = sc * np.sqrt(mu ** 2 + (tail ** 2).sum(axis=1))
        resid[act] = np.abs(fval) * sc
        case[act] = 2

    return x0, xbar, dist, resid, case


def prox_pnorm_batch(x, p, weight, tol=1e-12, max_iter=_OUTER_ITERS):
    """Moreau prox of ``weight * ||.||_p`` applied to the rows of ``x``."""
    q = p / (p - 1.0)
    y, resid = qball_project_batch(x, q, weight, tol=tol, max_iter=max_iter)
    return np.atleast_2d(np.asarray(x, dtype=float)) - y, resid
