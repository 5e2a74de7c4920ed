# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar kernels for p-cone and q-ball projections.

Same contracts as ``_kernels_py`` (see the module docstring there); the hot
root-finds run as plain C loops per point, with warm-started coordinatewise
Newton solves inside an Illinois-safeguarded secant iteration on the scalar
multiplier.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt, isfinite

cnp.import_array()

BACKEND_NAME = "cython"

cdef double TINY = 1e-300


cdef double _pnorm_c(const double* x, Py_ssize_t n, double p) noexcept nogil:
    cdef double m = 0.0, s = 0.0, a
    cdef Py_ssize_t i
    for i in range(n):
        a = fabs(x[i])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    for i in range(n):
        s += pow(fabs(x[i]) / m, p)
    return m * pow(s, 1.0 / p)


cdef double _coord_c(double a, double c, double r, double u0) noexcept nogil:
    """Solve u + c*u**r = a for u in [0, a]; u0 is a warm start."""
    cdef double lo, hi, u, f, d, un
    cdef int it
    if a <= 0.0:
        return 0.0
    if c == 0.0:
        return a
    if not isfinite(c):
        return 0.0
    if r == 1.0:
        return a / (1.0 + c)
    lo = 0.0
    hi = a
    u = u0
    if not (u > lo and u < hi):
        u = a / (1.0 + c * pow(a, r - 1.0))
        if not (u > lo and u < hi):
            u = 0.5 * a
    for it in range(80):
        f = u + c * pow(u, r) - a
        if f < 0.0:
            lo = u
        else:
            hi = u
        if fabs(f) <= 1e-15 * (a + u) or hi - lo <= 1e-16 * hi + TINY:
            break
        d = 1.0 + c * r * pow(u, r - 1.0)
        un = u - f / d
        if not (un > lo and un < hi):
            un = 0.5 * (lo + hi)
        u = un
    return u


cdef double _cone_f(double w0, const double* b, double* u, Py_ssize_t n,
                    double p, double mu) noexcept nogil:
    """Residual F(mu) = ||u(mu)||_p - (w0 + mu) of the epigraph multiplier."""
    cdef double x0 = w0 + mu, c
    cdef Py_ssize_t i
    if x0 <= 0.0:
        for i in range(n):
            u[i] = 0.0
        return -x0
    c = mu / pow(x0, p - 1.0)
    if not isfinite(c):
        for i in range(n):
            u[i] = 0.0
        return -x0
    for i in range(n):
        u[i] = _coord_c(b[i], c, p - 1.0, u[i])
    return _pnorm_c(u, n, p) - x0


cdef double _cone_solve(double w0, const double* b, double* u, Py_ssize_t n,
                        double p, int max_iter, double* resid_out) noexcept nogil:
    """Root-find the multiplier for a point strictly between cone and polar."""
    cdef double npb = _pnorm_c(b, n, p)
    cdef double lo, hi, flo, fhi, mu, f, best_mu, best_f, step
    cdef int it, side, have_flo
    cdef Py_ssize_t i

    if w0 >= 0.0:
        lo = 0.0
        flo = npb - w0
        have_flo = 1
    else:
        lo = -w0
        flo = 0.0
        have_flo = 0
    hi = npb - w0  # F(hi) <= 0 analytically
    fhi = _cone_f(w0, b, u, n, p, hi)
    it = 0
    while fhi > 0.0 and it < 60:  # defensive; cannot happen in exact arithmetic
        lo = hi
        flo = fhi
        have_flo = 1
        hi = 2.0 * hi + 1e-3
        fhi = _cone_f(w0, b, u, n, p, hi)
        it += 1

    if not have_flo:
        # F(lo+) > 0 is known but lo itself is a pole; creep toward it until
        # a positive residual is bracketed.
        step = hi - lo
        for it in range(80):
            step *= 0.5
            mu = lo + step
            f = _cone_f(w0, b, u, n, p, mu)
            if f > 0.0:
                lo = mu
                flo = f
                have_flo = 1
                break
            hi = mu
            fhi = f
            if step <= 1e-18 * (fabs(lo) + 1.0):
                break

    best_mu = hi
    best_f = fabs(fhi)
    side = 0
    for it in range(max_iter):
        if have_flo and fhi < flo:
            mu = (lo * fhi - hi * flo) / (fhi - flo)
            if not (mu > lo and mu < hi):
                mu = 0.5 * (lo + hi)
        else:
            mu = 0.5 * (lo + hi)
        f = _cone_f(w0, b, u, n, p, mu)
        if fabs(f) < best_f:
            best_f = fabs(f)
            best_mu = mu
        if f > 0.0:
            if side == 1 and have_flo:
                fhi *= 0.5  # Illinois: damp the stale endpoint
            lo = mu
            flo = f
            have_flo = 1
            side = 1
        else:
            if side == -1 and have_flo:
                flo *= 0.5
            hi = mu
            fhi = f
            side = -1
        # F can be steep (near-polar, small residual at a badly-localized mu
        # is impossible) or nearly flat (tiny residual over a wide interval),
        # so require both a small residual and a collapsed bracket
        if fabs(f) <= 1e-13 * (fabs(w0) + npb + 1.0) and \
                hi - lo <= 1e-16 * (fabs(hi) + 1.0) + TINY:
            break

    resid_out[0] = best_f
    _cone_f(w0, b, u, n, p, best_mu)  # leave u consistent with best_mu
    return best_mu


def cone_project_batch(object v0_in, object vbar_in, double p,
                       double tol=1e-12, int max_iter=140):
    """Batch p-cone projection; see the python backend for the contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v0 = np.ascontiguousarray(
        np.atleast_1d(v0_in), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vbar = np.ascontiguousarray(
        np.atleast_2d(vbar_in), dtype=np.float64)
    cdef Py_ssize_t nb = vbar.shape[0], n = vbar.shape[1], i, j
    cdef double q = p / (p - 1.0)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] x0 = np.zeros(nb)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] xbar = np.zeros((nb, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist = np.zeros(nb)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] resid = np.zeros(nb)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] case = np.zeros(nb, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bwork = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uwork = np.zeros(n)

    cdef double* bp = &bwork[0] if n > 0 else NULL
    cdef double* up = &uwork[0] if n > 0 else NULL
    cdef double m, w0, npb, nqb, mu, rr, xc, c, tail, s2, sgn

    with nogil:
        for i in range(nb):
            m = fabs(v0[i])
            for j in range(n):
                if fabs(vbar[i, j]) > m:
                    m = fabs(vbar[i, j])
            if m == 0.0:
                case[i] = 0
                continue
            w0 = v0[i] / m
            for j in range(n):
                bp[j] = fabs(vbar[i, j]) / m
            npb = _pnorm_c(bp, n, p)
            nqb = _pnorm_c(bp, n, q)
            if w0 >= npb:
                case[i] = 0
                x0[i] = v0[i]
                for j in range(n):
                    xbar[i, j] = vbar[i, j]
                continue
            if w0 <= -nqb:
                case[i] = 1
                s2 = v0[i] * v0[i]
                for j in range(n):
                    s2 += vbar[i, j] * vbar[i, j]
                dist[i] = sqrt(s2)
                continue
            case[i] = 2
            for j in range(n):
                up[j] = 0.5 * bp[j]
            mu = _cone_solve(w0, bp, up, n, p, max_iter, &rr)
            xc = w0 + mu
            c = mu / pow(xc, p - 1.0)
            s2 = mu * mu
            for j in range(n):
                if isfinite(c):
                    tail = c * pow(up[j], p - 1.0)
                else:
                    tail = bp[j]
                s2 += tail * tail
                sgn = 1.0 if vbar[i, j] > 0.0 else (-1.0 if vbar[i, j] < 0.0 else 0.0)
                xbar[i, j] = sgn * up[j] * m
            dist[i] = m * sqrt(s2)
            resid[i] = m * rr
            x0[i] = m * _pnorm_c(up, n, p)

    return x0, xbar, dist, resid, case


cdef double _qball_phi(const double* b, double* u, Py_ssize_t n, double q,
                       double t, double rr) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        u[i] = _coord_c(b[i], t, q - 1.0, u[i])
    return _pnorm_c(u, n, q) - rr


def qball_project_batch(object x_in, double q, object radius_in,
                        double tol=1e-12, int max_iter=140):
    """Batch projection onto q-norm balls; see the python backend."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x = np.ascontiguousarray(
        np.atleast_2d(x_in), dtype=np.float64)
    cdef Py_ssize_t nb = x.shape[0], n = x.shape[1], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rad = np.ascontiguousarray(
        np.broadcast_to(np.asarray(radius_in, dtype=np.float64), (nb,)), dtype=np.float64)
    if np.any(rad <= 0.0):
        raise ValueError("radius must be positive")

    cdef cnp.ndarray[cnp.float64_t, ndim=2] y = x.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] resid = np.zeros(nb)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bwork = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uwork = np.zeros(n)
    cdef double* bp = &bwork[0] if n > 0 else NULL
    cdef double* up = &uwork[0] if n > 0 else NULL

    cdef double m, rr, nq, bmax, lo, hi, flo, fhi, t, f, sgn, best_t, best_f
    cdef int it, side

    with nogil:
        for i in range(nb):
            m = rad[i]
            for j in range(n):
                if fabs(x[i, j]) > m:
                    m = fabs(x[i, j])
            rr = rad[i] / m
            for j in range(n):
                bp[j] = fabs(x[i, j]) / m
            nq = _pnorm_c(bp, n, q)
            if nq <= rr:
                continue
            bmax = 0.0
            for j in range(n):
                if bp[j] > bmax:
                    bmax = bp[j]
                up[j] = 0.5 * bp[j]
            lo = 0.0
            flo = nq - rr
            hi = bmax * pow(pow(<double> n, 1.0 / q) / rr, q - 1.0) * (1.0 + 1e-9) + TINY
            if not isfinite(hi):
                hi = 1e300
            fhi = _qball_phi(bp, up, n, q, hi, rr)
            it = 0
            while fhi > 0.0 and it < 200:  # defensive
                lo = hi
                flo = fhi
                hi *= 2.0
                fhi = _qball_phi(bp, up, n, q, hi, rr)
                it += 1
            best_t = hi
            best_f = fabs(fhi)
            side = 0
            for it in range(max_iter):
                if fhi < flo:
                    t = (lo * fhi - hi * flo) / (fhi - flo)
                else:
                    t = 0.5 * (lo + hi)
                if not (t > lo and t < hi):
                    if hi > 1e6 * (lo + 1e-12):
                        t = sqrt((lo + 1e-12 * hi) * hi)  # geometric fallback
                    else:
                        t = 0.5 * (lo + hi)
                f = _qball_phi(bp, up, n, q, t, rr)
                if fabs(f) < best_f:
                    best_f = fabs(f)
                    best_t = t
                if f > 0.0:
                    if side == 1:
                        fhi *= 0.5
                    lo = t
                    flo = f
                    side = 1
                else:
                    if side == -1:
                        flo *= 0.5
                    hi = t
                    fhi = f
                    side = -1
                if hi - lo <= 4e-16 * hi + TINY or fabs(f) <= 1e-15 * rr:
                    break
            _qball_phi(bp, up, n, q, best_t, rr)
            for j in range(n):
                sgn = 1.0 if x[i, j] > 0.0 else (-1.0 if x[i, j] < 0.0 else 0.0)
                y[i, j] = sgn * up[j] * m
            resid[i] = best_f * m

    return y, resid


def prox_pnorm_batch(object x_in, double p, object weight_in,
                     double tol=1e-12, int max_iter=140):
    """Moreau prox of ``weight * ||.||_p`` applied to the rows of ``x``."""
    cdef double q = p / (p - 1.0)
    x = np.ascontiguousarray(np.atleast_2d(x_in), dtype=np.float64)
    y, resid = qball_project_batch(x, q, weight_in, tol, max_iter)
    return x - y, resid
