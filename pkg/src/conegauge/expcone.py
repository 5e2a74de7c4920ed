"""Exponential cone geometry: membership, dual membership, projection, faces.

K_exp = cl{(x, y, z) : y > 0, z >= y*exp(x/y)}; its closure adds the
polyhedral 2-d face {(x, 0, z) : x <= 0, z >= 0}.  The nontrivial exposed
faces are that 2-d face, the rays through (1-beta, 1, e^(1-beta)) for real
beta, and the exceptional ray through (-1, 0, 0).

The projector solves the boundary KKT system through a single scalar
root-find in r = x/y of the projected point; the displacement (and hence the
distance) is assembled from the dual multiplier quantities directly so tiny
distances are not lost to cancellation against O(1) coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

_R_MAX = 1e9


def fbeta_generator(beta: float) -> np.ndarray:
    return np.array([1.0 - beta, 1.0, math.exp(1.0 - beta)])


def fbeta_exposing(beta: float) -> np.ndarray:
    e = math.exp(1.0 - beta)
    return np.array([-e, -beta * e, 1.0])


FINF_GENERATOR = np.array([-1.0, 0.0, 0.0])
FMINUSINF_GENERATORS = (np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))


def in_expcone(v, tol: float = 0.0) -> bool:
    """Algebraic membership test with tolerance tol on each defining inequality."""
    x, y, z = (float(t) for t in v)
    if y < -tol:
        return False
    if y <= tol and x <= tol and z >= -tol:  # the polyhedral face
        return True
    if y > 0.0 and z > 0.0:  # smooth piece, log form avoids exp overflow
        return x <= y * math.log(z / y) + tol
    return False


def in_expcone_dual(v, tol: float = 0.0) -> bool:
    """Membership in K_exp^* = {(a,b,c) : a<0, c >= -a*e^(b/a - 1)} u {a=0, b,c>=0}."""
    a, b, c = (float(t) for t in v)
    if a < -tol:
        if c <= 0.0:
            return False
        # -a * e^(b/a - 1) <= c  <=>  ln(-a) + b/a - 1 <= ln(c)
        return math.log(-a) + b / a - 1.0 <= math.log(c) + tol
    return a <= tol and b >= -tol and c >= -tol


def expcone_dual_interior(v, tol: float = 1e-9) -> bool:
    a, b, c = (float(t) for t in v)
    if a >= -tol or c <= tol:
        return False
    return math.log(-a) + b / a - 1.0 < math.log(c) - tol


def _residual(r: float, wx: float, wy: float, wz: float):
    """Scaled KKT residual and the multiplier quantities (u, y, s) at r.

    The boundary projection satisfies x = r*y, z = y*e^r, w - P = (u,
    u*(1-r), -s) with u = (wx - r*wy)/(r^2 - r + 1) and s = u*e^-r; the
    residual is s - (y*e^r - wz), rescaled by e^-|r| to avoid overflow.
    """
    d = r * r - r + 1.0
    u = (wx - r * wy) / d
    y = wy - u * (1.0 - r)
    if r <= 0.0:
        e1 = math.exp(r) if r > -745.0 else 0.0
        res = u - y * e1 * e1 + wz * e1
    else:
        e1 = math.exp(-r) if r < 745.0 else 0.0
        res = u * e1 * e1 - y + wz * e1
    return res, u, y


def _scan_grid() -> np.ndarray:
    pos = np.logspace(-8, math.log10(_R_MAX), 240)
    return np.concatenate((-pos[::-1], [0.0], pos))


@dataclass(frozen=True)
class ExpConeProjection:
    point: np.ndarray
    dist: float
    residual: float


def project_expcone(w, tol: float = 1e-12) -> ExpConeProjection:
    """Euclidean projection onto K_exp with a cancellation-free distance."""
    w = np.asarray(w, dtype=float)
    if w.shape != (3,):
        raise ConfigError("exponential-cone points live in R^3")
    scale = float(np.abs(w).max())
    if scale == 0.0:
        return ExpConeProjection(w.copy(), 0.0, 0.0)
    wn = w / scale
    wx, wy, wz = (float(t) for t in wn)

    if in_expcone(wn, tol=0.0):
        return ExpConeProjection(w.copy(), 0.0, 0.0)
    if in_expcone_dual(-wn, tol=0.0):
        return ExpConeProjection(np.zeros(3), float(np.linalg.norm(w)), 0.0)
    if wx <= 0.0 and wy <= 0.0:
        proj = np.array([wx, 0.0, max(wz, 0.0)])
        dist = math.hypot(wy, min(wz, 0.0))
        return ExpConeProjection(proj * scale, dist * scale, 0.0)

    # Seed with the projection onto the polyhedral face {(x,0,z): x<=0, z>=0}:
    # always feasible, and exact (to roundoff) when the smooth-boundary
    # parameterization degenerates as y -> 0+.
    poly = np.array([min(wx, 0.0), 0.0, max(wz, 0.0)])
    best = (poly, float(np.linalg.norm(wn - poly)), 0.0)

    # smooth-boundary case: bracket sign changes of the scaled residual in r
    grid = _scan_grid()
    vals = np.array([_residual(float(r), wx, wy, wz)[0] for r in grid])
    for k in range(len(grid) - 1):
        f0, f1 = vals[k], vals[k + 1]
        if not (np.isfinite(f0) and np.isfinite(f1)):
            continue
        if f0 == 0.0:
            cand = _finalize(float(grid[k]), wx, wy, wz)
            best = _better(best, cand)
            continue
        if f0 * f1 < 0.0:
            lo, hi = float(grid[k]), float(grid[k + 1])
            flo = f0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm, _, _ = _residual(mid, wx, wy, wz)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm > 0.0) == (flo > 0.0):
                    lo = mid
                    flo = fm
                else:
                    hi = mid
                if hi - lo <= 1e-16 * (abs(lo) + abs(hi)) + 1e-300:
                    break
            cand = _finalize(0.5 * (lo + hi), wx, wy, wz)
            best = _better(best, cand)
    point, dist, res = best
    return ExpConeProjection(point * scale, dist * scale, res * scale)


def _finalize(r: float, wx: float, wy: float, wz: float):
    res, u, y = _residual(r, wx, wy, wz)
    # u = (wx - r*wy)/(r^2 - r + 1) cancels catastrophically near the root
    # when the true multiplier is below float resolution; collapse it to the
    # boundary point with y = wy, whose z-gap alone carries the distance.
    ucrit = 1e-12 * (abs(wx) + abs(r * wy)) / (r * r - r + 1.0)
    collapsed = abs(u) <= ucrit
    if collapsed:
        u = 0.0
        y = wy
    if y <= 0.0 or u < -1e-12:
        return None
    er = math.exp(r) if r < 700.0 else math.inf
    emr = math.exp(-r) if r > -700.0 else math.inf
    s = u * emr if math.isfinite(emr) else 0.0
    if not math.isfinite(s):
        s = 0.0
    if s < -1e-12:
        return None
    z = y * er if math.isfinite(er) else math.inf
    if not math.isfinite(z):
        z = wz + s
    point = np.array([r * y, y, z])
    if collapsed:
        dist = abs(wz - z)
    else:
        dist = math.sqrt(u * u * (1.0 + (1.0 - r) ** 2) + s * s)
    return point, dist, abs(res)


def _better(best, cand):
    if cand is None:
        return best
    if best is None or cand[1] < best[1]:
        return cand
    return best


def dist_expcone(w, tol: float = 1e-12) -> float:
    return project_expcone(w, tol=tol).dist


def dist_finf(w) -> float:
    """Distance to the ray {(x, 0, 0) : x <= 0}."""
    w = np.asarray(w, dtype=float)
    t = max(0.0, -w[0])
    return float(np.linalg.norm(w - t * FINF_GENERATOR))


def dist_fminusinf(w) -> float:
    """Distance to the 2-d face {(x, 0, z) : x <= 0, z >= 0}."""
    w = np.asarray(w, dtype=float)
    proj = np.array([min(w[0], 0.0), 0.0, max(w[2], 0.0)])
    return float(np.linalg.norm(w - proj))


def dist_ray(w, generator) -> float:
    """Distance to the ray through a generator."""
    w = np.asarray(w, dtype=float)
    g = np.asarray(generator, dtype=float)
    t = max(0.0, float(w @ g) / float(g @ g))
    return float(np.linalg.norm(w - t * g))


def classify_dual_boundary(z, tol: float = 1e-9):
    """Which face a boundary vector of K_exp^* exposes.

    Returns ("beta", beta) for the smooth piece, ("minus_infinity", None) or
    ("plus_infinity", None) for the a = 0 piece.
    """
    a, b, c = (float(t) for t in np.asarray(z, dtype=float))
    scale = max(abs(a), abs(b), abs(c))
    if scale <= 0:
        raise ConfigError("zero vector exposes the whole cone")
    if a < -tol * scale:
        return ("beta", b / a)
    if b > tol * scale and c <= tol * scale:
        return ("minus_infinity", None)
    return ("plus_infinity", None)
