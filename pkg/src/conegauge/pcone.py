"""Geometry of the p-cone: norms, membership, projections, facial structure.

The p-cone in R^{n+1} is the epigraph {(x0, xbar) : x0 >= ||xbar||_p}; its
dual under the Euclidean inner product is the q-cone with 1/p + 1/q = 1.
Boundary vectors z of the q-cone expose extreme rays of the p-cone, and each
such ray carries an optimal Holder exponent alpha determined by p and the
support size of the tail of z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, FaceClassificationError, NumericalError

P_MIN = 1.0 + 1e-9
P_MAX = 1e9
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class PExponent:
    """A norm exponent p > 1 together with its conjugate q = p/(p-1)."""

    p: float
    q: float = 0.0

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= P_MIN or p >= P_MAX:
            raise ConfigError(f"p must lie in ({P_MIN}, {P_MAX}), got {self.p!r}")
        object.__setattr__(self, "p", p)
        if self.q in (0.0, None):
            object.__setattr__(self, "q", p / (p - 1.0))
        else:
            object.__setattr__(self, "q", float(self.q))
        if abs(1.0 / self.p + 1.0 / self.q - 1.0) > 1e-14:
            raise ConfigError(f"q={self.q!r} is not conjugate to p={self.p!r}")

    @property
    def p_fraction(self) -> Fraction:
        """The stored p as an exact rational (floats are exact binary rationals)."""
        return Fraction(self.p)

    @property
    def dual(self) -> "PExponent":
        return PExponent(self.q)


def _as_pexp(p) -> PExponent:
    return p if isinstance(p, PExponent) else PExponent(float(p))


@dataclass(frozen=True)
class ConePoint:
    """A vector (x0, xbar) in R^{n+1}; membership in any cone is a predicate."""

    x0: float
    xbar: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.xbar, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ConfigError("xbar must be a nonempty 1-d vector")
        object.__setattr__(self, "xbar", arr)
        object.__setattr__(self, "x0", float(self.x0))

    @classmethod
    def from_array(cls, v) -> "ConePoint":
        v = np.asarray(v, dtype=float)
        return cls(v[0], v[1:])

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.x0], self.xbar))

    @property
    def n(self) -> int:
        return self.xbar.size

    def norm(self) -> float:
        return float(np.sqrt(self.x0 ** 2 + float(self.xbar @ self.xbar)))


@dataclass(frozen=True)
class ExposedRay:
    """The extreme ray of the p-cone exposed by z on the boundary of the q-cone.

    Carries the generator f (with f0 = 1), the support J_z of the tail of z
    (1-based indices), and the optimal exponent alpha of the exposed face.
    """

    z: ConePoint
    f: ConePoint
    Jz: tuple[int, ...]
    alpha: Fraction
    p: PExponent

    @property
    def n(self) -> int:
        return self.f.n


def pnorm(xbar, p) -> float:
    """(sum |x_i|^p)^(1/p), computed with max-normalization."""
    pe = _as_pexp(p)
    xbar = np.asarray(xbar, dtype=float)
    if xbar.size == 0:
        raise ConfigError("pnorm of an empty vector")
    return float(kernels.pnorm(xbar, pe.p))


def in_cone(x: ConePoint, p, tol: float = 0.0) -> bool:
    """x0 >= ||xbar||_p - tol."""
    if tol < 0:
        raise ConfigError("tol must be nonnegative")
    return x.x0 >= pnorm(x.xbar, p) - tol


def project_qball(xbar, q: float, radius: float, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Euclidean projection of xbar onto {y : ||y||_q <= radius}."""
    if q <= 1.0:
        raise ConfigError("q must exceed 1")
    if radius <= 0.0:
        raise ConfigError("radius must be positive")
    xbar = np.asarray(xbar, dtype=float)
    y, resid = kernels.qball_project_batch(xbar[None, :], q, radius, tol=tol,
                                           max_iter=max_iter)
    r = float(resid[0])
    if r > tol * (1.0 + radius + float(np.abs(xbar).max(initial=0.0))):
        raise NumericalError("q-ball projection did not converge", residual=r)
    return y[0]


def project_cone(v: ConePoint, p, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> tuple[ConePoint, float]:
    """Projection onto the p-cone and the distance to it.

    In-cone points are returned unchanged; points whose negation lies in the
    dual q-cone project to the origin; everything else lands on the boundary,
    where the Moreau identity v = P_K(v) + P_{-K_q}(v) holds to within tol.
    """
    pe = _as_pexp(p)
    x0, xbar, dist, resid, _case = kernels.cone_project_batch(
        np.array([v.x0]), v.xbar[None, :], pe.p, tol=tol, max_iter=max_iter)
    r = float(resid[0])
    if r > tol * (1.0 + v.norm()):
        raise NumericalError("cone projection did not converge", residual=r)
    return ConePoint(float(x0[0]), xbar[0]), float(dist[0])


def project_cone_batch(v0, vbar, p, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER):
    """Vectorized :func:`project_cone` over rows; returns (x0, xbar, dist)."""
    pe = _as_pexp(p)
    x0, xbar, dist, resid, _case = kernels.cone_project_batch(
        v0, vbar, pe.p, tol=tol, max_iter=max_iter)
    scale = 1.0 + np.sqrt(np.atleast_1d(v0) ** 2 + (np.atleast_2d(vbar) ** 2).sum(axis=1))
    worst = float((resid / scale).max(initial=0.0))
    if worst > tol:
        raise NumericalError("cone projection batch did not converge", residual=worst)
    return x0, xbar, dist


def project_polar(v: ConePoint, p, tol: float = DEFAULT_TOL) -> tuple[ConePoint, float]:
    """Projection onto the polar cone -K_q, computed as -P_{K_q}(-v)."""
    pe = _as_pexp(p)
    neg = ConePoint(-v.x0, -v.xbar)
    proj, dist = project_cone(neg, pe.dual, tol=tol)
    return ConePoint(-proj.x0, -proj.xbar), dist


def project_soc(v: ConePoint) -> tuple[ConePoint, float]:
    """Closed-form projection onto the second-order cone (p = 2 oracle)."""
    nv = float(np.linalg.norm(v.xbar))
    if nv <= v.x0:
        return v, 0.0
    if nv <= -v.x0:
        return ConePoint(0.0, np.zeros_like(v.xbar)), v.norm()
    t = 0.5 * (v.x0 + nv)
    xbar = v.xbar * (t / nv)
    proj = ConePoint(t, xbar)
    return proj, float(np.linalg.norm(v.as_array() - proj.as_array()))


def zeta_bar(zeta, q: float, tol: float = 1e-9) -> np.ndarray:
    """-sgn(zeta) o |zeta|^(q-1) for a unit q-norm vector; has unit p-norm."""
    zeta = np.asarray(zeta, dtype=float)
    nq = pnorm(zeta, PExponent(q) if q > 1 else q)
    if abs(nq - 1.0) > tol:
        raise ConfigError(f"zeta must lie on the q-sphere, got ||zeta||_q = {nq!r}")
    return -np.sign(zeta) * np.abs(zeta) ** (q - 1.0)


def face_from_exposing(z: ConePoint, p, zero_tol: float = ZERO_TOL,
                       boundary_tol: float = 1e-9) -> ExposedRay:
    """Extreme ray exposed by a boundary vector z of the dual q-cone.

    The generator is f = (1, -sgn(zbar) o |zbar/z0|^(q-1)); the exponent is
    1/2 when the tail support is full, 1/p when it is a single index and
    p < 2, and min{1/2, 1/p} otherwise.  z interior to the dual cone (which
    exposes {0}) or z ~ 0 (which exposes the whole cone) are rejected with a
    classification the caller can dispatch on.
    """
    pe = _as_pexp(p)
    n = z.n
    s = pnorm(z.xbar, pe.dual) if float(np.abs(z.xbar).max(initial=0.0)) > 0 else 0.0
    scale = max(abs(z.x0), s)
    if scale <= 0.0:
        raise FaceClassificationError("z = 0 exposes the whole cone", "zero")
    if z.x0 > s + boundary_tol * scale:
        raise FaceClassificationError(
            "z is interior to the dual cone and exposes {0}", "interior")
    if z.x0 < s - boundary_tol * scale:
        raise FaceClassificationError(
            "z lies outside the dual cone", "outside_dual")

    zbar = z.xbar
    fbar = -np.sign(zbar) * np.abs(zbar / s) ** (pe.q - 1.0)
    jz = tuple(int(i) + 1 for i in np.nonzero(np.abs(zbar) > zero_tol * s)[0])
    if len(jz) == 0:
        raise FaceClassificationError(
            "tail of z vanishes at the zero tolerance", "outside_dual")

    half = Fraction(1, 2)
    inv_p = Fraction(1) / Fraction(pe.p)
    if len(jz) == n:
        alpha = half
    elif len(jz) == 1 and pe.p < 2.0:
        alpha = inv_p
    else:
        alpha = min(half, inv_p)

    zsnap = ConePoint(s, zbar)  # snap onto the boundary of the dual cone
    f = ConePoint(1.0, fbar)
    fz = f.as_array() @ zsnap.as_array()
    if abs(fz) > 1e-10 * f.norm() * zsnap.norm():
        raise NumericalError("ray generator not orthogonal to z", residual=abs(fz))
    return ExposedRay(z=zsnap, f=f, Jz=jz, alpha=alpha, p=pe)


@dataclass(frozen=True)
class RayDistances:
    dv_w: float
    du_w: float
    w: ConePoint
    u: ConePoint


def ray_distances(v: ConePoint, ray: ExposedRay) -> RayDistances:
    """Distances underlying the gamma ratio: w = P_{z^perp} v, u = P_{F_z} w.

    ||v - w|| = |<z, v>| / ||z||; u is the span projection of w when
    <f, v> >= 0 and the origin otherwise.
    """
    zv = v.as_array()
    z = ray.z.as_array()
    f = ray.f.as_array()
    zdot = float(z @ zv)
    z2 = float(z @ z)
    w = zv - (zdot / z2) * z
    fdot = float(f @ zv)  # equals <f, w> because <f, z> = 0
    if fdot >= 0.0:
        u = (fdot / float(f @ f)) * f
    else:
        u = np.zeros_like(w)
    dv_w = abs(zdot) / math.sqrt(z2)
    du_w = float(np.linalg.norm(u - w))
    return RayDistances(dv_w, du_w, ConePoint.from_array(w), ConePoint.from_array(u))


def ray_distances_batch(points: np.ndarray, ray: ExposedRay):
    """Vectorized :func:`ray_distances` over rows of an (m, n+1) array.

    Returns (dv_w, du_w) arrays; used by the gamma estimator, where only the
    two distances matter.
    """
    z = ray.z.as_array()
    f = ray.f.as_array()
    z2 = float(z @ z)
    f2 = float(f @ f)
    zdot = points @ z
    w = points - np.outer(zdot / z2, z)
    fdot = points @ f
    coef = np.where(fdot >= 0.0, fdot / f2, 0.0)
    u = np.outer(coef, f)
    dv_w = np.abs(zdot) / math.sqrt(z2)
    du_w = np.linalg.norm(u - w, axis=1)
    return dv_w, du_w


def random_signed_permutation(rng: np.random.Generator, n: int) -> np.ndarray:
    """A signed permutation of {1..n} encoded as signed 1-based entries."""
    perm = rng.permutation(n) + 1
    signs = rng.integers(0, 2, size=n) * 2 - 1
    return perm * signs


def apply_automorphism(x: ConePoint, scale: float, perm: Sequence[int]) -> ConePoint:
    """scale * (x0, D xbar) for a generalized permutation matrix D.

    ``perm`` holds signed 1-based entries: output coordinate i takes
    sign(perm[i]) * xbar[|perm[i]| - 1].  Such maps preserve the p-cone.
    """
    if scale <= 0:
        raise ConfigError("scale must be positive")
    perm = np.asarray(perm, dtype=int)
    n = x.n
    if perm.shape != (n,) or np.any(perm == 0):
        raise ConfigError("perm must be n signed nonzero entries")
    idx = np.abs(perm) - 1
    if sorted(idx.tolist()) != list(range(n)):
        raise ConfigError("perm entries must form a permutation of 1..n")
    out = np.sign(perm) * x.xbar[idx]
    return ConePoint(scale * x.x0, scale * out)
