"""Empirical certification of exponents: witness curves and estimators.

Witness curves realize the tightness constructions: a point family w_eps in
{z}^perp approaching the face generator whose cone/face distances scale like
the claimed exponent.  Each curve carries *analytic* distance formulas
(exact face distances; certified feasible-point upper bounds for the cone
distance, evaluated cancellation-free with expm1/log1p) because the
interesting regimes sit far below what a double-precision projector can
resolve against O(1) coordinates.  The numerical projector is still exposed
per curve so the analytic formulas can be cross-checked where both resolve.

The gamma estimator samples the cone boundary near the face and tracks the
running minimum of ||v - w||^alpha / ||u - w||, excluding samples with
u = w; its reciprocal feeds the error-bound constant max{2 eta^(1-alpha),
2/gamma}.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple
import warnings

import numpy as np

from . import expcone as _exp
from . import kernels
from .errors import ConfigError, EstimatorError
from .frf import GFunction, kappa_zt
from .pcone import (ExposedRay, PExponent, project_cone_batch,
                    ray_distances_batch)

DEFAULT_EPS_GRID = np.logspace(-2, -6, 12)
_LARGE_SUPPORT_SAFETY = 0.5
_CHUNK = 20000


def default_workers() -> int:
    raw = os.environ.get("CONEGAUGE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class EpsRow(NamedTuple):
    eps: float
    dist_cone: float
    dist_face: float
    ratio: float


class WitnessCurve:
    """Base class: a continuous family eps in (0, 1] -> w_eps in {z}^perp \\ F."""

    family: str = "abstract"

    def point(self, eps: float) -> np.ndarray:
        raise NotImplementedError

    def dist_face(self, eps: float) -> float:
        raise NotImplementedError

    def dist_cone(self, eps: float) -> float:
        raise NotImplementedError

    def dist_cone_numeric(self, eps: float) -> float:
        raise NotImplementedError

    def limit_point(self) -> np.ndarray:
        raise NotImplementedError

    def exposing(self) -> np.ndarray:
        raise NotImplementedError

    def hyperplane_residual(self, eps: float) -> float:
        w = self.point(eps)
        z = self.exposing()
        return abs(float(w @ z)) / (float(np.linalg.norm(z)) * float(np.linalg.norm(w)))


@dataclass
class SmallSupportCurve(WitnessCurve):
    """w_eps equal to the generator except for one zero-support tail index.

    dist(w_eps, F_z) = eps exactly and dist(w_eps, K_p) <= (1+eps^p)^(1/p)-1
    <= eps^p / p, so the log-log slope of cone vs face distance is p.
    """

    ray: ExposedRay
    j: int  # 1-based tail index outside J_z
    family: str = field(default="small_support", init=False)

    def __post_init__(self):
        n = self.ray.n
        if len(self.ray.Jz) >= n:
            raise ConfigError("small-support curve needs |J_z| < n")
        if self.j in self.ray.Jz or not (1 <= self.j <= n):
            raise ConfigError(f"index j={self.j} must lie outside J_z")

    @property
    def p(self) -> PExponent:
        return self.ray.p

    def point(self, eps: float) -> np.ndarray:
        w = self.ray.f.as_array().copy()
        w[self.j] = eps
        return w

    def dist_face(self, eps: float) -> float:
        return float(eps)

    def dist_cone(self, eps: float) -> float:
        p = self.p.p
        return math.expm1(math.log1p(eps ** p) / p)

    def dist_cone_numeric(self, eps: float) -> float:
        w = self.point(eps)
        _, _, dist = project_cone_batch(w[:1], w[None, 1:], self.p)
        return float(dist[0])

    def limit_point(self) -> np.ndarray:
        return self.ray.f.as_array()

    def exposing(self) -> np.ndarray:
        return self.ray.z.as_array()


@dataclass
class LargeSupportCurve(WitnessCurve):
    """Perturbation of the generator along one support index of z.

    The construction cancels the first-order cone violation, leaving
    dist(w, K_p) = O(eps^2) while dist(w, F_z) = c*eps exactly, so the
    log-log slope is 2.  The admissible parameter range (0, eps_max) is
    mapped affinely onto (0, 1].
    """

    ray: ExposedRay
    i: int | None = None  # 1-based support index; defaults to the largest |z_i|
    family: str = field(default="large_support", init=False)

    def __post_init__(self):
        if len(self.ray.Jz) < 2:
            raise ConfigError("large-support curve needs |J_z| >= 2")
        zbar = self.ray.z.xbar
        if self.i is None:
            self.i = int(np.argmax(np.abs(zbar))) + 1
        if self.i not in self.ray.Jz:
            raise ConfigError(f"index i={self.i} must lie inside J_z")
        z0 = self.ray.z.x0
        zi = float(zbar[self.i - 1])
        fi = float(self.ray.f.xbar[self.i - 1])  # = zeta_bar at index i
        self._z0 = z0
        self._zi = zi
        self._fi = fi
        self._eps_max = min(abs(zi) * abs(fi), z0)
        # exact linear coefficient of the face distance (valid while <w,f> >= 0)
        f2 = self.ray.f.norm() ** 2
        g = self._fi / self._zi - 1.0 / self._z0
        h = 1.0 / self._zi ** 2 + 1.0 / self._z0 ** 2
        self._face_coeff = math.sqrt(h - g * g / f2)

    @property
    def p(self) -> PExponent:
        return self.ray.p

    def _raw(self, eps: float) -> float:
        return eps * self._eps_max * _LARGE_SUPPORT_SAFETY

    def point(self, eps: float) -> np.ndarray:
        e = self._raw(eps)
        w = self.ray.f.as_array().copy()
        w[0] = 1.0 - e / self._z0
        w[self.i] = self._fi + e / self._zi
        return w

    def dist_face(self, eps: float) -> float:
        return self._face_coeff * self._raw(eps)

    def dist_cone(self, eps: float) -> float:
        e = self._raw(eps)
        p = self.p.p
        # delta = |f_i + e/z_i|^p - |f_i|^p, evaluated cancellation-free;
        # the perturbation always shrinks |f_i| because z_i * f_i < 0
        rel = e / (self._zi * self._fi)
        delta = abs(self._fi) ** p * math.expm1(p * math.log1p(rel))
        return abs(math.expm1(math.log1p(delta) / p) + e / self._z0)

    def dist_cone_numeric(self, eps: float) -> float:
        w = self.point(eps)
        _, _, dist = project_cone_batch(w[:1], w[None, 1:], self.p)
        return float(dist[0])

    def limit_point(self) -> np.ndarray:
        return self.ray.f.as_array()

    def exposing(self) -> np.ndarray:
        return self.ray.z.as_array()


@dataclass
class ExpconeCurve(WitnessCurve):
    """Witness curves of the three exponential-cone face families."""

    face: str  # "plus_infinity", "minus_infinity" or "beta"
    beta: float = 0.0

    def __post_init__(self):
        if self.face not in ("plus_infinity", "minus_infinity", "beta"):
            raise ConfigError(f"unknown exponential-cone face {self.face!r}")
        self.family = f"expcone_{self.face}"
        if self.face == "beta":
            self._z = _exp.fbeta_exposing(self.beta)
            self._f = _exp.fbeta_generator(self.beta)

    def point(self, eps: float) -> np.ndarray:
        if self.face == "plus_infinity":
            return np.array([-1.0, eps, 0.0])
        if self.face == "minus_infinity":
            return np.array([-eps * math.log(eps), 0.0, 1.0])
        c = np.array([1.0 - self.beta + eps, 1.0, math.exp(1.0 - self.beta + eps)])
        z = self._z
        return c - (float(c @ z) / float(z @ z)) * z

    def dist_face(self, eps: float) -> float:
        if self.face == "plus_infinity":
            return float(eps)
        if self.face == "minus_infinity":
            return -eps * math.log(eps)
        return _exp.dist_ray(self.point(eps), self._f)

    def dist_cone(self, eps: float) -> float:
        if self.face == "plus_infinity":
            # feasible point (-1, eps, eps*e^(-1/eps)); exact to ~40 digits
            return eps * math.exp(-1.0 / eps)
        if self.face == "minus_infinity":
            # feasible point (-eps*ln eps, eps, 1) lies exactly on the boundary
            return float(eps)
        # w is the hyperplane projection of the boundary point c_eps
        z = self._z
        gap = math.exp(1.0 - self.beta) * (math.expm1(eps) - eps)
        return gap / float(np.linalg.norm(z))

    def dist_cone_numeric(self, eps: float) -> float:
        return _exp.dist_expcone(self.point(eps))

    def limit_point(self) -> np.ndarray:
        if self.face == "plus_infinity":
            return _exp.FINF_GENERATOR.copy()
        if self.face == "minus_infinity":
            return np.array([0.0, 0.0, 1.0])
        return self._f.copy()

    def exposing(self) -> np.ndarray:
        if self.face == "plus_infinity":
            return np.array([0.0, 0.0, 1.0])
        if self.face == "minus_infinity":
            return np.array([0.0, 1.0, 0.0])
        return self._z.copy()


def witness_small_support(ray: ExposedRay, p=None, j: int | None = None) -> SmallSupportCurve:
    """Witness of order 1/p for rays with |J_z| < n (perturbed zero index)."""
    if p is not None and abs(_pexp(p).p - ray.p.p) > 1e-12:
        raise ConfigError("p disagrees with the ray's exponent")
    if j is None:
        candidates = [k for k in range(1, ray.n + 1) if k not in ray.Jz]
        if not candidates:
            raise ConfigError("small-support curve needs |J_z| < n")
        j = candidates[0]
    return SmallSupportCurve(ray=ray, j=j)


def witness_large_support(ray: ExposedRay, p=None, i: int | None = None) -> LargeSupportCurve:
    """Witness of order 1/2 for rays with |J_z| >= 2 (perturbed support index)."""
    if p is not None and abs(_pexp(p).p - ray.p.p) > 1e-12:
        raise ConfigError("p disagrees with the ray's exponent")
    return LargeSupportCurve(ray=ray, i=i)


def _pexp(p) -> PExponent:
    return p if isinstance(p, PExponent) else PExponent(float(p))


@dataclass(frozen=True)
class G1Estimate:
    estimate: float
    rows: tuple[EpsRow, ...]
    excluded: int
    tail: int


def g1_limsup(curve: WitnessCurve, g: GFunction, eps_grid=None, tail: int = 4) -> G1Estimate:
    """Empirical limsup of g(dist(w_eps, K)) / dist(w_eps, F) along the curve.

    The estimate is the maximum over the last ``tail`` grid points (the grid
    is ordered decreasing, so the tail is the small-eps end); ratios that
    evaluate to NaN or infinity are excluded with a warning.
    """
    grid = DEFAULT_EPS_GRID if eps_grid is None else np.asarray(eps_grid, dtype=float)
    if np.any(grid <= 0.0) or np.any(grid > 1.0):
        raise ConfigError("eps grid must lie in (0, 1]")
    rows = []
    excluded = 0
    for eps in grid:
        dk = curve.dist_cone(float(eps))
        df = curve.dist_face(float(eps))
        with np.errstate(all="ignore"):
            if df > 0.0 and dk <= g.t_max:
                ratio = float(g(dk)) / df
            else:
                ratio = math.inf
        if not math.isfinite(ratio):
            excluded += 1
            warnings.warn(f"eps={eps:g}: ratio not finite or g out of domain, "
                          "excluded from estimate")
            ratio = math.nan
        rows.append(EpsRow(float(eps), dk, df, ratio))
    tail_rows = [r for r in rows[-tail:] if math.isfinite(r.ratio)]
    if not tail_rows:
        raise EstimatorError("no finite ratios in the limsup tail")
    return G1Estimate(max(r.ratio for r in tail_rows), tuple(rows), excluded, tail)


@dataclass(frozen=True)
class FitResult:
    slope: float
    r2: float


def fit_exponent(curve: WitnessCurve, eps_grid=None) -> FitResult:
    """Least-squares slope of log dist(w, K) against log dist(w, F).

    Small-support curves converge to slope p, large-support curves to 2.
    """
    grid = DEFAULT_EPS_GRID if eps_grid is None else np.asarray(eps_grid, dtype=float)
    if grid.size < 5:
        raise ConfigError("need at least 5 grid points")
    dk = np.array([curve.dist_cone(float(e)) for e in grid])
    df = np.array([curve.dist_face(float(e)) for e in grid])
    if np.any(dk <= 0.0) or np.any(df <= 0.0):
        raise ConfigError("all grid distances must be positive")
    x = np.log(df)
    y = np.log(dk)
    if float(x.std()) == 0.0:
        raise ConfigError("degenerate grid: zero variance in log face distance")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), r2)


@dataclass(frozen=True)
class GammaEstimate:
    value: float
    samples: int
    eta: float
    trend: tuple[tuple[int, float], ...]
    alpha: Fraction
    excluded: int

    @property
    def kappa(self) -> float:
        return kappa_zt(self.eta, self.alpha, self.value)


def _boundary_chunk(rng: np.random.Generator, ray: ExposedRay, eta: float, count: int):
    """Boundary samples v in dK_p intersect B(eta), rejecting v in F_z."""
    n = ray.n
    p = ray.p.p
    g = rng.standard_normal((count, n))
    norms = np.linalg.norm(g, axis=1)
    norms = np.where(norms > 0, norms, 1.0)
    radii = (1.0 - rng.random(count)) * (eta / 2.0)  # uniform in (0, eta/2]
    xbar = g * (radii / norms)[:, None]
    v0 = np.asarray(kernels.pnorm(xbar, p))
    pts = np.column_stack([v0, xbar])
    vnorm = np.linalg.norm(pts, axis=1)
    over = vnorm > eta
    if np.any(over):  # scaling keeps points on the boundary
        pts[over] *= (eta / vnorm[over])[:, None]
    return pts


def estimate_gamma(ray: ExposedRay, p=None, eta: float = 1.0, n_samples: int = 100000,
                   seed: int = 0, workers: int | None = None) -> GammaEstimate:
    """Running minimum of ||v-w||^alpha / ||u-w|| over boundary samples.

    Deterministic for fixed (seed, n_samples): the sample stream is generated
    in fixed-size chunks seeded independently of the worker count, and the
    min-reduction is order independent.
    """
    if p is not None and abs(_pexp(p).p - ray.p.p) > 1e-12:
        raise ConfigError("p disagrees with the ray's exponent")
    if eta <= 0:
        raise ConfigError("eta must be positive")
    if n_samples < 1:
        raise ConfigError("need at least one sample")
    alpha = float(ray.alpha)
    ss = np.random.SeedSequence(seed)
    n_chunks = (n_samples + _CHUNK - 1) // _CHUNK
    children = ss.spawn(n_chunks)
    sizes = [min(_CHUNK, n_samples - k * _CHUNK) for k in range(n_chunks)]

    def run_chunk(args):
        child, size = args
        rng = np.random.default_rng(child)
        pts = _boundary_chunk(rng, ray, eta, size)
        dv, du = ray_distances_batch(pts, ray)
        on_face = dv + du <= 1e-12 * eta  # v in F_z, rejected
        usable = (~on_face) & (du > 1e-13 * eta)
        excluded = int(np.sum(~usable))
        if not np.any(usable):
            return math.inf, excluded, size
        ratios = dv[usable] ** alpha / du[usable]
        return float(ratios.min()), excluded, size

    jobs = list(zip(children, sizes))
    nworkers = default_workers() if workers is None else max(1, workers)
    if nworkers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(run_chunk, jobs))
    else:
        results = [run_chunk(j) for j in jobs]

    trend = []
    running = math.inf
    used = 0
    excluded = 0
    for (mn, exc, size) in results:
        running = min(running, mn)
        used += size - exc
        excluded += exc
        trend.append((used + excluded, running))
    if used == 0 or not math.isfinite(running):
        raise EstimatorError("gamma estimator produced no usable samples")
    return GammaEstimate(value=running, samples=used, eta=eta,
                         trend=tuple(trend), alpha=ray.alpha, excluded=excluded)


@dataclass(frozen=True)
class HoldoutReport:
    checked: int
    violations: int
    min_margin: float
    kappa: float


def check_error_bound(ray: ExposedRay, gamma_hat: float, eta: float = 1.0,
                      n_holdout: int = 1000, seed: int = 1,
                      slack: float = 1e-10) -> HoldoutReport:
    """Held-out check of dist(x, F_z) <= max{2 eta^(1-a), 2/gamma} dist(x, K)^a.

    Samples x in {z}^perp intersect B(eta); the face distance uses the exact
    ray formula, the cone distance the numerical projector.  ``slack`` only
    guards the degenerate both-distances-zero corner against float noise.
    """
    alpha = float(ray.alpha)
    kap = kappa_zt(eta, ray.alpha, gamma_hat)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = ray.n
    z = ray.z.as_array()
    z2 = float(z @ z)
    g = rng.standard_normal((n_holdout, n + 1))
    g = g - np.outer((g @ z) / z2, z)
    norms = np.linalg.norm(g, axis=1)
    norms = np.where(norms > 0, norms, 1.0)
    radii = (1.0 - rng.random(n_holdout)) * eta
    x = g * (radii / norms)[:, None]

    _, du = ray_distances_batch(x, ray)  # dv is 0: x already in the hyperplane
    _, _, dk = project_cone_batch(x[:, 0], x[:, 1:], ray.p)
    bound = kap * dk ** alpha + slack * (1.0 + eta)
    margins = bound - du
    violations = int(np.sum(margins < 0))
    return HoldoutReport(checked=n_holdout, violations=violations,
                         min_margin=float(margins.min()), kappa=kap)


def default_curve_grid(curve: WitnessCurve) -> np.ndarray:
    """Per-family default eps grids (log-domain quantities need larger eps)."""
    if curve.family == "expcone_plus_infinity":
        return np.logspace(-1, -2.5, 12)
    if curve.family == "expcone_beta":
        return np.logspace(-1, -4, 12)
    return DEFAULT_EPS_GRID.copy()


def make_pcone_curve(ray: ExposedRay) -> WitnessCurve:
    """The natural witness family for a ray: small support if available."""
    if len(ray.Jz) < ray.n:
        return witness_small_support(ray)
    return witness_large_support(ray)
