"""Algebra of one-step facial residual functions.

An FRF here is a finite sum of power terms ``sum_j coeff_j * eps**alpha_j``
with nonnegative coefficients and exponents in (0, 1], pinned at a fixed
norm bound t.  The algebra keeps exponents as exact rationals so the
dominant small-eps exponent of a diamond-composed chain is the exact product
of the per-step dominant exponents; coefficients are floats because the
constants they encode are empirical.

Canonicalization of compositions only ever majorizes upward, using
subadditivity of concave powers: (x + y)**a <= x**a + y**a for a in (0, 1]
and x, y >= 0, so every returned expression upper-bounds the literal nested
evaluation it replaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConfigError
from .pcone import ExposedRay

_T_REL_TOL = 1e-12


def _as_exponent(e) -> Fraction:
    if isinstance(e, Fraction):
        f = e
    elif isinstance(e, int):
        f = Fraction(e)
    else:
        raise ConfigError(
            f"exponents must be exact rationals (Fraction or int), got {e!r}")
    if not (0 < f <= 1):
        raise ConfigError(f"exponents must lie in (0, 1], got {f}")
    return f


@dataclass(frozen=True)
class FRFExpr:
    """A one-step facial residual function at a fixed norm bound.

    ``terms`` is a tuple of (coeff, exponent) pairs, canonical: exponents
    strictly increasing, coefficients positive, so the first term dominates
    as eps tends to 0.
    """

    terms: tuple[tuple[float, Fraction], ...]
    t_bound: float

    @classmethod
    def build(cls, terms, t_bound: float) -> "FRFExpr":
        if t_bound < 0:
            raise ConfigError("t_bound must be nonnegative")
        merged: dict[Fraction, float] = {}
        for coeff, expo in terms:
            coeff = float(coeff)
            if coeff < 0:
                raise ConfigError("coefficients must be nonnegative")
            if coeff == 0.0:
                continue
            e = _as_exponent(expo)
            merged[e] = merged.get(e, 0.0) + coeff
        canon = tuple(sorted(merged.items(), key=lambda kv: kv[0]))
        return cls(tuple((c, e) for e, c in canon), float(t_bound))

    @classmethod
    def linear(cls, coeff: float, t_bound: float) -> "FRFExpr":
        return cls.build([(coeff, Fraction(1))], t_bound)

    @property
    def dominant_exponent(self) -> Fraction | None:
        return self.terms[0][1] if self.terms else None

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=float)
        out = np.zeros_like(eps, dtype=float)
        for coeff, expo in self.terms:
            out = out + coeff * np.power(eps, float(expo))
        return out[()] if out.ndim == 0 else out

    def to_json_dict(self) -> dict:
        return {
            "terms": [
                {"coeff": c, "exp_num": e.numerator, "exp_den": e.denominator}
                for c, e in self.terms
            ],
            "t_bound": self.t_bound,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FRFExpr":
        terms = [(t["coeff"], Fraction(t["exp_num"], t["exp_den"])) for t in d["terms"]]
        return cls.build(terms, d["t_bound"])


def _check_t(a: FRFExpr, b: FRFExpr):
    scale = max(abs(a.t_bound), abs(b.t_bound), 1.0)
    if abs(a.t_bound - b.t_bound) > _T_REL_TOL * scale:
        raise ConfigError(
            f"incompatible t bounds: {a.t_bound!r} vs {b.t_bound!r}")


def diamond(f: FRFExpr, g: FRFExpr) -> FRFExpr:
    """Canonical upper bound of the composition (f <> g)(a) = f(a + g(a)).

    Each term c*(a + g(a))**e of f expands, by subadditivity of concave
    powers, into c*a**e plus c*d**e*a**(h*e) over the terms (d, h) of g; the
    dominant exponent of the result is the product of the two dominant
    exponents.
    """
    _check_t(f, g)
    out: list[tuple[float, Fraction]] = []
    for c, e in f.terms:
        out.append((c, e))
        for d, h in g.terms:
            out.append((c * d ** float(e), h * e))
    return FRFExpr.build(out, f.t_bound)


def rescaled_shift(psi: FRFExpr, M1: float, M2: float, M3: float, M4: float) -> FRFExpr:
    """Positively rescaled shift M3*psi(M1*eps) + M4*eps at t scaled by M2."""
    if M1 <= 0 or M2 <= 0 or M3 <= 0 or M4 < 0:
        raise ConfigError("need M1, M2, M3 > 0 and M4 >= 0")
    terms = [(M3 * c * M1 ** float(e), e) for c, e in psi.terms]
    if M4 > 0:
        terms.append((M4, Fraction(1)))
    return FRFExpr.build(terms, psi.t_bound * M2)


def sum_product_frf(psis: list[FRFExpr], kappa: float) -> FRFExpr:
    """Blockwise sum sum_i psi_i(kappa * eps) for a product cone step."""
    if not psis:
        raise ConfigError("need at least one block FRF")
    if kappa <= 0:
        raise ConfigError("kappa must be positive")
    t0 = psis[0].t_bound
    terms: list[tuple[float, Fraction]] = []
    for psi in psis:
        _check_t(psi, FRFExpr((), t0))
        terms.extend((c * kappa ** float(e), e) for c, e in psi.terms)
    return FRFExpr.build(terms, t0)


@dataclass(frozen=True)
class GFunction:
    """A monotone nondecreasing residual gauge g on [0, t_max] with g(0) = 0."""

    tag: str
    fn: Callable[[float], float]
    t_max: float
    alpha: Fraction | None = None

    def __post_init__(self):
        for t in np.linspace(0.0, self.t_max, 33):
            v = self.fn(float(t))
            if v < -1e-15:
                raise ConfigError(f"g({t}) = {v} < 0")
        samples = [self.fn(float(t)) for t in np.linspace(0.0, self.t_max, 33)]
        if any(b < a - 1e-12 for a, b in zip(samples, samples[1:])):
            raise ConfigError("g must be monotone nondecreasing on [0, t_max]")
        if abs(self.fn(0.0)) > 1e-15:
            raise ConfigError("g(0) must vanish")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > self.t_max)):
            raise ConfigError(f"argument outside [0, {self.t_max}]")
        out = np.vectorize(self.fn, otypes=[float])(t)
        return out[()] if out.ndim == 0 else out

    @classmethod
    def power(cls, alpha, t_max: float = 1.0) -> "GFunction":
        a = _as_exponent(alpha)
        af = float(a)
        return cls(tag="power", fn=lambda t: t ** af, t_max=t_max, alpha=a)

    @classmethod
    def neg_t_log_t(cls, t_max: float = 1.0 / math.e) -> "GFunction":
        # -t*ln(t) peaks at t = 1/e, so monotonicity caps the domain there
        if t_max > 1.0 / math.e:
            raise ConfigError("neg_t_log_t requires t_max <= 1/e")
        return cls(tag="neg_t_log_t",
                   fn=lambda t: 0.0 if t == 0.0 else -t * math.log(t),
                   t_max=t_max)

    @classmethod
    def inv_neg_log(cls, t_max: float = 0.5) -> "GFunction":
        if t_max >= 1.0:
            raise ConfigError("inv_neg_log requires t_max < 1")
        return cls(tag="inv_neg_log",
                   fn=lambda t: 0.0 if t == 0.0 else -1.0 / math.log(t),
                   t_max=t_max)

    @classmethod
    def custom(cls, fn, t_max: float = 1.0) -> "GFunction":
        return cls(tag="custom", fn=fn, t_max=t_max)


def expcone_g(face_tag: str) -> GFunction:
    """Residual gauges of the three exponential-cone face families.

    ``beta`` -> sqrt, ``minus_infinity`` -> -t*ln(t), ``plus_infinity`` ->
    -1/ln(t); the logarithmic forms are domain-restricted (to [0, 1/e] and
    [0, 0.5] respectively) where they are monotone and positive, with the
    continuous extension g(0) = 0.
    """
    if face_tag == "beta":
        return GFunction.power(Fraction(1, 2), t_max=1.0)
    if face_tag == "minus_infinity":
        return GFunction.neg_t_log_t()
    if face_tag == "plus_infinity":
        return GFunction.inv_neg_log(t_max=0.5)
    raise ConfigError(f"unknown face tag {face_tag!r}")


@dataclass(frozen=True)
class GeneralFRF:
    """The evaluable psi(s) = max{s, s/||z||} + kappa * g(s + max{s, s/||z||}).

    Used when g is not a power law and the two-term canonical form does not
    apply.
    """

    g: GFunction
    znorm: float
    kappa_zt: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        m = max(1.0, 1.0 / self.znorm)
        out = m * s + self.kappa_zt * self.g((1.0 + m) * s)
        return out[()] if out.ndim == 0 else out


def frf_from_g(g: GFunction, znorm: float, kappa_zt: float,
               t_bound: float = 1.0):
    """One-step FRF from a residual gauge g (power laws canonicalize).

    For g = power(alpha) the result is the FRFExpr
    ``max(1, 1/||z||) * s + kappa * ((1 + max(1, 1/||z||)) * s)**alpha``;
    otherwise an evaluable :class:`GeneralFRF` is returned.
    """
    if znorm <= 0:
        raise ConfigError("znorm must be positive")
    if kappa_zt < 0:
        raise ConfigError("kappa_zt must be nonnegative")
    m = max(1.0, 1.0 / znorm)
    if g.tag == "power" and g.alpha is not None:
        return FRFExpr.build(
            [(m, Fraction(1)), (kappa_zt * (1.0 + m) ** float(g.alpha), g.alpha)],
            t_bound)
    return GeneralFRF(g=g, znorm=znorm, kappa_zt=kappa_zt)


def kappa_zt(t: float, alpha, gamma: float) -> float:
    """max{2 t^(1-alpha), 2/gamma}, the error-bound constant of an exponent."""
    a = float(alpha)
    if gamma <= 0:
        raise ConfigError("gamma must be positive (or infinite)")
    first = 2.0 * t ** (1.0 - a) if t > 0 else 0.0
    second = 0.0 if math.isinf(gamma) else 2.0 / gamma
    return max(first, second)


def pcone_frf(ray: ExposedRay, t: float, gamma_hat: float) -> FRFExpr:
    """Two-term FRF of a p-cone extreme-ray step.

    ``kappa*eps + max{2 t^(1-alpha), 2/gamma_hat} * (kappa+1)**alpha *
    eps**alpha`` with kappa = max{1, 1/||z||}; gamma_hat is an empirical or
    user-supplied lower bound for the ratio infimum (infinite at t = 0).
    """
    if t < 0:
        raise ConfigError("t must be nonnegative")
    if not (gamma_hat > 0):
        raise ConfigError("gamma_hat must be positive; a nonpositive estimate "
                          "signals estimator failure")
    kappa = max(1.0, 1.0 / ray.z.norm())
    coeff = kappa_zt(t, ray.alpha, gamma_hat) * (kappa + 1.0) ** float(ray.alpha)
    return FRFExpr.build([(kappa, Fraction(1)), (coeff, ray.alpha)], t)
