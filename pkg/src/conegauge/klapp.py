"""Least squares with p-norm regularization: conic lift and KL exponents.

g(x) = 0.5*||Ax - b||^2 + sum_i lambda_i*||x_i||_p lifts to a conic program
over a rotated second-order cone (for the quadratic) times one p-cone per
block (for the regularizers).  The optimal-set slice of the lift determines
a KL exponent 1 - min{1/2, 1/p}^d for g at its minimizers, where d is the
number of facial-reduction steps the lifted problem needs; d is supplied by
the caller (with d <= s+1 always, and d <= 1 under strict complementarity).

A plain proximal-gradient solver is included to exercise the p-norm prox.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import ConfigError, DivergenceError
from .pcone import ConePoint, PExponent, pnorm
from .reduction import ConeSpec, PConeBlock, RSOCBlock

_POWER_ITERS = 100
_POWER_RTOL = 1e-6


@dataclass(frozen=True)
class RegLSInstance:
    """0.5*||Ax-b||^2 + sum_i lambda_i*||x_i||_p with x split into s blocks."""

    A: np.ndarray
    b: np.ndarray
    lambdas: tuple[float, ...]
    block_dims: tuple[int, ...]
    p: PExponent

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lambdas", tuple(float(l) for l in self.lambdas))
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        if not isinstance(self.p, PExponent):
            object.__setattr__(self, "p", PExponent(float(self.p)))
        if b.shape != (A.shape[0],):
            raise ConfigError("b length must match the rows of A")
        if len(self.lambdas) != len(self.block_dims):
            raise ConfigError("one lambda per block required")
        if any(l <= 0 for l in self.lambdas):
            raise ConfigError("lambdas must be positive")
        if any(d < 2 for d in self.block_dims):
            raise ConfigError("block dimensions must be at least 2")
        if sum(self.block_dims) != A.shape[1]:
            raise ConfigError("block dimensions must sum to the columns of A")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def s(self) -> int:
        return len(self.block_dims)

    def block_slices(self) -> list[slice]:
        out, off = [], 0
        for d in self.block_dims:
            out.append(slice(off, off + d))
            off += d
        return out

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        r = self.A @ x - self.b
        val = 0.5 * float(r @ r)
        for lam, sl in zip(self.lambdas, self.block_slices()):
            val += lam * pnorm(x[sl], self.p)
        return val

    @classmethod
    def from_json_dict(cls, d: dict) -> "RegLSInstance":
        return cls(A=np.asarray(d["A"], dtype=float),
                   b=np.asarray(d["b"], dtype=float),
                   lambdas=tuple(d["lambdas"]),
                   block_dims=tuple(d["block_dims"]),
                   p=PExponent(float(d["p"])))

    def to_json_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(),
                "lambdas": list(self.lambdas),
                "block_dims": list(self.block_dims), "p": self.p.p}


@dataclass
class ConicReformulation:
    """The lift: variables v = (t, u, w, (y_1, x_1), ..., (y_s, x_s)).

    Equalities: Ax - w = b (m rows) and u = 1; objective 0.5*t + sum lam_i*y_i;
    cone: RSOC(m+2) x prod_i K_p^{n_i+1}.  Setting ``theta`` pins the
    optimal-value slice (objective = theta) used for the KL analysis.
    """

    instance: RegLSInstance
    cone: ConeSpec
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    objective_vector: np.ndarray
    theta: float | None = None

    @property
    def dim(self) -> int:
        return self.cone.dim

    def var_slices(self) -> dict:
        m = self.instance.m
        out = {"t": 0, "u": 1, "w": slice(2, 2 + m)}
        off = 2 + m
        blocks = []
        for d in self.instance.block_dims:
            blocks.append((off, slice(off + 1, off + 1 + d)))
            off += d + 1
        out["blocks"] = blocks
        return out

    def lift(self, x) -> np.ndarray:
        """Feasible lift of x: t = ||Ax-b||^2, u = 1, w = Ax-b, y_i = ||x_i||_p."""
        x = np.asarray(x, dtype=float)
        inst = self.instance
        r = inst.A @ x - inst.b
        v = np.zeros(self.dim)
        sl = self.var_slices()
        v[sl["t"]] = float(r @ r)
        v[sl["u"]] = 1.0
        v[sl["w"]] = r
        for (ypos, xsl), bsl in zip(sl["blocks"], inst.block_slices()):
            v[ypos] = pnorm(x[bsl], inst.p)
            v[xsl] = x[bsl]
        return v

    def objective(self, v) -> float:
        return float(self.objective_vector @ np.asarray(v, dtype=float))

    def equality_residual(self, v) -> float:
        return float(np.linalg.norm(self.eq_matrix @ np.asarray(v, dtype=float) - self.eq_rhs))

    def with_theta(self, theta: float) -> "ConicReformulation":
        return ConicReformulation(self.instance, self.cone, self.eq_matrix,
                                  self.eq_rhs, self.objective_vector, float(theta))

    def optimal_slice_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Equalities of the optimal-set slice V (requires theta)."""
        if self.theta is None:
            raise ConfigError("theta is not set; call with_theta first")
        E = np.vstack([self.eq_matrix, self.objective_vector[None, :]])
        rhs = np.concatenate([self.eq_rhs, [self.theta]])
        return E, rhs


def reformulate(instance: RegLSInstance) -> ConicReformulation:
    """Build the conic lift; dimensions are (m+2) + sum_i (n_i + 1)."""
    m, s = instance.m, instance.s
    blocks = [RSOCBlock(m + 2)]
    blocks += [PConeBlock(instance.p.p, d + 1) for d in instance.block_dims]
    cone = ConeSpec(tuple(blocks))
    dim = cone.dim
    expected = (m + 2) + sum(d + 1 for d in instance.block_dims)
    if dim != expected:
        raise ConfigError("dimension bookkeeping mismatch in the lift")

    E = np.zeros((m + 1, dim))
    rhs = np.zeros(m + 1)
    # rows 0..m-1: Ax - w = b
    E[:m, 2:2 + m] = -np.eye(m)
    off = 2 + m
    for bsl, d in zip(instance.block_slices(), instance.block_dims):
        E[:m, off + 1: off + 1 + d] = instance.A[:, bsl]
        off += d + 1
    rhs[:m] = instance.b
    # row m: u = 1
    E[m, 1] = 1.0
    rhs[m] = 1.0

    c = np.zeros(dim)
    c[0] = 0.5
    off = 2 + m
    for lam, d in zip(instance.lambdas, instance.block_dims):
        c[off] = lam
        off += d + 1
    return ConicReformulation(instance=instance, cone=cone, eq_matrix=E,
                              eq_rhs=rhs, objective_vector=c)


def kl_exponent(p, d: int) -> Fraction:
    """1 - min{1/2, 1/p}^d as an exact rational; d = 0 is the Lipschitz regime."""
    if d < 0:
        raise ConfigError("d must be nonnegative")
    pe = p if isinstance(p, PExponent) else PExponent(float(p))
    alpha = min(Fraction(1, 2), Fraction(1) / pe.p_fraction)
    return Fraction(1) - alpha ** d


def prox_pnorm(xbar, p, weight: float, tol: float = 1e-12) -> np.ndarray:
    """prox of weight*||.||_p via the Moreau identity x - P_{q-ball(weight)}(x)."""
    if weight <= 0:
        raise ConfigError("weight must be positive")
    pe = p if isinstance(p, PExponent) else PExponent(float(p))
    xbar = np.asarray(xbar, dtype=float)
    out, resid = kernels.prox_pnorm_batch(xbar[None, :], pe.p, weight, tol=tol)
    scale = 1.0 + weight + float(np.abs(xbar).max(initial=0.0))
    if float(resid[0]) > tol * scale:
        raise DivergenceError("prox inner projection failed", residual=float(resid[0]))
    return out[0]


def estimate_lipschitz(A: np.ndarray, iters: int = _POWER_ITERS,
                       rtol: float = _POWER_RTOL) -> float:
    """Largest eigenvalue of A^T A by power iteration (deterministic start)."""
    n = A.shape[1]
    v = np.ones(n) / math.sqrt(n)
    lam = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - lam) <= rtol * max(nw, 1e-300):
            lam = nw
            break
        lam = nw
    return lam


@dataclass
class ProxGradResult:
    x: np.ndarray
    objectives: list[float] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    step: float = 0.0
    lipschitz: float = 0.0
    iterations: int = 0
    converged: bool = False


def _apply_prox(inst: RegLSInstance, x: np.ndarray, step: float) -> np.ndarray:
    # equal-dimension blocks share one batched kernel call
    out = x.copy()
    groups: dict[int, list[int]] = {}
    for i, d in enumerate(inst.block_dims):
        groups.setdefault(d, []).append(i)
    slices = inst.block_slices()
    for d, idxs in groups.items():
        stacked = np.vstack([x[slices[i]] for i in idxs])
        weights = np.array([step * inst.lambdas[i] for i in idxs])
        prox, _ = kernels.prox_pnorm_batch(stacked, inst.p.p, weights)
        for row, i in enumerate(idxs):
            out[slices[i]] = prox[row]
    return out


def prox_grad_residual(instance: RegLSInstance, x, step: float) -> float:
    """Gradient-mapping norm ||x - prox(x - step*grad f(x))|| / step."""
    x = np.asarray(x, dtype=float)
    grad = instance.A.T @ (instance.A @ x - instance.b)
    xn = _apply_prox(instance, x - step * grad, step)
    return float(np.linalg.norm(x - xn)) / step


def solve_prox_grad(instance: RegLSInstance, step="auto", iters: int = 20000,
                    tol: float = 1e-10, x0=None) -> ProxGradResult:
    """Proximal gradient descent on the regularized objective.

    The trace is monotone nonincreasing for step <= 1/L; an objective
    increase beyond 1e-10*(1+|obj|) aborts with diagnostics.  Terminates on
    ||x_{k+1} - x_k|| <= tol or the iteration cap.
    """
    lip = estimate_lipschitz(instance.A)
    if step == "auto":
        if lip <= 0:
            raise ConfigError("A^T A is numerically zero; supply a step")
        step_val = 0.99 / lip
    else:
        step_val = float(step)
        if step_val <= 0 or (lip > 0 and step_val > 1.0 / lip + 1e-15):
            raise ConfigError("step must lie in (0, 1/L]")
    x = np.zeros(instance.n) if x0 is None else np.asarray(x0, dtype=float).copy()
    res = ProxGradResult(x=x, step=step_val, lipschitz=lip)
    obj = instance.objective(x)
    res.objectives.append(obj)
    for k in range(iters):
        grad = instance.A.T @ (instance.A @ x - instance.b)
        xn = _apply_prox(instance, x - step_val * grad, step_val)
        obj_n = instance.objective(xn)
        if obj_n > obj + 1e-10 * (1.0 + abs(obj)):
            raise DivergenceError(
                f"objective increased at iteration {k}: {obj} -> {obj_n}",
                residual=obj_n - obj)
        move = float(np.linalg.norm(xn - x))
        res.objectives.append(obj_n)
        res.step_norms.append(move)
        x = xn
        obj = obj_n
        res.iterations = k + 1
        if move <= tol:
            res.converged = True
            break
    res.x = x
    return res


def _block_face_membership(block, v, s, tol):
    """Relative-interior membership of v in the face of one block exposed by s."""
    ns = float(np.linalg.norm(s))
    nv = float(np.linalg.norm(v))
    if isinstance(block, PConeBlock):
        pe = PExponent(block.p)
        if ns <= tol:  # full block: need strict interior
            return v[0] > pnorm(v[1:], pe) + tol
        z0, s_tail = float(s[0]), s[1:]
        sq = pnorm(s_tail, pe.dual) if np.abs(s_tail).max() > 0 else 0.0
        if z0 > sq + tol * max(z0, sq):  # interior dual: face {0}
            return nv <= tol
        from .pcone import face_from_exposing  # local import to avoid cycle noise
        ray = face_from_exposing(ConePoint(z0, s_tail), pe)
        f = ray.f.as_array()
        t = float(v @ f) / float(f @ f)
        return t > tol and float(np.linalg.norm(v - t * f)) <= tol * max(1.0, nv)
    if isinstance(block, RSOCBlock):
        from .reduction import rsoc_to_soc, soc_to_rsoc
        return _block_face_membership(PConeBlock(2.0, block.dim),
                                      rsoc_to_soc(v), soc_to_rsoc(s), tol)
    raise ConfigError("strict complementarity check supports pcone/rsoc blocks")


def check_strict_complementarity(v_star, s_star, cone: ConeSpec,
                                 tol: float = 1e-8) -> bool:
    """Is v* in the relative interior of the face of K exposed by s*?

    True certifies that the lifted problem needs at most one reduction step
    (d <= 1).  Complementarity <v*, s*> = 0 is a precondition and violations
    are rejected.
    """
    v = np.asarray(v_star, dtype=float)
    s = np.asarray(s_star, dtype=float)
    if v.shape != (cone.dim,) or s.shape != (cone.dim,):
        raise ConfigError("v* and s* must match the cone dimension")
    comp = abs(float(v @ s))
    scale = (1.0 + float(np.linalg.norm(v))) * (1.0 + float(np.linalg.norm(s)))
    if comp > tol * scale:
        raise ConfigError(f"complementarity violated: <v*, s*> = {comp:.3e}")
    return all(_block_face_membership(blk, v[sl], s[sl], tol)
               for blk, sl in zip(cone.blocks, cone.slices()))
