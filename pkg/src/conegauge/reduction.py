"""Conic feasibility problems, certificate verification, exponent assembly.

A problem is an affine set {x : Ax = b} against a product of primitive
blocks (p-cones, rotated second-order cones, exponential cones).  A
reduction chain is a user-supplied list of certificates z_i; each verified
step replaces the current face by its intersection with {z_i}^perp, and the
assembled error-bound exponent is the product of the per-step dominant
exponents of the step FRFs.

Certificates are verified, never searched for.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expcone as _exp
from .errors import ConfigError, UnsupportedFaceError, VerificationError
from .frf import FRFExpr, GFunction, diamond, frf_from_g, kappa_zt, pcone_frf, sum_product_frf
from .pcone import (ConePoint, ExposedRay, FaceClassificationError, PExponent,
                    face_from_exposing, pnorm)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class PConeBlock:
    p: float
    dim: int  # ambient dimension n+1

    def __post_init__(self):
        PExponent(self.p)  # validates the exponent range
        if self.dim < 3:
            raise ConfigError("p-cone blocks need dim >= 3 (tail dimension >= 2)")

    @property
    def kind(self) -> str:
        return "pcone"


@dataclass(frozen=True)
class RSOCBlock:
    dim: int  # (t, u, x) with x of dimension dim - 2

    def __post_init__(self):
        if self.dim < 3:
            raise ConfigError("rotated-SOC blocks need dim >= 3")

    @property
    def kind(self) -> str:
        return "rsoc"


@dataclass(frozen=True)
class ExpConeBlock:
    @property
    def dim(self) -> int:
        return 3

    @property
    def kind(self) -> str:
        return "expcone"


Block = PConeBlock | RSOCBlock | ExpConeBlock


@dataclass(frozen=True)
class ConeSpec:
    """An ordered product of primitive cone blocks."""

    blocks: tuple[Block, ...]

    def __post_init__(self):
        if not self.blocks:
            raise ConfigError("cone spec needs at least one block")
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    def slices(self) -> list[slice]:
        out, off = [], 0
        for b in self.blocks:
            out.append(slice(off, off + b.dim))
            off += b.dim
        return out

    def to_json_dict(self) -> dict:
        out = []
        for b in self.blocks:
            if isinstance(b, PConeBlock):
                out.append({"type": "pcone", "p": b.p, "dim": b.dim})
            elif isinstance(b, RSOCBlock):
                out.append({"type": "rsoc", "dim": b.dim})
            else:
                out.append({"type": "expcone"})
        return {"blocks": out}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ConeSpec":
        blocks: list[Block] = []
        for bd in d["blocks"]:
            kind = bd["type"]
            if kind == "pcone":
                blocks.append(PConeBlock(float(bd["p"]), int(bd["dim"])))
            elif kind == "rsoc":
                blocks.append(RSOCBlock(int(bd["dim"])))
            elif kind == "expcone":
                blocks.append(ExpConeBlock())
            else:
                raise ConfigError(f"unknown block type {kind!r}")
        return cls(tuple(blocks))


# rotated SOC <-> second-order cone: T(t, u, x) = (t+u, t-u, 2x) is symmetric
# and maps the rotated cone onto K_2, so pairings transform by T and T^-1.
def rsoc_to_soc(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(np.asarray(v, dtype=float))
    out[0] = v[0] + v[1]
    out[1] = v[0] - v[1]
    out[2:] = 2.0 * np.asarray(v[2:], dtype=float)
    return out


def soc_to_rsoc(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[0] = 0.5 * (v[0] + v[1])
    out[1] = 0.5 * (v[0] - v[1])
    out[2:] = 0.5 * v[2:]
    return out


@dataclass(frozen=True)
class BlockFace:
    """Current face of one block: the whole block, an extreme ray, a face of
    the exponential cone's 2-d polyhedral face, or the origin."""

    kind: str  # "full" | "ray" | "poly2d" | "zero"
    generator: np.ndarray | None = None
    ray: ExposedRay | None = None  # populated for p-cone/rsoc ray faces

    @classmethod
    def full(cls) -> "BlockFace":
        return cls("full")

    @classmethod
    def zero(cls) -> "BlockFace":
        return cls("zero")


@dataclass
class FeasProblem:
    """Affine set {x : Ax = b} against a cone spec.

    Rank-deficient rows of A are dropped (recorded in ``dropped_rows``); the
    stored translate ``a`` is the minimum-norm solution, which lies in
    range(A^T), and ``basis`` spans range(A^T) = L^perp.
    """

    cone: ConeSpec
    A: np.ndarray
    b: np.ndarray
    dropped_rows: tuple[int, ...] = field(default_factory=tuple)
    basis: np.ndarray | None = None
    a: np.ndarray | None = None
    consistent: bool = True
    lstsq_residual: float = 0.0

    @classmethod
    def build(cls, cone: ConeSpec, A, b, tol: float = 1e-12) -> "FeasProblem":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.size == 0:
            A = A.reshape(0, cone.dim)
        if A.shape[1] != cone.dim:
            raise ConfigError(
                f"A has {A.shape[1]} columns but the cone has dimension {cone.dim}")
        if b.shape != (A.shape[0],):
            raise ConfigError("b length must match the number of rows of A")
        dropped: list[int] = []
        if A.shape[0] > 0:
            # greedy row selection against an orthonormal basis
            kept: list[int] = []
            basis_rows: list[np.ndarray] = []
            for i, row in enumerate(A):
                r = row.copy()
                for qrow in basis_rows:
                    r -= (r @ qrow) * qrow
                nr = np.linalg.norm(r)
                if nr > tol * max(1.0, np.linalg.norm(row)):
                    basis_rows.append(r / nr)
                    kept.append(i)
                else:
                    dropped.append(i)
            A2 = A[kept]
            b2 = b[kept]
        else:
            A2, b2 = A, b
        if A2.shape[0] > 0:
            a, res, _, _ = np.linalg.lstsq(A2, b2, rcond=None)
            resid = float(np.linalg.norm(A2 @ a - b2))
            basis = np.linalg.qr(A2.T)[0] if A2.shape[0] > 0 else None
        else:
            a = np.zeros(cone.dim)
            resid = float(np.linalg.norm(b2)) if b2.size else 0.0
            basis = None
        consistent = resid <= 1e-9 * (1.0 + float(np.linalg.norm(b2)) if b2.size else 1.0)
        return cls(cone=cone, A=A2, b=b2, dropped_rows=tuple(dropped),
                   basis=basis, a=a, consistent=consistent, lstsq_residual=resid)

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeasProblem":
        cone = ConeSpec.from_json_dict(d["cone"])
        return cls.build(cone, d.get("A", []), d.get("b", []))

    def to_json_dict(self) -> dict:
        return {"cone": self.cone.to_json_dict(),
                "A": self.A.tolist(), "b": self.b.tolist()}

    @property
    def rank(self) -> int:
        return self.A.shape[0]

    def lperp_dim_with_a(self) -> int:
        """dim(L^perp intersect {a}^perp); a is in L^perp, so subtract one
        exactly when a is nonzero."""
        r = self.rank
        if self.a is None or float(np.linalg.norm(self.a)) <= 1e-12:
            return r
        return max(r - 1, 0)

    def orth_residuals(self, z: np.ndarray) -> tuple[float, float]:
        """Relative residuals of z in L^perp = range(A^T) and of <z, a> = 0."""
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            return 0.0, 0.0
        if self.basis is None:
            range_res = 1.0  # L^perp = {0}: any nonzero z fails
        else:
            proj = self.basis @ (self.basis.T @ z)
            range_res = float(np.linalg.norm(z - proj)) / nz
        na = float(np.linalg.norm(self.a)) if self.a is not None else 0.0
        a_res = abs(float(z @ self.a)) / (nz * na) if na > 1e-15 else 0.0
        return range_res, a_res


@dataclass(frozen=True)
class ReductionChain:
    """An ordered list of certificates z_i; chain length is len + 1 faces."""

    certificates: tuple[np.ndarray, ...]

    def __post_init__(self):
        certs = tuple(np.asarray(z, dtype=float) for z in self.certificates)
        object.__setattr__(self, "certificates", certs)

    @classmethod
    def from_json_dict(cls, d: dict) -> "ReductionChain":
        return cls(tuple(np.asarray(z, dtype=float) for z in d["certificates"]))

    def to_json_dict(self) -> dict:
        return {"certificates": [z.tolist() for z in self.certificates]}

    def __len__(self) -> int:
        return len(self.certificates)


def dpps_upper_bound(problem: FeasProblem) -> int:
    """min{#nonpolyhedral blocks, dim(L^perp intersect {a}^perp)}.

    All supported block types have distance to polyhedrality 1.
    """
    return min(len(problem.cone.blocks), problem.lperp_dim_with_a())


@dataclass
class BlockStepReport:
    block: int
    kind: str
    dual_residual: float
    transition: str  # "unchanged" | "to_ray" | "to_zero" | "to_subface"
    new_face: BlockFace
    alpha: Fraction | None = None
    detail: str = ""


@dataclass
class StepReport:
    index: int
    range_residual: float
    a_residual: float
    blocks: list[BlockStepReport]
    changed: bool
    ok: bool
    messages: list[str]

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "range_residual": self.range_residual,
            "a_residual": self.a_residual,
            "changed": self.changed,
            "ok": self.ok,
            "messages": list(self.messages),
            "blocks": [
                {
                    "block": br.block,
                    "kind": br.kind,
                    "dual_residual": br.dual_residual,
                    "transition": br.transition,
                    "face": br.new_face.kind,
                    "alpha": None if br.alpha is None else str(br.alpha),
                    "detail": br.detail,
                }
                for br in self.blocks
            ],
        }


@dataclass
class ChainReport:
    ok: bool
    steps: list[StepReport]
    final_faces: list[BlockFace]
    messages: list[str]

    def to_json_dict(self) -> dict:
        return {
            "ok": self.ok,
            "messages": list(self.messages),
            "steps": [s.to_json_dict() for s in self.steps],
            "final_faces": [f.kind for f in self.final_faces],
        }


def _pcone_face_step(block: PConeBlock, face: BlockFace, zb: np.ndarray,
                     tol: float) -> BlockStepReport:
    pe = PExponent(block.p)
    nz = float(np.linalg.norm(zb))
    rep = BlockStepReport(block=-1, kind="pcone", dual_residual=0.0,
                          transition="unchanged", new_face=face)
    if nz <= tol:
        return rep
    if face.kind == "zero":
        return rep
    if face.kind == "ray":
        fz = float(zb @ face.ray.f.as_array())
        nf = face.ray.f.norm()
        rep.dual_residual = max(0.0, -fz) / (nz * nf)
        if fz > tol * nz * nf:
            rep.transition = "to_zero"
            rep.new_face = BlockFace.zero()
            rep.alpha = Fraction(1)
        return rep
    # full block: z must lie in the dual q-cone
    z0 = float(zb[0])
    s = pnorm(zb[1:], pe.dual) if np.abs(zb[1:]).max() > 0 else 0.0
    scale = max(abs(z0), s, 1e-300)
    rep.dual_residual = max(0.0, s - z0) / scale
    if z0 > s + tol * scale:
        rep.transition = "to_zero"
        rep.new_face = BlockFace.zero()
        rep.alpha = Fraction(1)
        rep.detail = "z interior to the dual cone"
        return rep
    if rep.dual_residual <= tol:
        try:
            ray = face_from_exposing(ConePoint(z0, zb[1:]), pe, boundary_tol=max(tol, 1e-9))
        except FaceClassificationError as exc:  # boundary corner cases
            rep.detail = f"classification failed: {exc.classification}"
            return rep
        rep.transition = "to_ray"
        rep.new_face = BlockFace("ray", generator=ray.f.as_array(), ray=ray)
        rep.alpha = ray.alpha
        rep.detail = f"|J_z| = {len(ray.Jz)}"
    return rep


def _rsoc_face_step(block: RSOCBlock, face: BlockFace, zb: np.ndarray,
                    tol: float) -> BlockStepReport:
    # transform the pairing through T and reuse the p = 2 machinery
    rep = _pcone_face_step(PConeBlock(2.0, block.dim), face, soc_to_rsoc(zb), tol)
    rep.kind = "rsoc"
    if rep.transition == "to_ray":
        # map the ray generator back: F^rsoc_z = T^-1 F^soc_(T^-1 z)
        gen = soc_to_rsoc(rep.new_face.ray.f.as_array())
        rep.new_face = BlockFace("ray", generator=gen, ray=rep.new_face.ray)
    return rep


def _expcone_face_step(face: BlockFace, zb: np.ndarray, tol: float) -> BlockStepReport:
    nz = float(np.linalg.norm(zb))
    rep = BlockStepReport(block=-1, kind="expcone", dual_residual=0.0,
                          transition="unchanged", new_face=face)
    if nz <= tol:
        return rep
    if face.kind == "zero":
        return rep
    if face.kind == "ray":
        fz = float(zb @ face.generator)
        nf = float(np.linalg.norm(face.generator))
        rep.dual_residual = max(0.0, -fz) / (nz * nf)
        if fz > tol * nz * nf:
            rep.transition = "to_zero"
            rep.new_face = BlockFace.zero()
            rep.alpha = Fraction(1)
        return rep
    if face.kind == "poly2d":
        gens = face.generator
        inner = [float(zb @ g) for g in gens]
        rep.dual_residual = max(0.0, -min(inner)) / nz
        active = [g for g, v in zip(gens, inner) if v <= tol * nz]
        if len(active) == len(gens):
            return rep
        rep.alpha = Fraction(1)
        if len(active) == 0:
            rep.transition = "to_zero"
            rep.new_face = BlockFace.zero()
        else:
            rep.transition = "to_ray"
            rep.new_face = BlockFace("ray", generator=active[0])
        return rep
    # full exponential cone
    if not _exp.in_expcone_dual(zb, tol=tol * nz):
        rep.dual_residual = 1.0  # qualitative: outside the dual cone
        return rep
    if _exp.expcone_dual_interior(zb, tol=tol):
        rep.transition = "to_zero"
        rep.new_face = BlockFace.zero()
        rep.alpha = Fraction(1)
        return rep
    tag, beta = _exp.classify_dual_boundary(zb, tol=tol)
    if tag == "beta":
        rep.transition = "to_ray"
        rep.new_face = BlockFace("ray", generator=_exp.fbeta_generator(beta))
        rep.alpha = Fraction(1, 2)
        rep.detail = f"F_beta with beta={beta:.6g}"
    elif tag == "minus_infinity":
        rep.transition = "to_subface"
        rep.new_face = BlockFace("poly2d", generator=_exp.FMINUSINF_GENERATORS)
        rep.alpha = None  # log-type gauge, outside the power algebra
        rep.detail = "F_minus_infinity"
    else:
        rep.transition = "to_ray"
        rep.new_face = BlockFace("ray", generator=_exp.FINF_GENERATOR.copy())
        rep.alpha = None
        rep.detail = "F_plus_infinity"
    return rep


def verify_certificate(problem: FeasProblem, chain: ReductionChain,
                       tol: float = DEFAULT_TOL) -> ChainReport:
    """Check each certificate and classify the face chain it induces.

    Per step: z_i must lie in the dual of the current face (blockwise), in
    L^perp = range(A^T), and orthogonal to the translate a; the step must
    strictly shrink at least one block.
    """
    if len(chain) == 0:
        raise ConfigError("chain must contain at least one certificate")
    messages: list[str] = []
    ok = True
    if not problem.consistent:
        ok = False
        messages.append(
            f"affine system inconsistent (lstsq residual {problem.lstsq_residual:.3e})")
    faces = [BlockFace.full() for _ in problem.cone.blocks]
    steps: list[StepReport] = []
    slices = problem.cone.slices()
    for idx, z in enumerate(chain.certificates):
        if z.shape != (problem.cone.dim,):
            raise ConfigError(
                f"certificate {idx} has length {z.shape[0]}, expected {problem.cone.dim}")
        range_res, a_res = problem.orth_residuals(z)
        step_msgs: list[str] = []
        step_ok = True
        if range_res > tol:
            step_ok = False
            step_msgs.append(f"step {idx}: z not in L^perp (residual {range_res:.3e})")
        if a_res > tol:
            step_ok = False
            step_msgs.append(f"step {idx}: <z, a> != 0 (residual {a_res:.3e})")
        brs: list[BlockStepReport] = []
        for bi, (block, sl) in enumerate(zip(problem.cone.blocks, slices)):
            zb = z[sl]
            if isinstance(block, PConeBlock):
                br = _pcone_face_step(block, faces[bi], zb, tol)
            elif isinstance(block, RSOCBlock):
                br = _rsoc_face_step(block, faces[bi], zb, tol)
            else:
                br = _expcone_face_step(faces[bi], zb, tol)
            br.block = bi
            if br.dual_residual > tol:
                step_ok = False
                step_msgs.append(
                    f"step {idx}, block {bi}: dual membership fails "
                    f"(residual {br.dual_residual:.3e})")
            brs.append(br)
        changed = any(br.transition != "unchanged" for br in brs)
        if not changed:
            step_ok = False
            step_msgs.append(f"step {idx}: no block face strictly decreases")
        if step_ok:
            for bi, br in enumerate(brs):
                faces[bi] = br.new_face
        steps.append(StepReport(index=idx, range_residual=range_res,
                                a_residual=a_res, blocks=brs, changed=changed,
                                ok=step_ok, messages=step_msgs))
        messages.extend(step_msgs)
        ok = ok and step_ok
    return ChainReport(ok=ok, steps=steps, final_faces=faces, messages=messages)


def _step_frf(step: StepReport, t_bound: float, gamma_hat: float) -> FRFExpr:
    parts: list[FRFExpr] = []
    for br in step.blocks:
        if br.transition == "unchanged" or br.alpha == Fraction(1):
            parts.append(FRFExpr.linear(1.0, t_bound))
        elif br.kind in ("pcone", "rsoc") and br.transition == "to_ray":
            parts.append(pcone_frf(br.new_face.ray, t_bound, gamma_hat))
        elif br.kind == "expcone" and br.alpha == Fraction(1, 2):
            znorm = 1.0  # certificates are scale-free; normalized gauge
            parts.append(frf_from_g(GFunction.power(Fraction(1, 2)), znorm,
                                    kappa_zt(t_bound, Fraction(1, 2), gamma_hat),
                                    t_bound=t_bound))
        elif br.kind == "expcone" and br.alpha is None:
            raise UnsupportedFaceError(
                f"block {br.block}: face {br.detail} carries a logarithmic "
                "residual gauge outside the power-law FRF algebra")
        else:
            parts.append(FRFExpr.linear(1.0, t_bound))
    return sum_product_frf(parts, kappa=1.0)


@dataclass(frozen=True)
class AssembledBound:
    exponent: Fraction
    frf: FRFExpr
    report: ChainReport | None


def assemble_exponent(problem: FeasProblem, chain: ReductionChain,
                      t_bound: float = 1.0, gamma_hats=None,
                      tol: float = DEFAULT_TOL,
                      report: ChainReport | None = None) -> AssembledBound:
    """Per-step FRFs, diamond-composed along the chain.

    Ray-exposing steps on p-cone blocks use the two-term ray FRF with the
    exponent of the exposed ray; zero-face and polyhedral steps are linear;
    blocks combine by the product-cone sum.  The returned exponent is the
    dominant exponent of the composite, i.e. the exact product of the step
    exponents.  An empty chain is the single-face case and yields exponent 1.
    """
    if len(chain) == 0:
        return AssembledBound(Fraction(1), FRFExpr.linear(1.0, t_bound), None)
    if report is None:
        report = verify_certificate(problem, chain, tol=tol)
    if not report.ok:
        raise VerificationError("chain failed verification; cannot assemble",
                                report=report)
    if gamma_hats is None:
        gammas = [1.0] * len(report.steps)
    elif np.isscalar(gamma_hats):
        gammas = [float(gamma_hats)] * len(report.steps)
    else:
        gammas = [float(g) for g in gamma_hats]
        if len(gammas) != len(report.steps):
            raise ConfigError("need one gamma_hat per chain step")
    phi: FRFExpr | None = None
    for step, gam in zip(report.steps, gammas):
        psi = _step_frf(step, t_bound, gam)
        phi = psi if phi is None else diamond(psi, phi)
    return AssembledBound(phi.dominant_exponent, phi, report)


@dataclass(frozen=True)
class LipschitzClassification:
    kind: str  # "slater" | "zero_intersection" | "needs_chain"
    exponent: Fraction | None
    detail: str


def _block_interior(block: Block, v: np.ndarray, tol: float) -> bool:
    if isinstance(block, PConeBlock):
        return v[0] > pnorm(v[1:], PExponent(block.p)) + tol
    if isinstance(block, RSOCBlock):
        t, u, x = v[0], v[1], v[2:]
        return t > tol and u > tol and t * u > float(x @ x) + tol
    x, y, z = (float(s) for s in v)
    if y <= tol or z <= tol:
        return False
    return x < y * math.log(z / y) - tol


def lipschitz_cases(problem: FeasProblem, feasible_point_hint=None,
                    declared_zero_intersection: bool = False,
                    tol: float = DEFAULT_TOL) -> LipschitzClassification:
    """Classify the Lipschitzian (exponent 1) cases.

    A strictly interior feasible hint certifies Slater; a declared trivial
    intersection also gives a Lipschitzian bound; otherwise a reduction
    chain is needed.
    """
    if feasible_point_hint is not None:
        v = np.asarray(feasible_point_hint, dtype=float)
        if v.shape != (problem.cone.dim,):
            raise ConfigError("hint has the wrong dimension")
        affine_res = float(np.linalg.norm(problem.A @ v - problem.b)) if problem.rank else 0.0
        scale = 1.0 + float(np.linalg.norm(problem.b)) if problem.b.size else 1.0
        interior = all(_block_interior(blk, v[sl], tol)
                       for blk, sl in zip(problem.cone.blocks, problem.cone.slices()))
        if interior and affine_res <= tol * scale:
            return LipschitzClassification(
                "slater", Fraction(1), "hint is strictly interior and feasible")
    if declared_zero_intersection:
        return LipschitzClassification(
            "zero_intersection", Fraction(1),
            "caller declares (L+a) intersect K = {0}")
    return LipschitzClassification("needs_chain", None,
                                   "no constraint qualification certified")


def load_problem(path) -> FeasProblem:
    with open(path, "r", encoding="utf-8") as fh:
        return FeasProblem.from_json_dict(json.load(fh))


def load_chain(path) -> ReductionChain:
    with open(path, "r", encoding="utf-8") as fh:
        return ReductionChain.from_json_dict(json.load(fh))
