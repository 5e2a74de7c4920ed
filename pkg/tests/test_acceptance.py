"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a single PASS line (visible with ``pytest -s``) carrying the
measured quantity and its budget; assertion failures mark the criterion red.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

import conegauge as cg
from conegauge import tightness as tl
from conegauge import reduction as red
from conegauge import klapp
from conegauge.frf import FRFExpr, GFunction, diamond, expcone_g
from conegauge.pcone import pnorm
from conftest import make_ray, random_boundary_z


def _report(num, name, detail, elapsed, budget):
    print(f"PASS criterion {num} ({name}): {detail} [{elapsed:.2f}s < {budget:.0f}s]")


def test_c1_exponent_oracle_exact():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    checked = 0
    for p in (1.5, 2.0, 3.0, 5.0):
        pf = Fraction(p)
        for n in (2, 3, 5):
            for support in range(1, n + 1):
                z = random_boundary_z(rng, p, n, support)
                ray = cg.face_from_exposing(z, p)
                if support == n:
                    want = Fraction(1, 2)
                elif support == 1 and p < 2.0:
                    want = 1 / pf
                else:
                    want = min(Fraction(1, 2), 1 / pf)
                assert ray.alpha == want
                assert len(ray.Jz) == support
                checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report(1, "exponent oracle", f"{checked} (p, n, |J_z|) cells exact", elapsed, 1)


@pytest.mark.parametrize("p", [1.5, 3.0, 5.0])
def test_c2_small_support_slope(p):
    t0 = time.perf_counter()
    grid = np.logspace(-2, -6, 12)
    ray = make_ray(p, [-0.8, 0.5, 0.0])
    fit = tl.fit_exponent(tl.witness_small_support(ray), grid)
    elapsed = time.perf_counter() - t0
    assert abs(fit.slope - p) <= 0.05
    assert elapsed < 10.0
    _report(2, f"small-support slope p={p}", f"slope={fit.slope:.4f}", elapsed, 10)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_c2_large_support_slope(p):
    t0 = time.perf_counter()
    grid = np.logspace(-2, -6, 12)
    ray = make_ray(p, [-0.6, -0.9])
    fit = tl.fit_exponent(tl.witness_large_support(ray), grid)
    elapsed = time.perf_counter() - t0
    assert abs(fit.slope - 2.0) <= 0.05
    assert elapsed < 10.0
    _report(2, f"large-support slope p={p}", f"slope={fit.slope:.4f}", elapsed, 10)


def test_c3_g1_limsup_estimates():
    t0 = time.perf_counter()
    details = []
    for p in (1.5, 3.0, 5.0):
        ray = make_ray(p, [-1.0, 0.0])
        curve = tl.witness_small_support(ray)
        est = tl.g1_limsup(curve, GFunction.power(ray.alpha),
                           np.logspace(-2, -6, 12))
        bound = (1.0 / p) ** (1.0 / p) + 0.01
        assert 0 < est.estimate <= bound
        details.append(f"p={p}:{est.estimate:.4f}<={bound:.4f}")

    finf = tl.ExpconeCurve("plus_infinity")
    est_inf = tl.g1_limsup(finf, expcone_g("plus_infinity"),
                           tl.default_curve_grid(finf))
    assert 0 < est_inf.estimate <= 1.05

    fminf = tl.ExpconeCurve("minus_infinity")
    est_minf = tl.g1_limsup(fminf, expcone_g("minus_infinity"),
                            tl.default_curve_grid(fminf))
    assert 0 < est_minf.estimate <= 1.05

    fb = tl.ExpconeCurve("beta", beta=0.5)
    est_b = tl.g1_limsup(fb, expcone_g("beta"), tl.default_curve_grid(fb))
    assert 0 < est_b.estimate < math.inf

    elapsed = time.perf_counter() - t0
    assert elapsed < 15.0  # three families, < 5 s each
    details.append(f"Finf:{est_inf.estimate:.3f} Fminf:{est_minf.estimate:.3f} "
                   f"Fbeta:{est_b.estimate:.3f}")
    _report(3, "G1 limsup", " ".join(details), elapsed, 15)


def test_c4_projection_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 6
    worst = {"moreau": 0.0, "orth": 0.0, "idem": 0.0, "vi": -np.inf, "soc": 0.0}
    for p in (1.5, 2.0, 3.0, 7.0):
        pe = cg.PExponent(p)
        v0 = rng.normal(size=10000) * 2
        vb = rng.normal(size=(10000, n)) * 2
        x0, xb, dist = cg.project_cone_batch(v0, vb, pe)
        y0, yb, _ = cg.project_cone_batch(-v0, -vb, pe.dual)
        y0, yb = -y0, -yb  # projection onto the polar cone
        nv = np.sqrt(v0 ** 2 + (vb ** 2).sum(axis=1))

        moreau = np.abs(v0 - x0 - y0) + np.linalg.norm(vb - xb - yb, axis=1)
        assert np.all(moreau <= 1e-9 * (1 + nv))
        orth = np.abs(x0 * y0 + (xb * yb).sum(axis=1))
        assert np.all(orth <= 1e-9 * (1 + nv ** 2))
        worst["moreau"] = max(worst["moreau"], float((moreau / (1 + nv)).max()))
        worst["orth"] = max(worst["orth"], float((orth / (1 + nv ** 2)).max()))

        xx0, xxb, _ = cg.project_cone_batch(x0, xb, pe)
        idem = np.abs(xx0 - x0) + np.linalg.norm(xxb - xb, axis=1)
        assert np.all(idem <= 1e-10)
        worst["idem"] = max(worst["idem"], float(idem.max()))

        yb_s = rng.normal(size=(1000, n))
        y0_s = np.asarray([pnorm(r, pe) for r in yb_s]) * (1 + rng.random(1000))
        Y = np.column_stack([y0_s, yb_s])
        X = np.column_stack([x0, xb])
        V = np.column_stack([v0, vb])
        G = (V - X) @ Y.T - ((V - X) * X).sum(axis=1)[:, None]
        ny = np.linalg.norm(Y, axis=1)
        assert np.all(G <= 1e-8 * np.outer(1 + nv, 1 + ny))
        worst["vi"] = max(worst["vi"], float((G / np.outer(1 + nv, 1 + ny)).max()))

        if p == 2.0:
            for i in range(0, 10000, 5):
                soc, sd = cg.project_soc(cg.ConePoint(v0[i], vb[i]))
                delta = abs(soc.x0 - x0[i]) + float(
                    np.linalg.norm(soc.xbar - xb[i]))
                assert delta <= 1e-10
                worst["soc"] = max(worst["soc"], delta)

    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report(4, "projection suite",
            f"moreau={worst['moreau']:.1e} orth={worst['orth']:.1e} "
            f"idem={worst['idem']:.1e} soc={worst['soc']:.1e}", elapsed, 30)


def test_c5_gamma_positivity_and_error_bound():
    t0 = time.perf_counter()
    configs = [
        (1.5, [-1.0, 0.0], 1.0),
        (2.0, [0.6, -0.8], 1.0),
        (3.0, [-1.0, 0.0, 0.0], 2.0),
        (3.0, [0.5, 0.5, -0.5], 1.0),
        (7.0, [-0.3, 0.8, 0.0], 1.0),
    ]
    details = []
    for k, (p, zbar, eta) in enumerate(configs):
        ray = make_ray(p, zbar)
        gam = tl.estimate_gamma(ray, eta=eta, n_samples=100000, seed=100 + k)
        assert gam.value > 0
        rep = tl.check_error_bound(ray, gam.value, eta=eta, n_holdout=1000,
                                   seed=200 + k)
        assert rep.violations == 0
        details.append(f"p={p}:g={gam.value:.3f},v=0")
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report(5, "gamma + holdout bound", " ".join(details), elapsed, 60)


def test_c6_frf_diamond_exactness_and_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    grid = np.logspace(-8, 0, 17)
    for _ in range(100):
        length = int(rng.integers(1, 6))
        exprs = []
        for _ in range(length):
            dom = Fraction(int(rng.integers(1, 9)), int(rng.integers(9, 13)))
            terms = [(float(rng.uniform(0.1, 3.0)), dom)]
            if rng.random() < 0.5:
                terms.append((float(rng.uniform(0.1, 3.0)), Fraction(1)))
            exprs.append(FRFExpr.build(terms, 1.0))
        composite = exprs[0]
        literal_parts = [exprs[0]]
        for psi in exprs[1:]:
            composite = diamond(psi, composite)
            literal_parts.append(psi)

        want = math.prod((e.dominant_exponent for e in exprs), start=Fraction(1))
        assert composite.dominant_exponent == want

        def literal(a):
            val = literal_parts[0](a)
            for psi in literal_parts[1:]:
                val = psi(a + val)
            return val

        for a in grid:
            lit = literal(a)
            assert composite(a) >= lit - 1e-9 * (1 + lit)
    elapsed = time.perf_counter() - t0
    _report(6, "FRF algebra", "100 chains exact, soundness on 17-point grids",
            elapsed, 30)


def test_c7_chain_assembly_examples():
    t0 = time.perf_counter()

    def bz(p, zbar):
        pe = cg.PExponent(p)
        zbar = np.asarray(zbar, dtype=float)
        return np.concatenate(([pnorm(zbar, pe.dual)], zbar))

    z = bz(3.0, [-0.6, -0.8])
    prob = red.FeasProblem.build(red.ConeSpec((red.PConeBlock(3.0, 3),)),
                                 z[None, :], np.zeros(1))
    assert red.assemble_exponent(prob, red.ReductionChain((z,))).exponent == \
        Fraction(1, 2)

    z2 = bz(1.5, [-1.0, 0.0])
    prob2 = red.FeasProblem.build(red.ConeSpec((red.PConeBlock(1.5, 3),)),
                                  z2[None, :], np.zeros(1))
    assert red.assemble_exponent(prob2, red.ReductionChain((z2,))).exponent == \
        Fraction(2, 3)

    cone3 = red.ConeSpec((red.PConeBlock(4.0, 3), red.PConeBlock(4.0, 3)))
    za = np.concatenate([bz(4.0, [-1.0, 0.0]), np.zeros(3)])
    zb = np.concatenate([np.zeros(3), bz(4.0, [-1.0, 0.0])])
    prob3 = red.FeasProblem.build(cone3, np.vstack([za, zb]), np.zeros(2))
    assert red.assemble_exponent(prob3, red.ReductionChain((za, zb))).exponent == \
        Fraction(1, 16)

    assert red.assemble_exponent(prob3, red.ReductionChain(())).exponent == \
        Fraction(1)

    elapsed = time.perf_counter() - t0
    _report(7, "chain assembly", "1/2, 2/3, 1/16 and empty-chain identity",
            elapsed, 30)


def test_c8_kl_application():
    t0 = time.perf_counter()
    assert klapp.kl_exponent(3.0, 1) == Fraction(2, 3)
    assert klapp.kl_exponent(2.0, 1) == Fraction(1, 2)
    assert klapp.kl_exponent(4.0, 2) == Fraction(15, 16)

    rng = np.random.default_rng(8)
    pe2 = cg.PExponent(2.0)
    for _ in range(1000):
        x = rng.normal(size=5) * 2
        lam = float(abs(rng.normal()) + 0.01)
        got = klapp.prox_pnorm(x, pe2, lam)
        want = x * max(0.0, 1.0 - lam / np.linalg.norm(x))
        assert float(np.abs(got - want).max()) <= 1e-10

    rng = np.random.default_rng(42)
    A = rng.normal(size=(10, 20))
    xtrue = np.zeros(20)
    xtrue[:5] = rng.normal(size=5)
    b = A @ xtrue + 0.01 * rng.normal(size=10)
    inst = klapp.RegLSInstance(A=A, b=b, lambdas=(0.5, 0.5),
                               block_dims=(10, 10), p=cg.PExponent(3.0))
    res = klapp.solve_prox_grad(inst, iters=60000, tol=1e-13)
    objs = res.objectives
    assert all(o2 <= o1 + 1e-10 * (1 + abs(o1)) for o1, o2 in zip(objs, objs[1:]))
    residual = klapp.prox_grad_residual(inst, res.x, res.step)
    assert residual < 1e-6

    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report(8, "KL application",
            f"exponents exact, prox oracle 1e3 pts, PG residual={residual:.1e}",
            elapsed, 30)


def test_c9_automorphism_invariance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    violations = 0
    for p in (1.5, 3.0):
        pe = cg.PExponent(p)
        xbar = rng.normal(size=(1000, 4))
        margins = rng.random(1000)  # includes near-boundary points
        for _ in range(10):
            perm = cg.random_signed_permutation(rng, 4)
            scale = float(rng.uniform(0.2, 5.0))
            for i in range(1000):
                x = cg.ConePoint(pnorm(xbar[i], pe) * (1 + margins[i]), xbar[i])
                y = cg.apply_automorphism(x, scale, perm)
                if not cg.in_cone(y, pe, tol=1e-12 * (1 + y.norm())):
                    violations += 1
    elapsed = time.perf_counter() - t0
    assert violations == 0
    _report(9, "automorphism invariance", "2 x 10^3 points x 10 maps, 0 violations",
            elapsed, 60)
