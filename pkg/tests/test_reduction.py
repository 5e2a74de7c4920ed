import json
from fractions import Fraction

import numpy as np
import pytest

import conegauge as cg
from conegauge import reduction as red
from conegauge.errors import ConfigError, UnsupportedFaceError, VerificationError
from conegauge.expcone import fbeta_exposing
from conegauge.pcone import pnorm


def boundary_z(p, zbar):
    pe = cg.PExponent(p)
    zbar = np.asarray(zbar, dtype=float)
    return np.concatenate(([pnorm(zbar, pe.dual)], zbar))


def one_block_problem(p, z):
    cone = red.ConeSpec((red.PConeBlock(p, len(z)),))
    return red.FeasProblem.build(cone, np.asarray(z)[None, :], np.zeros(1))


class TestConeSpec:
    def test_json_round_trip(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 4), red.RSOCBlock(5),
                             red.ExpConeBlock()))
        d = cone.to_json_dict()
        assert red.ConeSpec.from_json_dict(d) == cone
        assert cone.dim == 12

    def test_min_dimension_enforced(self):
        with pytest.raises(ConfigError):
            red.PConeBlock(3.0, 2)
        with pytest.raises(ConfigError):
            red.RSOCBlock(2)


class TestFeasProblem:
    def test_rank_deficient_rows_dropped(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3),))
        A = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        prob = red.FeasProblem.build(cone, A, np.array([1.0, 2.0, 0.0]))
        assert prob.dropped_rows == (1,)
        assert prob.rank == 2

    def test_translate_in_row_space(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3),))
        prob = red.FeasProblem.build(cone, np.array([[1.0, 1.0, 0.0]]), np.array([2.0]))
        # minimum-norm solution lies in range(A^T)
        r, a_res = prob.orth_residuals(prob.a)
        assert r <= 1e-12


class TestDpps:
    def test_three_blocks_dim_seven(self, rng):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3),) * 3)
        A = rng.normal(size=(7, 9))
        prob = red.FeasProblem.build(cone, A, np.zeros(7))
        assert red.dpps_upper_bound(prob) == 3

    def test_hyperplane_through_origin(self):
        prob = one_block_problem(3.0, boundary_z(3.0, [-1.0, 0.0]))
        assert red.dpps_upper_bound(prob) == 1

    def test_full_space(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 4),))
        prob = red.FeasProblem.build(cone, np.zeros((0, 4)), np.zeros(0))
        assert red.dpps_upper_bound(prob) == 0

    def test_nonzero_translate_reduces_dimension(self, rng):
        cone = red.ConeSpec((red.PConeBlock(3.0, 5),))
        A = rng.normal(size=(3, 5))
        b = A @ rng.normal(size=5)
        prob = red.FeasProblem.build(cone, A, b)
        assert prob.lperp_dim_with_a() == 2


class TestVerify:
    def test_valid_single_step(self):
        z = boundary_z(3.0, [-0.6, -0.8])
        prob = one_block_problem(3.0, z)
        rep = red.verify_certificate(prob, red.ReductionChain((z,)))
        assert rep.ok
        assert rep.final_faces[0].kind == "ray"

    def test_interior_z_gives_zero_face(self):
        z = np.array([2.0, 0.1, 0.0])
        prob = one_block_problem(3.0, z)
        rep = red.verify_certificate(prob, red.ReductionChain((z,)))
        assert rep.ok
        assert rep.final_faces[0].kind == "zero"

    def test_zero_block_unchanged(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3), red.PConeBlock(3.0, 3)))
        z1 = np.concatenate([boundary_z(3.0, [-1.0, 0.0]), np.zeros(3)])
        prob = red.FeasProblem.build(cone, z1[None, :], np.zeros(1))
        rep = red.verify_certificate(prob, red.ReductionChain((z1,)))
        assert rep.ok
        assert rep.final_faces[0].kind == "ray"
        assert rep.final_faces[1].kind == "full"

    def test_not_in_lperp_fails(self):
        z = boundary_z(3.0, [-1.0, 0.0])
        other = np.array([0.0, 0.0, 1.0])
        prob = one_block_problem(3.0, other)
        rep = red.verify_certificate(prob, red.ReductionChain((z,)))
        assert not rep.ok
        assert any("L^perp" in m for m in rep.messages)

    def test_translate_orthogonality_fails(self):
        z = boundary_z(3.0, [-1.0, 0.0])
        cone = red.ConeSpec((red.PConeBlock(3.0, 3),))
        prob = red.FeasProblem.build(cone, z[None, :], np.array([1.0]))
        rep = red.verify_certificate(prob, red.ReductionChain((z,)))
        assert not rep.ok

    def test_outside_dual_fails(self):
        bad = np.array([0.1, 1.0, 0.0])  # z0 << ||zbar||_q
        prob = one_block_problem(3.0, bad)
        rep = red.verify_certificate(prob, red.ReductionChain((bad,)))
        assert not rep.ok

    def test_tolerance_monotone(self):
        z = boundary_z(3.0, [-0.6, -0.8])
        prob = one_block_problem(3.0, z)
        chain = red.ReductionChain((z,))
        assert red.verify_certificate(prob, chain, tol=1e-10).ok
        assert red.verify_certificate(prob, chain, tol=1e-6).ok

    def test_rsoc_block_step(self):
        # rotated-SOC certificate whose K_2-side image T^-1(z) sits on the
        # boundary of the second-order cone
        cone = red.ConeSpec((red.RSOCBlock(4),))
        zsoc = np.array([1.0, 0.0, -1.0, 0.0])  # boundary of K_2
        z = red.rsoc_to_soc(zsoc)  # = T(zsoc), so T^-1(z) = zsoc
        prob = red.FeasProblem.build(cone, z[None, :], np.zeros(1))
        rep = red.verify_certificate(prob, red.ReductionChain((z,)))
        assert rep.ok
        assert rep.final_faces[0].kind == "ray"
        # the ray generator lives in the rotated cone
        gen = rep.final_faces[0].generator
        t, u, x = gen[0], gen[1], gen[2:]
        assert t >= -1e-12 and u >= -1e-12
        assert t * u >= float(x @ x) - 1e-10

    def test_expcone_beta_step(self):
        cone = red.ConeSpec((red.ExpConeBlock(),))
        z = fbeta_exposing(0.5)
        prob = red.FeasProblem.build(cone, z[None, :], np.zeros(1))
        rep = red.verify_certificate(prob, red.ReductionChain((z,)))
        assert rep.ok
        assert rep.steps[0].blocks[0].alpha == Fraction(1, 2)

    def test_empty_chain_rejected(self):
        z = boundary_z(3.0, [-1.0, 0.0])
        prob = one_block_problem(3.0, z)
        with pytest.raises(ConfigError):
            red.verify_certificate(prob, red.ReductionChain(()))


class TestAssemble:
    def test_full_support_half(self):
        z = boundary_z(3.0, [-0.6, -0.8])
        prob = one_block_problem(3.0, z)
        out = red.assemble_exponent(prob, red.ReductionChain((z,)))
        assert out.exponent == Fraction(1, 2)

    def test_single_support_small_p(self):
        z = boundary_z(1.5, [-1.0, 0.0])
        prob = one_block_problem(1.5, z)
        out = red.assemble_exponent(prob, red.ReductionChain((z,)))
        assert out.exponent == Fraction(2, 3)

    def test_product_two_steps_sixteenth(self):
        cone = red.ConeSpec((red.PConeBlock(4.0, 3), red.PConeBlock(4.0, 3)))
        z1 = np.concatenate([boundary_z(4.0, [-1.0, 0.0]), np.zeros(3)])
        z2 = np.concatenate([np.zeros(3), boundary_z(4.0, [-1.0, 0.0])])
        prob = red.FeasProblem.build(cone, np.vstack([z1, z2]), np.zeros(2))
        out = red.assemble_exponent(prob, red.ReductionChain((z1, z2)))
        assert out.exponent == Fraction(1, 16)

    def test_empty_chain_identity(self):
        z = boundary_z(3.0, [-1.0, 0.0])
        prob = one_block_problem(3.0, z)
        out = red.assemble_exponent(prob, red.ReductionChain(()))
        assert out.exponent == Fraction(1)
        assert out.frf.terms == ((1.0, Fraction(1)),)

    def test_unverified_chain_rejected(self):
        z = boundary_z(3.0, [-1.0, 0.0])
        prob = one_block_problem(3.0, np.array([0.0, 0.0, 1.0]))
        with pytest.raises(VerificationError):
            red.assemble_exponent(prob, red.ReductionChain((z,)))

    def test_monotone_in_chain_length(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3), red.PConeBlock(3.0, 3)))
        z1 = np.concatenate([boundary_z(3.0, [-0.5, 0.5]), np.zeros(3)])
        z2 = np.concatenate([np.zeros(3), boundary_z(3.0, [-1.0, 0.0])])
        prob = red.FeasProblem.build(cone, np.vstack([z1, z2]), np.zeros(2))
        short = red.assemble_exponent(prob, red.ReductionChain((z1,)))
        long = red.assemble_exponent(prob, red.ReductionChain((z1, z2)))
        assert long.exponent <= short.exponent

    def test_product_consistency_blockwise_min(self):
        # one step touching both blocks: exponent = min of the block alphas
        cone = red.ConeSpec((red.PConeBlock(4.0, 3), red.PConeBlock(1.5, 3)))
        z = np.concatenate([boundary_z(4.0, [-1.0, 0.0]),
                            boundary_z(1.5, [-1.0, 0.0])])
        prob = red.FeasProblem.build(cone, z[None, :], np.zeros(1))
        out = red.assemble_exponent(prob, red.ReductionChain((z,)))
        assert out.exponent == min(Fraction(1, 4), Fraction(2, 3))

    def test_expcone_log_face_unsupported(self):
        cone = red.ConeSpec((red.ExpConeBlock(),))
        z = np.array([0.0, 0.0, 1.0])  # exposes the F_infinity ray
        prob = red.FeasProblem.build(cone, z[None, :], np.zeros(1))
        with pytest.raises(UnsupportedFaceError):
            red.assemble_exponent(prob, red.ReductionChain((z,)))


class TestLipschitz:
    def test_slater_hint(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3),))
        prob = red.FeasProblem.build(cone, np.array([[0.0, 1.0, 0.0]]),
                                     np.array([1.0]))
        out = red.lipschitz_cases(prob, feasible_point_hint=np.array([2.0, 1.0, 0.0]))
        assert out.kind == "slater"
        assert out.exponent == Fraction(1)

    def test_needs_chain(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3),))
        prob = red.FeasProblem.build(cone, np.array([[0.0, 1.0, 0.0]]),
                                     np.array([1.0]))
        assert red.lipschitz_cases(prob).kind == "needs_chain"

    def test_declared_zero_intersection(self):
        cone = red.ConeSpec((red.PConeBlock(3.0, 3),))
        prob = red.FeasProblem.build(cone, np.array([[0.0, 1.0, 0.0]]),
                                     np.array([1.0]))
        out = red.lipschitz_cases(prob, declared_zero_intersection=True)
        assert out.kind == "zero_intersection"
        assert out.exponent == Fraction(1)


class TestJsonIo:
    def test_problem_round_trip(self, tmp_path):
        z = boundary_z(3.0, [-1.0, 0.0])
        prob = one_block_problem(3.0, z)
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(prob.to_json_dict()))
        loaded = red.load_problem(path)
        np.testing.assert_allclose(loaded.A, prob.A)
        assert loaded.cone == prob.cone

    def test_chain_round_trip(self, tmp_path):
        chain = red.ReductionChain((np.array([1.0, -1.0, 0.0]),))
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(chain.to_json_dict()))
        loaded = red.load_chain(path)
        np.testing.assert_allclose(loaded.certificates[0], chain.certificates[0])

    def test_report_serializes(self):
        z = boundary_z(3.0, [-0.6, -0.8])
        prob = one_block_problem(3.0, z)
        rep = red.verify_certificate(prob, red.ReductionChain((z,)))
        doc = rep.to_json_dict()
        json.dumps(doc)  # must be JSON-serializable
        assert doc["ok"] is True
        assert doc["steps"][0]["blocks"][0]["alpha"] == "1/2"
