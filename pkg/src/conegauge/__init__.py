"""conegauge: p-cone error-bound machinery.

Cone projections, facial structure and optimal Holder exponents, the
facial-residual-function algebra, empirical tightness certification, and the
KL-exponent application to p-norm regularized least squares.
"""

from .errors import (ConfigError, DivergenceError, EstimatorError,
                     FaceClassificationError, NumericalError,
                     UnsupportedFaceError, VerificationError)
from .frf import (FRFExpr, GFunction, GeneralFRF, diamond, expcone_g,
                  frf_from_g, kappa_zt, pcone_frf, rescaled_shift,
                  sum_product_frf)
from .kernels import BACKEND
from .klapp import (ConicReformulation, RegLSInstance, check_strict_complementarity,
                    kl_exponent, prox_grad_residual, prox_pnorm, reformulate,
                    solve_prox_grad)
from .pcone import (ConePoint, ExposedRay, PExponent, apply_automorphism,
                    face_from_exposing, in_cone, pnorm, project_cone,
                    project_cone_batch, project_polar, project_qball,
                    project_soc, random_signed_permutation, ray_distances,
                    zeta_bar)
from .reduction import (ConeSpec, ExpConeBlock, FeasProblem, PConeBlock,
                        ReductionChain, RSOCBlock, assemble_exponent,
                        dpps_upper_bound, lipschitz_cases, verify_certificate)
from .tightness import (ExpconeCurve, G1Estimate, GammaEstimate, WitnessCurve,
                        check_error_bound, estimate_gamma, fit_exponent,
                        g1_limsup, witness_large_support, witness_small_support)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConePoint", "ConeSpec", "ConfigError", "ConicReformulation",
    "DivergenceError", "EstimatorError", "ExpConeBlock", "ExpconeCurve",
    "ExposedRay", "FRFExpr", "FaceClassificationError", "FeasProblem",
    "G1Estimate", "GFunction", "GammaEstimate", "GeneralFRF", "NumericalError",
    "PConeBlock", "PExponent", "RSOCBlock", "RegLSInstance", "ReductionChain",
    "UnsupportedFaceError", "VerificationError", "WitnessCurve",
    "apply_automorphism", "assemble_exponent", "check_error_bound",
    "check_strict_complementarity", "diamond", "dpps_upper_bound",
    "estimate_gamma", "expcone_g", "face_from_exposing", "fit_exponent",
    "frf_from_g", "g1_limsup", "in_cone", "kappa_zt", "kl_exponent",
    "lipschitz_cases", "pcone_frf", "pnorm", "project_cone",
    "project_cone_batch", "project_polar", "project_qball", "project_soc",
    "prox_grad_residual", "prox_pnorm", "random_signed_permutation",
    "ray_distances", "reformulate", "rescaled_shift", "solve_prox_grad",
    "sum_product_frf", "verify_certificate", "witness_large_support",
    "witness_small_support", "zeta_bar",
]
