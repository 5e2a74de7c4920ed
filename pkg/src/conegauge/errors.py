"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration (out-of-range exponent, bad dimensions, ...)."""


class NumericalError(RuntimeError):
    """A root-find or iteration failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)
        self.residual = residual


class FaceClassificationError(ValueError):
    """Exposing vector does not expose an extreme ray.

    ``classification`` is one of ``"zero"`` (z = 0 exposes the whole cone),
    ``"interior"`` (z interior to the dual cone exposes {0}) or
    ``"outside_dual"``.
    """

    def __init__(self, message, classification):
        super().__init__(message)
        self.classification = classification


class VerificationError(RuntimeError):
    """A facial-reduction certificate chain failed verification."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EstimatorError(RuntimeError):
    """An empirical estimator produced no usable samples."""


class UnsupportedFaceError(RuntimeError):
    """Face transition outside the power-law FRF algebra (log-type g)."""


class DivergenceError(NumericalError):
    """Objective increased during a descent method."""
