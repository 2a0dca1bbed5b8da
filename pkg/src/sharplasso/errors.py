"""Exception types raised across the library.

Every error carries enough context in its message to diagnose the failing
quantity without a debugger; constructors that certify numerical conditions
attach the offending value.
"""


class SharpLassoError(Exception):
    """Base class for all library errors."""


# --- covariance model construction ---

class NotSymmetric(SharpLassoError):
    pass


class NotUnitDiagonal(SharpLassoError):
    pass


class NotPositiveDefinite(SharpLassoError):
    pass


class NotAllowed(SharpLassoError):
    """The augmented covariance built from a projection vector is invalid."""


class CholeskyFailure(SharpLassoError):
    pass


# --- solvers ---

class NoConvergence(SharpLassoError):
    pass


class HypothesisViolated(SharpLassoError):
    """A stated precondition of a finite-sample inequality does not hold."""


# --- eligible pairs ---

class LinfViolated(SharpLassoError):
    def __init__(self, value, limit):
        super().__init__(
            f"sup-norm residual {value:.6g} exceeds lambda_sharp {limit:.6g}")
        self.value = value
        self.limit = limit


class L1ProductTooLarge(SharpLassoError):
    def __init__(self, value, limit):
        super().__init__(
            f"lambda_sharp * l1-norm = {value:.6g} exceeds threshold {limit:.6g}")
        self.value = value
        self.limit = limit


class LambdaMismatch(SharpLassoError):
    pass


class SingularSubmatrix(SharpLassoError):
    pass


class ZeroVector(SharpLassoError):
    pass


class DegenerateDenominator(SharpLassoError):
    pass


# --- constructions ---

class MarginViolated(SharpLassoError):
    pass


class InfNormViolated(SharpLassoError):
    pass


class IrrepresentableViolated(SharpLassoError):
    def __init__(self, value):
        super().__init__(
            f"reversed irrepresentable condition fails: sup-norm {value:.6g} > 1")
        self.value = value


class WeightConditionViolated(SharpLassoError):
    pass


class SignInstability(SharpLassoError):
    """The sign pattern of the constrained minimizer is degenerate."""


class CertificationFailed(SharpLassoError):
    """A randomized construction did not certify at the drawn seed."""


# --- estimators / crlb ---

class OddSampleSize(SharpLassoError):
    pass


class DimensionTooLarge(SharpLassoError):
    pass


class AuditFailure(SharpLassoError):
    """A finite-sample inequality that must hold on every instance failed."""


class LOutOfRange(SharpLassoError):
    """Moment-generating-function bound requires L > 1."""
