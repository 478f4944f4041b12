"""Exception types shared across the package."""


class KdsError(Exception):
    """Base class for all package-specific errors."""


class InvalidParams(KdsError):
    """Black-hole parameters outside the admissible set."""


class DegenerateHorizons(KdsError):
    """The two largest roots of the horizon polynomial coalesce or are complex."""


class ChartDomain(KdsError):
    """Requested point lies outside the chart's validity region."""


class PoleSingular(KdsError):
    """Spherical chart evaluated too close to a coordinate pole."""


class StepTooLarge(KdsError):
    """Finite-difference step failed the Richardson disagreement tolerance."""


class NotSpacelike(KdsError):
    """Induced metric on a slice failed the definiteness check."""


class NotLorentzian(KdsError):
    """Assembled 4-metric failed the signature check at some node."""


class DegenerateNormal(KdsError):
    """Future normal defect: N t* <= 0 at a node."""


class LeftDomain(KdsError):
    """Flow left the chart domain; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ToleranceFailure(KdsError):
    """Integrator could not meet the requested tolerance."""


class FitFailure(KdsError):
    """Exponential-rate fit residual exceeded tolerance."""


class UnknownOperator(KdsError):
    """Operator name not recognized by the builder."""


class VerificationFailed(KdsError):
    """An exact verification found a nonzero coefficient."""


class MismatchAt(KdsError):
    """Exact comparison failed; carries block and coefficient info."""


class NoConvergence(KdsError):
    """Iterative solver exhausted its iteration budget."""


class SmallnessViolated(KdsError):
    """Input data outside the configured smallness ball."""


class CurvatureFailure(KdsError):
    """Curvature of the slice metric could not be computed."""
