"""Exception types raised by the numerical routines.

Every failure mode that a caller can act on gets its own class so that CLI
exit codes and tests can discriminate without string matching.
"""


class KeconeError(Exception):
    """Base class for all library errors."""


class InvalidInitialValue(KeconeError):
    """Profile initial value outside the admissible interval."""


class StepFailure(KeconeError):
    """Adaptive integration could not meet the requested tolerance."""


class HorizonTooShort(KeconeError):
    """Requested asymptotic check on a profile solved to too small t_max."""


class NonPositiveValue(KeconeError):
    """Decay-fit input contains a value <= 0 (target already reached;
    caller should shrink the fit window)."""


class DegenerateFit(KeconeError):
    """Too few samples in the fit window for a meaningful regression."""


class OutOfRange(KeconeError):
    """Evaluation point outside the solved interval."""


class BoundaryPoint(KeconeError):
    """Point too close to the unit-sphere boundary of the ball."""


class NoConvergence(KeconeError):
    """Iterative geodesic solver stalled."""


class RadiusTooSmall(KeconeError):
    """Collar radius below the minimum for which the cut-off supports hold."""


class SlowConvergence(KeconeError):
    """Asymptotic regression residual too large (t_max too small).

    Carries the saturated estimate so sweeps can still report it.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class AngleMismatch(KeconeError):
    """Cone-angle slope deviates from the branched-cover prediction."""


class BisectionFailure(KeconeError):
    """No initial value reproduces the requested cone order."""


class DefectUnderflow(KeconeError):
    """Einstein defect below measurable precision at the largest radius."""


class NewtonDivergence(KeconeError):
    """Newton re-solve did not converge (collar radius too small)."""


class DimensionMismatch(KeconeError):
    """Tensor operands have incompatible dimensions."""


class NegativeCoefficient(KeconeError):
    """Semipositive coefficient required."""
