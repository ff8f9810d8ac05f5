"""Exception and warning types shared across the package."""


class PhicatError(Exception):
    """Base class for every error raised by phicat."""


class DomainError(PhicatError, ValueError):
    """A height lies outside the open domain ]a, +inf[ of the weight."""


class NonFinite(PhicatError, ArithmeticError):
    """Evaluation of the weight overflowed or produced NaN."""


class StepFailure(PhicatError, RuntimeError):
    """The adaptive integrator could not take a step above its minimum size."""


class Inconclusive(PhicatError):
    """Integrability of exp(-phi) could not be certified either way."""


class GridTooSmall(PhicatError, ValueError):
    """A grid has fewer than three nodes along some axis."""


class NotMinimal(PhicatError):
    """The patch does not satisfy the phi-minimal graph equation to tolerance."""


class BoundarySupport(PhicatError, ValueError):
    """A normal speed is nonzero on boundary nodes."""


class SlabViolation(PhicatError, ValueError):
    """A grid reaches too close to the vertical asymptotes x1 = +-Lambda_h."""


class StripViolation(PhicatError, ValueError):
    """A perturbation strip is not inside the profile's x-domain."""


class EmptyOverlap(PhicatError, ValueError):
    """The reflected window and the patch do not overlap."""


class DomainViolation(PhicatError):
    """A Newton iterate left the weight domain and damping could not fix it."""


class NoConvergence(PhicatError):
    """Newton iteration stopped without meeting the residual tolerance.

    The best iterate and the iteration report are attached so callers can
    still inspect them.
    """

    def __init__(self, message, patch=None, report=None):
        super().__init__(message)
        self.patch = patch
        self.report = report


class LowConfidenceWarning(UserWarning):
    """A value was computed but its integrability could not be certified."""


class HypothesisWarning(UserWarning):
    """The weight does not satisfy the hypotheses a check relies on."""
