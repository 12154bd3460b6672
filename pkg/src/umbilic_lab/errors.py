"""Exception hierarchy shared by all modules."""


class UmbilicLabError(Exception):
    """Base class for every error raised by the package."""


class RankDeficient(UmbilicLabError):
    """The immersion differential is (numerically) not injective."""


class ContainmentViolated(UmbilicLabError):
    """A point of a level-set ambient is off the constraint surface."""


class DomainExceeded(UmbilicLabError):
    """A chart point lies outside the immersion's domain box."""


class NormalOutsideBundle(UmbilicLabError):
    """A vector passed as a normal does not lie in the normal space."""


class DerivativeUnavailable(UmbilicLabError):
    """Higher-order derivative data cannot be produced at this point."""


class InsufficientSamples(UmbilicLabError):
    """Too few curve samples for the requested finite difference."""


class StepRejected(UmbilicLabError):
    """An integration step produced a non-finite state."""


class OutOfSpan(UmbilicLabError):
    """A requested parameter lies outside the sampled trajectory."""


class MeanCurvatureVanishes(UmbilicLabError):
    """The mean curvature vector drops below the working floor."""


class ConfigInvalid(UmbilicLabError):
    """A scenario configuration failed parsing or validation."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            return f"line {self.line}, column {self.column}: {msg}"
        return msg
