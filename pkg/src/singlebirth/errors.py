"""Exception hierarchy shared by all modules."""


class SingleBirthError(Exception):
    """Base class for all library errors."""


class StructureError(SingleBirthError):
    """A rate table violates the upwardly skip-free shape."""


class DomainError(SingleBirthError):
    """A builder parameter is outside its admissible range."""


class HorizonExceeded(SingleBirthError):
    """A computation asked for states beyond the model's tabulated horizon."""


class NumericOverflow(SingleBirthError):
    """A scaled value left the supported log-magnitude range."""


class DegenerateBoundary(SingleBirthError):
    """Finite-state boundary equation reads 0 = nonzero."""


class InconclusiveSeries(SingleBirthError):
    """Neither divergence nor convergence could be certified at this truncation."""


class NotExplosive(SingleBirthError):
    """Operation requires an explosive model."""


class NotRecurrent(SingleBirthError):
    """Operation requires a recurrent model."""


class PreviousOrderInfinite(SingleBirthError):
    """A lower-order moment is infinite, so the requested order is undefined."""


class RateBoundViolated(SingleBirthError):
    """The tilt rate is not strictly below every exit rate on the truncation."""


class ConditionViolated(SingleBirthError):
    """The positivity side condition for exponential moments failed at an index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FeasibilityViolated(SingleBirthError):
    """The exponential-moment feasibility bound failed on the truncation."""


class AllCapped(SingleBirthError):
    """Every simulated path hit a cap; no unbiased samples are available."""


class ModelSpecError(SingleBirthError):
    """A model spec document failed strict validation."""
