"""Exception and warning types shared across the package."""


class ImpactGameError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(ImpactGameError, ValueError):
    """An input is outside the model's domain (bad shape, sign, or range)."""


class NumericalError(ImpactGameError, RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


class IllConditionedWarning(RuntimeWarning):
    """A linear system's condition estimate exceeds the trust threshold.

    Results are still returned; the warning marks them as potentially
    inaccurate rather than failing the computation.
    """
