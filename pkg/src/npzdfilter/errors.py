"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class IntegrationError(RuntimeError):
    """The integrator produced a non-finite state.

    Attributes
    ----------
    step : int or None
        Day index at which the failure was detected.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class FilterCollapseError(RuntimeError):
    """Every particle weight vanished at some filter step.

    Attributes
    ----------
    t : int
        Time index of the collapsing weight update.
    """

    def __init__(self, t):
        super().__init__(f"particle filter collapsed: all weights are zero at t={t}")
        self.t = t


class InferenceStartupError(RuntimeError):
    """The sampler could not obtain a finite initial evidence estimate."""


class ConfigError(ValueError):
    """An experiment configuration is inconsistent or incomplete."""


class DataError(ValueError):
    """An input data file failed validation."""
