"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or input data."""


class StepSizeError(ValueError):
    """Time step too coarse for the stability or resolution guard."""


class InstabilityError(RuntimeError):
    """A stepped state became non-finite."""

    def __init__(self, message, step=None, max_abs=None):
        super().__init__(message)
        self.step = step
        self.max_abs = max_abs


class FitError(ValueError):
    """Temperature fit could not be performed."""
