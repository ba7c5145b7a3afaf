"""Exception and warning types shared across the package."""


class BwalkError(Exception):
    """Base class for all package errors."""


class ConfigError(BwalkError):
    """Invalid experiment configuration.

    ``violations`` holds every problem found, not just the first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class GuardViolation(BwalkError):
    """A numerical guard band was exceeded (aliasing, quadrature, sampler)."""


class CheckFailure(BwalkError):
    """An acceptance check configured for an experiment did not pass."""


class AliasingWarning(UserWarning):
    """Mass leaving the periodic window exceeds the configured guard."""
