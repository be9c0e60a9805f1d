"""Exception types shared across the engine."""


class OpendrawError(Exception):
    """Base class for all engine errors."""


class DomainError(OpendrawError, ValueError):
    """An argument is outside the domain an operation supports."""


class PoleError(DomainError):
    """Gamma function evaluated at a non-positive integer."""


class RangeError(OpendrawError, OverflowError):
    """A result overflowed the representable floating-point range."""


class ScanExhaustedError(OpendrawError):
    """Root scan hit the order ceiling before finding the requested roots.

    The roots located before exhaustion are available on ``roots_found``.
    """

    def __init__(self, message, roots_found):
        super().__init__(message)
        self.roots_found = roots_found


class ConfigError(OpendrawError, ValueError):
    """A run configuration failed validation.

    ``problems`` holds one human-readable diagnostic per offending field.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
