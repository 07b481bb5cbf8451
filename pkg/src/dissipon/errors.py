"""Exception hierarchy.

Everything physics- or regime-related derives from :class:`DissiponError`
so the CLI can map it to a single exit code; genuine usage errors
(bad flags, malformed config) are kept separate.
"""


class DissiponError(Exception):
    """Base class for physics, regime and numerical failures (CLI exit 1)."""


class DomainError(DissiponError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(DissiponError):
    """Parameters violate the validity regime of a closed form (e.g. overdamped)."""


class QuadratureError(DissiponError):
    """Adaptive integration failed to converge.

    Carries the best available estimate and its error bound so callers can
    inspect how far off the result is.
    """

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class NonMarkovianError(DissiponError):
    """The kernel's time integral shows no plateau; no local friction limit exists."""


class PerturbationTheoryError(DissiponError):
    """A first-order transition probability exceeded one."""


class StabilityError(DissiponError):
    """A time step is too large for the integrator to remain stable."""


class ConfigError(Exception):
    """Malformed scenario config (CLI exit 2). Message is line-anchored."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
