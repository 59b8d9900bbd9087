class NlrabiError(Exception):
    """Base class for every error raised by nlrabi."""


class ConfigError(NlrabiError, ValueError):
    """A configuration file, environment override or CLI flag holds an invalid value."""


class SpaceMismatchError(NlrabiError, ValueError):
    """Two objects built on different truncated spaces were combined."""


class UndefinedObservableError(NlrabiError, ArithmeticError):
    """An observable is undefined for the given state (e.g. g2 with no photons)."""


class SolverError(NlrabiError, RuntimeError):
    """A numerical solve did not produce a trustworthy answer."""


class DegenerateSteadyStateError(SolverError):
    """The Liouvillian null space has dimension greater than one."""


class ConvergenceError(SolverError):
    """A residual or cutoff-convergence criterion was not met."""


class IntegrationError(SolverError):
    """A time integration failed or its step size underflowed."""


class SpectrumError(NlrabiError, RuntimeError):
    """A spectrum cannot be returned without biasing it (e.g. correlation not decayed)."""


class InsufficientStatisticsError(NlrabiError, RuntimeError):
    """Too few trajectory events to form an estimate."""


class ValidationFailure(NlrabiError):
    """One or more validation checks failed."""


EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3
EXIT_VALIDATION_FAILURE = 4
