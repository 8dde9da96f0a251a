"""Exception hierarchy shared across the package."""


class OneSidedError(Exception):
    """Base class for all errors raised by :mod:`onesided`."""


class DomainError(OneSidedError, ValueError):
    """A value lies outside the domain of a link function."""


class RankDeficient(OneSidedError, ValueError):
    """The Gram matrix of a fit is numerically singular."""


class EigenFloorViolated(OneSidedError, ValueError):
    """The warm-start design has smallest eigenvalue below ``lambda0``."""


class DesignCorrupted(OneSidedError, ArithmeticError):
    """The maintained inverse produced a clearly negative quadratic form."""


class StreamTooShort(OneSidedError, ValueError):
    """A stream ended before a learner's exploration phase completed."""


class InsufficientWarmStart(OneSidedError, ValueError):
    """The warm-start split is too small or rank deficient."""


class FitFailed(OneSidedError, RuntimeError):
    """A per-round refit failed; the run is aborted rather than skipped."""


class SchemaMismatch(OneSidedError, KeyError):
    """A column named by a dataset schema is missing from the file."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ParseError(OneSidedError, ValueError):
    """A file could not be parsed; the message names the location."""


class ConfigError(OneSidedError, ValueError):
    """One or more configuration problems, collected before any run starts."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
