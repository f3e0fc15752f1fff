"""Exception hierarchy shared by every module."""


class WiretapError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(WiretapError, ValueError):
    pass


class InvalidState(WiretapError, ValueError):
    pass


class InvalidDistribution(WiretapError, ValueError):
    pass


class InfeasibleSecrecy(WiretapError):
    """The transmission set carries zero probability, so no secrecy is possible."""


class ConvergenceFailure(WiretapError):
    """An iterative solver did not reach its tolerance.

    ``best`` holds the best iterate found, whatever its type is for the
    solver that raised.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class OracleScopeExceeded(WiretapError):
    pass


class PreconditionViolation(WiretapError):
    pass


class ConfigError(WiretapError):
    """Malformed configuration or input file.

    ``location`` is a free-form pointer such as ``"line 4"`` or
    ``"field experiment.snr_db"``.
    """

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
