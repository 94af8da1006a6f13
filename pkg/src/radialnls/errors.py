"""Exception hierarchy. Each class carries the CLI exit code for its error class."""


class RadialNLSError(Exception):
    exit_code = 1


class ConfigurationError(RadialNLSError, ValueError):
    exit_code = 2


class TruncationError(RadialNLSError):
    """Mass leaked into the outer shell of the box beyond the configured threshold."""

    exit_code = 3

    def __init__(self, message, time=None, tail_mass=None):
        super().__init__(message)
        self.time = time
        self.tail_mass = tail_mass


class ArtifactIOError(RadialNLSError, OSError):
    exit_code = 4


class IntegrityError(RadialNLSError):
    exit_code = 5


class KernelResolutionError(RadialNLSError, ValueError):
    exit_code = 6


class RangeError(RadialNLSError, ValueError):
    exit_code = 7


class UndefinedRatioError(RadialNLSError, ZeroDivisionError):
    exit_code = 8


class AnnulusSearchError(RadialNLSError):
    exit_code = 9
