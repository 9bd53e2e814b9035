"""Exception hierarchy shared by all pipeline stages."""


class PipelineError(Exception):
    """Base class for every error raised by eegpipe."""


class SessionFormatError(PipelineError, ValueError):
    pass


class WrongRowCount(SessionFormatError):
    pass


class WrongColumnCount(SessionFormatError):
    pass


class NonNumericField(SessionFormatError):
    pass


class PowerOutOfRange(SessionFormatError):
    pass


class EmptyCorpus(PipelineError, ValueError):
    pass


class EmptyMask(PipelineError, ValueError):
    pass


class DimensionMismatch(PipelineError, ValueError):
    pass


class InvalidHyperParams(PipelineError, ValueError):
    pass


class LengthMismatch(PipelineError, ValueError):
    pass


class TooShort(PipelineError, ValueError):
    pass


class TooFewSessions(PipelineError, ValueError):
    pass


class UnsupportedHyperParam(PipelineError, ValueError):
    """Raised for grid entries that are deliberately not implemented."""


class InvalidHyperParam(PipelineError, ValueError):
    pass


class SingularCovariance(PipelineError, ArithmeticError):
    pass


class ClassTooSmall(PipelineError, ValueError):
    pass


class InvalidGrid(PipelineError, ValueError):
    pass


class ConfigError(PipelineError, ValueError):
    pass


class ConstantColumnWarning(UserWarning):
    """A representation column has zero variance; its correlations are set to 0."""
