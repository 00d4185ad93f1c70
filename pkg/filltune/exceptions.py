"""
Exception hierarchy for the fill-tuning toolkit
"""


class FilltuneError(Exception):
    """Base class for every error raised by the toolkit"""


class InvalidArgumentError(FilltuneError, ValueError):
    """An argument violates an operation's precondition"""


class UnsupportedDimensionError(InvalidArgumentError):
    """The operation is not defined for this dimension"""


class SurfaceEvaluationError(FilltuneError):
    """A surface returned a non-finite value or gradient"""

    def __init__(self, message, point=None, coordinate=None):
        super().__init__(message)
        self.point = point
        self.coordinate = coordinate


class RBFFitError(FilltuneError):
    """The radial basis function system could not be solved"""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class TransitionSearchError(FilltuneError):
    pass


class NotASaddleError(TransitionSearchError):
    """Refinement ended somewhere that is not an index-1 saddle"""


class NonConvergenceError(TransitionSearchError):
    pass


class EmptyNetworkError(FilltuneError):
    pass


class EmptySurfaceError(FilltuneError):
    pass


class OracleError(FilltuneError):
    """The latent oracle failed to decode or compare"""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ArtifactParseError(FilltuneError):
    """A persisted document does not match its schema"""

    def __init__(self, message, path='$'):
        super().__init__(f'{path}: {message}')
        self.path = path


class ConfigError(FilltuneError):
    pass


class ArtifactMismatchError(ConfigError):
    """An artifact on disk was produced by a different configuration"""


class StageError(FilltuneError):
    """A pipeline stage failed; carries the stage name and the cause"""

    def __init__(self, stage, cause):
        super().__init__(f'stage "{stage}" failed: {cause}')
        self.stage = stage
        self.cause = cause
