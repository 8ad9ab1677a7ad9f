"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`SohError`,
so callers (and the CLI) can catch one type and report ``type(err).__name__``
as the error category.
"""


class SohError(Exception):
    """Base class for all package errors."""


# trajectory-core
class EmptyWindow(SohError, ValueError):
    pass


class NonMonotonicTime(SohError, ValueError):
    pass


class NonPositiveQ0(SohError, ValueError):
    pass


class OutOfRangeGrid(SohError, ValueError):
    pass


class InvalidTrajectory(SohError, ValueError):
    pass


# feature-extract
class UnsegmentableStream(SohError, ValueError):
    pass


class WrongCycleType(SohError, ValueError):
    pass


class MissingMarkers(SohError, ValueError):
    pass


# enr-solver
class DidNotConverge(SohError, RuntimeError):
    pass


class DimensionMismatch(SohError, ValueError):
    pass


# cluster-estimator
class GridMismatch(SohError, ValueError):
    pass


class PrefixOutOfRange(SohError, ValueError):
    pass


class EmptyState(SohError, ValueError):
    pass


# fusion-estimator
class InvalidWeights(SohError, ValueError):
    pass


class StaleCycle(SohError, ValueError):
    pass


# metrics-eval
class LengthMismatch(SohError, ValueError):
    pass


class NonPositiveTruth(SohError, ValueError):
    pass


# dataset-synth
class InvalidSpec(SohError, ValueError):
    pass


# io / harness
class SchemaError(SohError, ValueError):
    pass


class DuplicateTimestamp(SohError, ValueError):
    pass


class EmptyFile(SohError, ValueError):
    pass


class ConfigError(SohError, ValueError):
    pass


class InsufficientCells(SohError, ValueError):
    pass
