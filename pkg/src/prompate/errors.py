"""Exception hierarchy.

Every validation failure raised by the library derives from
:class:`PromPateError`, so callers (the CLI in particular) can separate
bad input from genuine runtime faults.
"""


class PromPateError(Exception):
    """Base class for all library errors."""


class ConfigError(PromPateError, ValueError):
    """Invalid configuration value. ``key`` names the offending field."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


# accountant
class NonPositiveSigma(PromPateError, ValueError):
    pass


class OrderOutOfRange(PromPateError, ValueError):
    pass


class InvalidDelta(PromPateError, ValueError):
    pass


class EmptyOrderGrid(PromPateError, ValueError):
    pass


class ZeroCount(PromPateError, ValueError):
    pass


# aggregator
class ClassIndexOutOfRange(PromPateError, ValueError):
    pass


class EmptyPredictions(PromPateError, ValueError):
    pass


class EmptyEnsemble(PromPateError, ValueError):
    pass


class QueryBudgetExceedsPool(PromPateError, ValueError):
    pass


# prompt
class RescaleExceedsSource(PromPateError, ValueError):
    pass


class ChannelMismatch(PromPateError, ValueError):
    pass


class ShapeMismatch(PromPateError, ValueError):
    pass


class MapIndexOutOfRange(PromPateError, ValueError):
    pass


class MissingForwardCache(PromPateError, RuntimeError):
    pass


# nn
class EmptyDataset(PromPateError, ValueError):
    pass


class EmptySlice(PromPateError, ValueError):
    pass


class FrozenModelMutated(PromPateError, AssertionError):
    pass


class NoAnsweredQueries(PromPateError, ValueError):
    pass


# data
class InvalidSpec(PromPateError, ValueError):
    pass


class TooManyTeachers(PromPateError, ValueError):
    pass


class TensorFormatError(PromPateError, ValueError):
    """Base for PTNS decoding failures."""


class BadMagic(TensorFormatError):
    pass


class VersionUnsupported(TensorFormatError):
    pass


class CrcMismatch(TensorFormatError):
    pass


class TruncatedFile(TensorFormatError):
    pass


# harness
class UnknownAxis(PromPateError, ValueError):
    pass


class PartialFailure(PromPateError, RuntimeError):
    pass


class LedgerAuditError(PromPateError, ValueError):
    """A stored epsilon disagrees with a recomputation from its ledger."""
