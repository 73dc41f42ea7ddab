"""Shared exception vocabulary.

Every error the pipeline can raise derives from MillError, grouped into four
categories that the CLI maps onto exit codes: configuration problems (2),
missing prerequisites (3), data problems (4), and transport failures (5).
"""

from __future__ import annotations


class MillError(Exception):
    exit_code = 1


class ConfigError(MillError):
    """Bad configuration: flags, manifest fields, metric declarations."""

    exit_code = 2


class MissingPrerequisite(MillError):
    """An input artifact (file, stage output) does not exist yet."""

    exit_code = 3


class DataError(MillError):
    """Source data violates a contract the configuration promised."""

    exit_code = 4


class TransportFailure(MillError):
    """A generation backend could not be reached or answered garbage."""

    exit_code = 5


# corpus / manifest
class MissingFile(MissingPrerequisite):
    pass


class ParseError(DataError):
    pass


class DuplicateDatasetId(ConfigError):
    pass


class InvalidLabelSpace(ConfigError):
    pass


class UnknownColumn(DataError):
    pass


class LabelOutsideSpace(DataError):
    pass


# preprocess
class InvalidRatios(ConfigError):
    pass


class UnmappableLabel(DataError):
    pass


class EmptyInput(DataError):
    pass


# instructgen
class MissingTaskDefinition(ConfigError):
    pass


class TransportError(TransportFailure):
    pass


class AuthError(TransportFailure):
    pass


class MalformedResponse(TransportFailure):
    pass


class EmptyGeneration(DataError):
    pass


class InvariantViolation(DataError):
    pass


# assemble
class UnknownStrategy(ConfigError):
    pass


class EmptyPool(DataError):
    pass


# metrics
class LengthMismatch(DataError):
    pass


class UnknownPositiveLabel(ConfigError):
    pass


class MetricTaskMismatch(ConfigError):
    pass


# report
class UnknownColumnName(ConfigError):
    pass


class AllZeroDifferences(DataError):
    pass


# assemble / export
class IoError(MillError):
    """Filesystem write failed; carries the generic exit code."""
