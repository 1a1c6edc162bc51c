"""Exception taxonomy shared across the package.

Every malformed input maps to a named error; nothing in the library
raises bare ValueError for domain failures, so callers (and the CLI)
can report error names verbatim.
"""


class LogitBiasError(Exception):
    """Base class for all domain errors."""


class DimensionMismatch(LogitBiasError):
    pass


class ZeroRowNorm(LogitBiasError):
    pass


class NonPositiveTemperature(LogitBiasError):
    pass


class EmptyInput(LogitBiasError):
    pass


class EmptySelection(LogitBiasError):
    pass


class NoLabeledSamples(LogitBiasError):
    pass


class ContainerError(LogitBiasError):
    """Base class for file container errors."""


class BadMagic(ContainerError):
    pass


class UnsupportedVersion(ContainerError):
    pass


class TruncatedFile(ContainerError):
    pass


class InvalidRecord(ContainerError):
    pass


class IoFailure(ContainerError):
    pass


class ParseFailure(ContainerError):
    pass


class MissingFile(ContainerError):
    pass
