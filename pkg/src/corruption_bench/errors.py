"""Exception taxonomy shared across the toolkit.

The CLI maps these onto its stable exit codes: validation failures exit 1,
I/O failures exit 2, parameter errors exit 3.
"""


class CorruptionBenchError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(CorruptionBenchError, ValueError):
    """A caller-supplied argument is outside its documented domain."""


class ValidationError(CorruptionBenchError):
    """Input data (logs, manifests, tables) failed a consistency check."""


class FormatError(CorruptionBenchError):
    """A file could not be decoded in any supported format."""


class UndefinedMeasureError(CorruptionBenchError):
    """A normalized score was requested with a non-positive denominator."""
