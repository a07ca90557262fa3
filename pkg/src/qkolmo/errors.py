"""Exception hierarchy for the qkolmo lab.

Library code raises these; only the command-line front end turns them into exit codes.
"""


class QkolmoError(Exception):
    """Base class for every domain error raised by qkolmo."""


class ResourceCapError(QkolmoError):
    """A configured resource cap would be exceeded."""

    def __init__(self, cap: str, value: int | float, limit: int | float, hint: str = ""):
        self.cap = cap
        self.value = value
        self.limit = limit
        message = f"{cap} exceeded: {value} > {limit}"
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message)


class DimensionMismatchError(QkolmoError):
    """Vectors or matrices that must share a dimension do not."""


class NonHermitianError(QkolmoError):
    """A matrix that must be hermitian is not."""


class MachineDefinitionError(QkolmoError):
    """A transition table is malformed (unknown state, bad symbol, zero amplitude...)."""


class SpecParseError(QkolmoError):
    """A machine, source, subspace, program or config file could not be parsed."""


class NonHaltingError(QkolmoError):
    """The input does not halt within the configured horizon."""


class KraftViolationError(QkolmoError):
    """No prefix-free codeword of the requested length exists."""


class NotInSubspaceError(QkolmoError):
    """A vector lies outside the subspace an operation is defined on."""


class InvalidParameterError(QkolmoError):
    """A numeric parameter is outside its admissible range."""


class DecodeError(QkolmoError):
    """A self-delimited stream or universal program cannot be decoded."""


class SearchExhaustedError(QkolmoError):
    """A bounded search found no candidate satisfying its criterion."""


class UnsupportedAmplitudeError(QkolmoError):
    """An exact computation met an amplitude outside the supported number field."""
