"""Exception hierarchy.

Everything raised on bad input derives from :class:`ReliabilityError`, which
is itself a ``ValueError`` so callers that only care about "bad data" can
catch the builtin.
"""


class ReliabilityError(ValueError):
    """Base class for all package errors."""


class ValidationError(ReliabilityError):
    """A prediction record violates its invariants.

    ``record_id`` and ``line`` are filled in by the loaders when known.
    """

    def __init__(self, message, record_id=None, line=None):
        super().__init__(message)
        self.record_id = record_id
        self.line = line


class MissingScore(ValidationError):
    pass


class InconsistentScore(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class BadLabel(ValidationError):
    pass


class MixedMcPresence(ValidationError):
    pass


class ParseError(ReliabilityError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UnknownStratumKey(ReliabilityError):
    pass


class EmptyLog(ReliabilityError):
    pass


class DegenerateLabels(ReliabilityError):
    """Only one class present where both are required."""


class NoErrors(DegenerateLabels):
    pass


class AllErrors(DegenerateLabels):
    pass


class MissingLogits(ReliabilityError):
    pass


class EmptySamples(ReliabilityError):
    pass


class MisalignedMembers(ReliabilityError):
    pass


class InsufficientBand(ReliabilityError):
    pass


class GroupTooSmall(ReliabilityError):
    pass


class LengthMismatch(ReliabilityError):
    pass


class DivergedLoss(ReliabilityError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class MissingFields(ReliabilityError):
    pass
