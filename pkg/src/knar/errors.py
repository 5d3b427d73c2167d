"""Exception types raised across the package."""


class KnarError(ValueError):
    """Base class for all validation errors raised by knar."""


class LengthMismatch(KnarError):
    pass


class WeightOutOfRange(KnarError):
    pass


class NegativeOrNonFiniteValue(KnarError):
    pass


class NegativeCapacity(KnarError):
    pass


class InconsistentTables(KnarError):
    pass


class TooLarge(KnarError):
    pass


class DimensionMismatch(KnarError):
    pass


class ProbOutOfRange(KnarError):
    pass


class ShapeMismatch(KnarError):
    pass


class MissingTruth(KnarError):
    pass


class DuplicateId(KnarError):
    pass


class SchemaViolation(KnarError):
    """A dataset line failed schema or invariant validation.

    ``line`` is 1-based; ``None`` when the failure is not tied to a line.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
