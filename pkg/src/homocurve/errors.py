"""Exception and warning classes raised by homocurve."""


class HomocurveError(Exception):
    """Base class for all named errors of the package."""


class DimensionMismatch(HomocurveError, ValueError):
    pass


class GridMismatch(HomocurveError, ValueError):
    pass


class NotARotation(HomocurveError, ValueError):
    pass


class AngleAmbiguity(HomocurveError, ArithmeticError):
    """Logarithm requested for a rotation by (numerically) pi.

    The axis sign is ambiguous there. ``value`` holds the consistent choice
    that would have been returned.
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class AntipodalPoints(HomocurveError, ValueError):
    pass


class YNotInK(HomocurveError, ValueError):
    pass


class ConsecutiveSamplesAtCutLocus(HomocurveError, ArithmeticError):
    pass


class DegenerateSpeed(HomocurveError, ArithmeticError):
    pass


class NonMonotone(HomocurveError, ValueError):
    pass


class EmptyEnsemble(HomocurveError, ValueError):
    pass


class MalformedHeader(HomocurveError, ValueError):
    def __init__(self, message, line_number=None):
        super().__init__(f"line {line_number}: {message}" if line_number else message)
        self.line_number = line_number


class MalformedFix(HomocurveError, ValueError):
    def __init__(self, message, line_number=None):
        super().__init__(f"line {line_number}: {message}" if line_number else message)
        self.line_number = line_number


class TooFewFixes(HomocurveError, ValueError):
    pass


class SchemaViolation(HomocurveError, ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class UsageError(HomocurveError):
    pass


# Conditions that are reported but do not abort the computation.

class HomocurveWarning(UserWarning):
    pass


class NoConvergence(HomocurveWarning):
    pass


class CountMismatch(HomocurveWarning):
    pass


class DegenerateTrack(HomocurveWarning):
    pass


class DimensionPadding(HomocurveWarning):
    pass
