"""Exception hierarchy.

Every error carries a short machine-readable ``code`` used by the command line
front end (``error[<CODE>]: message``).
"""


class BulgeError(ValueError):
    code = "BULGE"


class UnsupportedRatio(BulgeError):
    code = "UNSUPPORTED_RATIO"


class NonMonotoneModel(BulgeError):
    code = "NON_MONOTONE"


class TooFewPoints(BulgeError):
    code = "TOO_FEW_POINTS"


class DegenerateAbscissa(BulgeError):
    code = "DEGENERATE_ABSCISSA"


class UncertaintyFailure(BulgeError):
    code = "UNCERTAINTY_FAILURE"


class ShapeTooSimilar(BulgeError):
    code = "SHAPE_TOO_SIMILAR"


class NoRootInBracket(BulgeError):
    code = "NO_ROOT"


class MultipleUnknowns(BulgeError):
    code = "MULTIPLE_UNKNOWNS"


class ZeroUnknownThickness(BulgeError):
    code = "ZERO_UNKNOWN_THICKNESS"


class NotConverged(BulgeError):
    """Raised when the membrane minimizer stops before reaching tolerance.

    The partially converged field is attached as ``field``.
    """

    code = "NOT_CONVERGED"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class PoorFit(BulgeError):
    code = "POOR_FIT"


class ParseError(BulgeError):
    code = "PARSE"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnitError(BulgeError):
    code = "UNIT"


class MonotonicityError(BulgeError):
    code = "MONOTONICITY"


class UnknownLabel(BulgeError):
    code = "UNKNOWN_LABEL"


class ConfigError(BulgeError):
    code = "CONFIG"
