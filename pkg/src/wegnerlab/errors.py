"""Exception hierarchy.

Every numerical failure derives from :class:`ComputationError` and every bad
input configuration from :class:`ConfigError`; the CLI maps these onto exit
codes 1 and 2.
"""


class WegnerLabError(Exception):
    """Base class for all package errors."""

    code = "error"


class ConfigError(WegnerLabError):
    code = "config-error"


class ParseError(ConfigError):
    code = "parse-error"

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    code = "validation-error"

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ComputationError(WegnerLabError):
    code = "computation-error"


class InvalidInputError(ComputationError, ValueError):
    code = "invalid-input"


class DimensionMismatchError(InvalidInputError):
    code = "dimension-mismatch"


class SymbolVanishesError(ComputationError):
    code = "symbol-vanishes"


class InconsistentWindingError(ComputationError):
    code = "inconsistent-winding"


class NonIsolatedZerosError(ComputationError):
    code = "non-isolated-zeros"


class SingularSectionError(ComputationError):
    code = "singular-section"


class NoConvergenceError(ComputationError):
    code = "no-convergence"


class HypothesisViolatedError(ComputationError):
    code = "hypothesis-violated"


class NotDissipativeError(ComputationError):
    code = "not-dissipative"


class NotInvertibleError(ComputationError):
    code = "not-invertible"


class InvalidDensityError(InvalidInputError):
    code = "invalid-density"


class DegreeTooHighError(ComputationError):
    code = "degree-too-high"


class OutOfGridError(ComputationError):
    code = "out-of-grid"


class InsufficientPointsError(ComputationError):
    code = "insufficient-points"


class PreconditionViolatedError(ComputationError):
    code = "precondition-violated"
