"""Exception hierarchy.

Every error carries a module-tagged ``code`` so the command line can report
failures in a stable, machine-readable way.
"""


class NCWarpError(Exception):
    code = "ncwarp.error"


class FaithfulnessError(NCWarpError, ValueError):
    """A scale vector has a zero component, so the representation is not faithful."""

    code = "algebra.faithfulness"


class AsymmetricConstantsError(NCWarpError, ValueError):
    code = "algebra.asymmetric"


class InconsistentAlgebraError(NCWarpError, ValueError):
    code = "ncalc.inconsistent-context"


class WordLengthError(NCWarpError, ValueError):
    code = "ncalc.word-length"


class GradingError(NCWarpError, ValueError):
    code = "ncalc.grading"


class ExpressionSyntaxError(NCWarpError, ValueError):
    code = "ncalc.syntax"


class NonSkewError(NCWarpError, ValueError):
    code = "deformation.non-skew"


class UnsupportedClassError(NCWarpError, ValueError):
    """The adjoint action is not exponential-linear, so no closed form applies."""

    code = "deformation.unsupported-class"


class FamilyParameterError(NCWarpError, ValueError):
    code = "spacetimes.parameters"


class GrammarError(NCWarpError, ValueError):
    """A metric entry falls outside the exponential/scale-factor term grammar."""

    code = "gravity.grammar"


class RichardsonDisagreementError(NCWarpError, ArithmeticError):
    code = "gravity.richardson"


class ConstraintViolationError(NCWarpError, ArithmeticError):
    code = "cosmology.constraint"


class CosmologyParameterError(NCWarpError, ValueError):
    code = "cosmology.parameters"


class CentralityError(NCWarpError, ValueError):
    code = "centrality.unsupported"


class OperatorTrustError(NCWarpError, ValueError):
    code = "qoperators.trust"


class QuadratureConvergenceError(NCWarpError, ArithmeticError):
    code = "qoperators.quadrature"


class ConfigError(NCWarpError, ValueError):
    code = "cli.config"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code
