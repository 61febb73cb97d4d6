"""
Exception hierarchy for rootrat.
The CLI maps these onto exit codes; services raise them and let callers decide.
"""

from typing import Optional


class RootratError(Exception):
    """Base class for all rootrat errors"""


class ExpressionSyntaxError(RootratError, ValueError):
    """Input text does not conform to the expression grammar"""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class NestedRootError(ExpressionSyntaxError):
    """Nested or multiple distinct square roots in a root expression"""


class AlgebraError(RootratError, ValueError):
    """Invalid algebraic operation (zero divisor, bad homogenization degree, ...)"""


class TokenError(AlgebraError):
    """A second square-root token would be needed"""


class ParametrizationError(RootratError):
    """A step of the line-family construction failed for the chosen point"""


class SolverGaveUp(RootratError):
    """Elimination exceeded the configured bounds"""


class FDecompositionError(RootratError, ValueError):
    """A user-supplied F-decomposition violates its identity or degree bounds"""


class OptionsError(RootratError, ValueError):
    """Invalid option combination"""


class SearchTimeout(RootratError):
    """The per-call time budget was exhausted"""
