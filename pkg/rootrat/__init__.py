"""
rootrat: rationalize square roots by parametrizing hypersurfaces.
"""

from rootrat.app.exceptions import (
    AlgebraError,
    ExpressionSyntaxError,
    FDecompositionError,
    NestedRootError,
    OptionsError,
    ParametrizationError,
    RootratError,
    SearchTimeout,
    SolverGaveUp,
    TokenError,
)
from rootrat.app.models import Options
from rootrat.app.services.driver import (
    VerifiedForm,
    parametrize_polynomial,
    rationalize_root,
    rationalize_simultaneously,
    verify,
)
from rootrat.app.services.expr import parse_expression, parse_rational_function, parse_root, render
from rootrat.config import settings

__version__ = settings.app_version

__all__ = [
    "AlgebraError",
    "ExpressionSyntaxError",
    "FDecompositionError",
    "NestedRootError",
    "Options",
    "OptionsError",
    "ParametrizationError",
    "RootratError",
    "SearchTimeout",
    "SolverGaveUp",
    "TokenError",
    "VerifiedForm",
    "parametrize_polynomial",
    "parse_expression",
    "parse_rational_function",
    "parse_root",
    "rationalize_root",
    "rationalize_simultaneously",
    "render",
    "verify",
]
