"""Exact symbolic Ricci-soliton toolkit for coordinate metrics with exp-polynomial entries."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AsymmetryDetected,
    ContextError,
    DegenerateMetricAtPoint,
    DimensionMismatch,
    DivisionByZero,
    ExprSyntaxError,
    NonAffineResidual,
    NonMonomialDeterminant,
    NonRationalFrequency,
    ParseError,
    SolitonForgeError,
    UnknownEntry,
    UnknownSymbol,
)
from .expr import Context, ExpPoly, context  # noqa: E402
from .geometry import (  # noqa: E402
    OneForm,
    SpaceModel,
    SymTensor,
    TwoForm,
    VectorField,
    christoffel,
    curvature,
    exterior_derivative,
    inverse_metric,
    lie_derivative_metric,
    lower,
    ricci,
    riemann,
    scalar_curvature,
)
from .parser import format_expr, format_model, parse_expr, parse_model, parse_scalar  # noqa: E402
from .scalar import ParamScalar, param_space  # noqa: E402
from .soliton import (  # noqa: E402
    GradientVerdict,
    Infeasible,
    SolitonSolution,
    assemble_system,
    classify,
    default_ansatz,
    gradient_check,
    residual,
    solve,
    solve_soliton,
    verify,
)
