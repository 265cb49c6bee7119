"""Series and finite-difference solvers for the generalized
time-fractional Burgers equation D_t^alpha u = u_xx + A u^p u_x."""

from .expressions import (
    Expr,
    Rational,
    Float,
    Const,
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Func,
    X,
    ExpressionError,
    EvaluationError,
    DifferentiationError,
    SampleDomainError,
    differentiate,
    simplify,
    evaluate,
    evaluate_many,
    equivalent,
    to_string,
)
from .parsing import parse, ParseError, UnknownIdentifierError
from .fractional import (
    GammaPoleError,
    LatticeError,
    LatticeExponent,
    PowerTerm,
    gamma,
    rl_integral_power,
    caputo_power,
    lagrange_multiplier,
    mittag_leffler,
)
from .series import (
    BurgersProblem,
    FracPoly,
    IterationError,
    TermCapError,
    caputo_t,
    rl_integral_t,
    spatial_derivative,
    multiply,
    residual,
    vim_step,
    vim_solve,
    evaluate_series,
    evaluate_grid,
)
from .reference import (
    GridSpec,
    GridField,
    ErrorReport,
    StabilityError,
    DivergenceError,
    QuadratureError,
    l1_weights,
    stability_margin,
    solve_fd,
    caputo_quadrature,
    compare,
)
from .estimators import VariationalIterationSolver, L1ReferenceSolver

__version__ = "0.1.0"
