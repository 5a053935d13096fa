"""Explicit series solutions of linear ODEs with variable coefficients.

The package evaluates the multivariate exponential-primitive (multex) series
and its trig-operator summands on a shared uniform grid, reduces an order-n
equation to a chain of lower-order auxiliary problems, assembles the
fundamental solution basis by rotating that chain through the trig operators,
and cross-checks everything against an iterated-integral series oracle and a
classical fixed-step integrator.
"""

from .auxiliary import AuxChain, CoeffVector, apply_scriptD, build_aux_chain, closed_form_aux, extract_aux_ode
from .coeffexpr import (
    AuxDeriv,
    AuxFn,
    Add,
    Const,
    CoeffRef,
    Div,
    ExpPrim,
    Expr,
    FuncCall,
    IntPow,
    Mul,
    Prim,
    Sampled,
    Sub,
    TrigNode,
    Var,
    differentiate,
    simplify,
    to_text,
)
from .errors import (
    ConfigError,
    CoverageGap,
    DegenerateLeading,
    DivisorTooSmall,
    ExpressionSyntaxError,
    GridMismatch,
    MultexodeError,
    NonDifferentiable,
    NonMonotoneAbscissae,
    NotConverged,
    Overflow,
    UnboundCoefficient,
    ValidityCollapsed,
)
from .gridfn import Grid, GridFn, Interval, algebra, exp_primitive, primitive, zero_free_interval
from .lower import LowerContext, lower, lower_expr
from .multex import SeriesDiagnostics, SignTable, TrigSpec, multex_e, simplicial, trig_equiv_check, trig_family, trig_t
from .oracle import DysonResult, MatrixFn, companion, dyson, rk4, truncation_bound
from .parser import parse
from .solver import (
    BasisSet,
    IVProblem,
    Permutation,
    basis,
    initial_condition_matrix,
    ode_residual,
    preset_orr_sommerfeld,
    preset_schrodinger,
    solve_ivp,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
