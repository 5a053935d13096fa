"""Basis assembly and initial-value solving.

The k-th basis member of an order-n problem is the trig operator applied to
the auxiliary functions rotated k-1 steps to the right, at the index that the
rotation sends to n.  Member k then satisfies y^(j-1)(0) = delta_{jk}, so the
initial-value solution is the linear combination weighted by the initial
data.  Presets cover the impedance-form wave equation (order 2) and the
fourth-order hydrodynamic-stability form y'''' = a2 y'' + a4 y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coeffexpr as ce
from .auxiliary import AuxChain, CoeffVector, _finalize_validity, build_aux_chain
from .coeffexpr import Const, TrigNode, as_expr
from .errors import NonDifferentiable
from .gridfn import Grid, GridFn, Interval
from .lower import LowerContext, lower
from .multex import DEFAULT_MAX_TERMS, DEFAULT_TOL, TrigSpec
from .parser import parse


@dataclass(frozen=True)
class Permutation:
    """k-fold right shift on {1..n}: j maps to the representative of j-k."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("arity must be positive")

    def apply(self, j: int) -> int:
        return (j - 1 - self.k) % self.n + 1

    def inverse(self, j: int) -> int:
        return (j - 1 + self.k) % self.n + 1

    @property
    def mapping(self) -> tuple:
        return tuple(self.apply(j) for j in range(1, self.n + 1))


@dataclass(frozen=True)
class IVProblem:
    """Order, right-side coefficients and initial data of one problem."""

    n: int
    coefficients: tuple
    initial_values: tuple

    def __post_init__(self):
        coeffs = tuple(parse(c) if isinstance(c, str) else as_expr(c) for c in self.coefficients)
        ivs = tuple(complex(v) for v in self.initial_values)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "initial_values", ivs)
        if self.n < 1:
            raise ValueError("order must be at least 1")
        if len(coeffs) != self.n:
            raise ValueError(f"expected {self.n} coefficients, got {len(coeffs)}")
        if len(ivs) != self.n:
            raise ValueError(f"expected {self.n} initial values, got {len(ivs)}")


@dataclass
class BasisSet:
    """The n fundamental solutions with unit initial data at 0.

    psi holds the grid realizations (zeroed outside validity for n > 2 when
    guards fired); exprs the symbolic trig forms, which is what derivative
    checks differentiate; specs the realized operator inputs and indices.
    """

    n: int
    a: CoeffVector
    psi: tuple
    exprs: tuple
    specs: tuple
    validity: Interval
    diagnostics: tuple
    chain: AuxChain | None
    ctx: LowerContext

    def member(self, k: int) -> GridFn:
        return self.psi[k - 1]


def _assemble(phi: tuple, a: CoeffVector, chain, ctx: LowerContext, validity: Interval, label: str) -> BasisSet:
    n = len(phi)
    keep = ctx.grid.mask(validity)
    members = []
    exprs = []
    specs = []
    diags = []
    for k in range(1, n + 1):
        eta = Permutation(n, k - 1)
        inputs = tuple(phi[eta.apply(i) - 1] for i in range(1, n + 1))
        idx = eta.inverse(n)
        expr = TrigNode(inputs, idx)
        fn = lower(expr, ctx)
        vals = fn.values.copy()
        vals[~keep] = 0.0
        members.append(GridFn(ctx.grid, vals, label=f"{label}_{n}_{k}"))
        exprs.append(expr)
        specs.append(TrigSpec(tuple(lower(f, ctx) for f in inputs), idx))
        diags.append(ctx.trig_diagnostics.get(inputs))
    return BasisSet(
        n, a, tuple(members), tuple(exprs), tuple(specs), validity, tuple(diags), chain, ctx
    )


def basis(
    a: CoeffVector,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    env=None,
    numeric_diff: bool = False,
) -> BasisSet:
    """Fundamental solution basis for the coefficients in ``a``.

    Order 1 short-circuits to the exponential of a primitive; higher orders
    build the auxiliary chain and rotate it through the trig operators.
    """
    n = a.n
    if n == 1:
        ctx = LowerContext(grid, env=env, series_tol=tol, max_terms=max_terms, masked=True)
        expr = ce.expprim(a.a(1), 1)
        fn = lower(expr, ctx).with_label("psi_1_1")
        return BasisSet(
            1, a, (fn,), (expr,), (), grid.interval, (None,), None, ctx
        )
    chain = build_aux_chain(a, grid, tol=tol, max_terms=max_terms, env=env, numeric_diff=numeric_diff)
    return _assemble(chain.phi, a, chain, chain.ctx, chain.validity, "psi")


def solve_ivp(
    problem: IVProblem,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    env=None,
    numeric_diff: bool = False,
):
    """Solve the initial-value problem; returns (solution, basis)."""
    a = CoeffVector.from_rhs(problem.coefficients)
    bs = basis(a, grid, tol=tol, max_terms=max_terms, env=env, numeric_diff=numeric_diff)
    vals = np.zeros(grid.n + 1, dtype=complex)
    for c, member in zip(problem.initial_values, bs.psi):
        vals += c * member.values
    return GridFn(grid, vals, label="y"), bs


def preset_schrodinger(
    zeta,
    omega,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    numeric_diff: bool = False,
) -> BasisSet:
    """Impedance-form basis (C, S) for (zeta u')' + omega^2 zeta u = 0.

    The equation is rewritten as u'' = -(zeta'/zeta) u' - omega^2 u, which
    requires zeta to be positive and expression-differentiable (sampled
    impedance profiles need the numeric-differentiation opt-in).
    """
    zeta = parse(zeta) if isinstance(zeta, str) else as_expr(zeta)
    probe = LowerContext(grid)
    zvals = lower(zeta, probe).values
    if np.any(zvals.real <= 0) or np.any(np.abs(zvals.imag) > 1e-12 * np.abs(zvals.real)):
        raise ValueError("impedance profile must be real and positive on the grid")
    try:
        dzeta = ce.differentiate(zeta, numeric_diff)
    except NonDifferentiable:
        raise NonDifferentiable(
            "impedance profile is sampled data; pass numeric_diff=True to differentiate it"
        ) from None
    a1 = ce.simplify(ce.mul(Const(-1), ce.div(dzeta, zeta)))
    a2 = Const(-(complex(omega) ** 2))
    bs = basis(CoeffVector((Const(-1), a1, a2)), grid, tol=tol, max_terms=max_terms)
    bs.psi = (bs.psi[0].with_label("C"), bs.psi[1].with_label("S"))
    return bs


def preset_orr_sommerfeld(
    a2,
    a4,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> BasisSet:
    """Fourth-order basis for y'''' = a2 y'' + a4 y.

    With the two odd coefficients absent the auxiliary list collapses to
    (a4*C, C^-2, C, 1) where C is the index-2 trig operator of (a2, 1); the
    four members are its right-shift rotations.
    """
    a2 = parse(a2) if isinstance(a2, str) else as_expr(a2)
    a4 = parse(a4) if isinstance(a4, str) else as_expr(a4)
    ctx = LowerContext(grid, series_tol=tol, max_terms=max_terms, masked=True)
    c = TrigNode((a2, ce.ONE), 2)
    phi = (
        ce.simplify(ce.mul(a4, c)),
        ce.intpow(c, -2),
        c,
        ce.ONE,
    )
    a = CoeffVector((Const(-1), Const(0), a2, Const(0), a4))
    for p in phi:
        lower(p, ctx)
    return _assemble(phi, a, None, ctx, _finalize_validity(ctx), "psi")


def initial_condition_matrix(bs: BasisSet, numeric_diff: bool = False) -> np.ndarray:
    """Matrix of j-1-st derivatives of each member at 0; identity when the
    basis is healthy.  Row 1 is exact by construction; higher rows lower the
    symbolic derivatives and read the anchor node."""
    n = bs.n
    out = np.zeros((n, n), dtype=complex)
    for k in range(1, n + 1):
        d = bs.exprs[k - 1]
        out[0, k - 1] = lower(d, bs.ctx).at_zero()
        for j in range(2, n + 1):
            d = ce.simplify(ce.differentiate(d, numeric_diff))
            out[j - 1, k - 1] = lower(d, bs.ctx).at_zero()
    return out


def ode_residual(bs: BasisSet, k: int, numeric_diff: bool = False) -> GridFn:
    """Residual of member k in the original equation, via symbolic derivatives."""
    n = bs.n
    expr = bs.exprs[k - 1]
    derivs = [expr]
    for _ in range(n):
        derivs.append(ce.simplify(ce.differentiate(derivs[-1], numeric_diff)))
    res = derivs[n]
    for j in range(1, n + 1):
        res = ce.sub(res, ce.mul(bs.a.a(j), derivs[n - j]))
    return lower(ce.simplify(res), bs.ctx)
