"""Auxiliary-function chains.

An order-n problem with right-side coefficients a1..an is reduced to a chain
of strictly lower-order unit initial-value problems.  Starting from the unit
vector at the top position, each step extracts a scalar equation by applying
the upper-triangular derivative matrix (first row 0, 1, D, D^2, ...) to the
unknown times the current vector, contracting with (-1, a1, ..., an), and
collecting coefficients of u, u', u'', ...  The solved function feeds the next
vector, and the remaining index-1 function is fixed by requiring the product
of all of them to equal an.

Solved functions are wrapped as AuxFn nodes so later symbolic derivatives cap
at the order of their defining equation; this keeps every expression in the
chain free of coefficient derivatives up to order four, matching the closed
forms that the wrapped recursion reproduces.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import coeffexpr as ce
from .coeffexpr import AuxFn, Const, Expr, TrigNode, ZERO, as_expr
from .errors import DegenerateLeading
from .gridfn import Grid, GridFn, Interval
from .lower import VALIDITY_FLOOR, LowerContext, lower
from .multex import DEFAULT_MAX_TERMS, DEFAULT_TOL, SeriesDiagnostics


@dataclass(frozen=True)
class CoeffVector:
    """Full coefficient vector (a0, a1, ..., an) with a0 = -1 exactly."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(as_expr(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 2:
            raise ValueError("need at least order 1")
        if coeffs[0] != Const(-1):
            raise ValueError("leading entry must be the constant -1")

    @classmethod
    def from_rhs(cls, rhs) -> "CoeffVector":
        """Build from the right-side coefficients a1..an of y^(n) = sum aj y^(n-j)."""
        from .parser import parse

        out = [Const(-1)]
        for c in rhs:
            out.append(parse(c) if isinstance(c, str) else as_expr(c))
        return cls(tuple(out))

    @property
    def n(self) -> int:
        return len(self.coeffs) - 1

    def a(self, j: int) -> Expr:
        return self.coeffs[j]


class _UPoly:
    """Linear form sum_s c_s u^(s) in an unknown scalar u; coefficients are
    expressions."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = list(coeffs)

    @classmethod
    def of(cls, c: Expr) -> "_UPoly":
        return cls([c])

    def diff(self, numeric=False) -> "_UPoly":
        old = self.coeffs
        new = [ZERO] * (len(old) + 1)
        for s, c in enumerate(old):
            new[s] = ce.add(new[s], ce.differentiate(c, numeric))
            new[s + 1] = ce.add(new[s + 1], c)
        return _UPoly(new)

    def scaled(self, g: Expr) -> "_UPoly":
        return _UPoly([ce.mul(g, c) for c in self.coeffs])

    def plus(self, other: "_UPoly") -> "_UPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for s, c in enumerate(b):
            out[s] = ce.add(out[s], c)
        return _UPoly(out)

    def simplified(self) -> list:
        return [ce.simplify(c) for c in self.coeffs]


def apply_scriptD(v, numeric: bool = False) -> list:
    """Apply the (n+1)x(n+1) upper-triangular derivative matrix to an
    expression vector: entry i becomes sum over m > i of D^(m-i-1) v_m.
    The last entry of the result is always the zero expression."""
    v = [as_expr(c) for c in v]
    size = len(v)
    derivs = [[c] for c in v]  # derivs[m][d] = D^d v_m, filled on demand
    out = []
    for i in range(size - 1):
        acc = ZERO
        for m in range(i + 1, size):
            want = m - i - 1
            dm = derivs[m]
            while len(dm) <= want:
                dm.append(ce.differentiate(dm[-1], numeric))
            acc = ce.add(acc, dm[want])
        out.append(ce.simplify(acc))
    out.append(ZERO)
    return out


def extract_aux_ode(a: CoeffVector, beta, ctx: LowerContext | None = None, numeric: bool = False):
    """Extract the auxiliary equation carried by a vector.

    Expands the contraction of (a0..an) with the derivative matrix applied to
    u * beta into a linear form in u, u', ..., then normalizes by the leading
    coefficient, returning (order m, [b1..bm]) for u^(m) = b1 u^(m-1) + ... +
    bm u.  Raises DegenerateLeading when the extracted order is below what the
    vector's support promises or the leading coefficient vanishes at 0 (the
    latter check requires a context to evaluate on the grid).
    """
    beta = [as_expr(c) for c in beta]
    size = len(beta)
    if len(a.coeffs) != size:
        raise ValueError(f"coefficient vector has {len(a.coeffs)} entries, beta has {size}")

    polys = [_UPoly.of(c) for c in beta]
    total = _UPoly([ZERO])
    for i in range(size - 1):
        acc = _UPoly([ZERO])
        for m in range(i + 1, size):
            p = polys[m]
            for _ in range(m - i - 1):
                p = p.diff(numeric)
            acc = acc.plus(p)
        total = total.plus(acc.scaled(a.coeffs[i]))
    g = total.simplified()

    top_support = max((m for m, c in enumerate(beta) if c != ZERO), default=0)
    expected = top_support - 1
    order = max((s for s, c in enumerate(g) if c != ZERO), default=0)
    if order != expected or order < 1:
        raise DegenerateLeading(
            f"extracted order {order} does not match the expected order {expected}"
        )
    lead = g[order]
    if ctx is not None:
        lead_val = abs(lower(lead, ctx).at_zero())
        if lead_val <= VALIDITY_FLOOR:
            raise DegenerateLeading(
                f"leading coefficient magnitude {lead_val:.3e} at 0 is below {VALIDITY_FLOOR:.1e}"
            )
    elif lead == ZERO:
        raise DegenerateLeading("leading coefficient is identically zero")

    b = [ce.simplify(ce.div(ce.mul(Const(-1), g[order - i]), lead)) for i in range(1, order + 1)]
    return order, b


def solve_unit_ivp(order: int, b, ctx: LowerContext, name: str) -> Expr:
    """Closed expression for the unit solution of u^(m) = b1 u^(m-1) + ... + bm u
    with u(0) = 1 and all lower initial derivatives zero.

    Order 1 is an exponential of a primitive, order 2 the index-2 trig
    operator of the standard pair, and higher orders recurse through a fresh
    auxiliary chain on the same context.
    """
    b = [as_expr(c) for c in b]
    if order == 1:
        return ce.expprim(b[0], 1)
    if order == 2:
        down = ce.expprim(b[0], -1)
        up = ce.expprim(b[0], 1)
        return TrigNode((ce.mul(b[1], down), up), 2)
    sub = _build_chain(CoeffVector.from_rhs(b), ctx, prefix=f"{name}.")
    return TrigNode(sub.phi, sub.n)


@dataclass
class AuxChain:
    """The solved auxiliary functions of one problem, with realizations.

    phi[k-1] is the k-th auxiliary function as an expression (wrapped with its
    defining equation for k >= 2); phi_fns holds the grid realizations;
    beta[0] is the starting unit vector and each later entry the vector that
    produced the next extraction.  validity is the reported neighbourhood of
    0, already shrunk by one grid cell on every side the zero-free scans
    trimmed.
    """

    n: int
    a: CoeffVector
    phi: tuple
    phi_fns: tuple
    beta: tuple
    validity: Interval
    ctx: LowerContext
    diagnostics: dict


def _series_diag_for(expr: Expr, ctx: LowerContext) -> SeriesDiagnostics | None:
    real = expr.realization if isinstance(expr, AuxFn) else expr
    if isinstance(real, TrigNode):
        return ctx.trig_diagnostics.get(real.fs)
    return None


def _finalize_validity(ctx: LowerContext) -> Interval:
    v = ctx.validity
    g = ctx.grid
    lo = v.lo + g.h if v.lo > g.lo else v.lo
    hi = v.hi - g.h if v.hi < g.hi else v.hi
    return Interval(lo, hi)


def _build_chain(a: CoeffVector, ctx: LowerContext, prefix: str = "phi") -> AuxChain:
    n = a.n
    if n < 2:
        raise ValueError("auxiliary chains start at order 2")
    numeric = ctx.numeric_diff

    betas = [tuple([ZERO] * n + [ce.ONE])]
    cur = list(betas[0])
    phis: dict[int, Expr] = {}
    fns: dict[int, GridFn] = {}
    for k in range(n, 1, -1):
        order, b = extract_aux_ode(a, cur, ctx, numeric)
        if order != k - 1:
            raise DegenerateLeading(
                f"auxiliary equation for stage {k} has order {order}, expected {k - 1}"
            )
        name = f"{prefix}{k}" if not prefix.endswith(".") else f"{prefix}phi{k}"
        realization = solve_unit_ivp(order, b, ctx, name)
        fn_expr = AuxFn(name, order, tuple(b), realization)
        phis[k] = fn_expr
        fns[k] = lower(fn_expr, ctx).with_label(name)
        cur = apply_scriptD([ce.mul(fn_expr, entry) for entry in cur], numeric)
        betas.append(tuple(cur))

    prod = None
    for k in range(2, n + 1):
        prod = phis[k] if prod is None else ce.mul(prod, phis[k])
    phi1 = ce.simplify(ce.mul(a.a(n), ce.invert(prod)))
    phis[1] = phi1
    fns[1] = lower(phi1, ctx).with_label(f"{prefix}1" if not prefix.endswith(".") else f"{prefix}phi1")

    validity = _finalize_validity(ctx)
    phi = tuple(phis[k] for k in range(1, n + 1))
    phi_fns = tuple(fns[k] for k in range(1, n + 1))
    diags = {k: _series_diag_for(phis[k], ctx) for k in range(1, n + 1)}
    return AuxChain(n, a, phi, phi_fns, tuple(betas), validity, ctx, diags)


def build_aux_chain(
    a: CoeffVector,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    env=None,
    numeric_diff: bool = False,
) -> AuxChain:
    """Run the general recursion for the coefficients in ``a`` on ``grid``.

    Division by auxiliary functions is guarded: wherever a divisor approaches
    zero the validity interval shrinks and values outside it are zeroed, so
    the returned realizations are trustworthy exactly on ``chain.validity``.
    """
    ctx = LowerContext(
        grid, env=env, series_tol=tol, max_terms=max_terms, masked=True, numeric_diff=numeric_diff
    )
    return _build_chain(a, ctx)


def closed_form_aux(
    n: int,
    a: CoeffVector,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    env=None,
) -> AuxChain:
    """Hard-coded chains for orders 2, 3 and 4, used as an oracle for the
    general recursion."""
    if n not in (2, 3, 4):
        raise ValueError("closed forms exist for orders 2, 3 and 4 only")
    if a.n != n:
        raise ValueError(f"coefficient vector has order {a.n}, expected {n}")
    ctx = LowerContext(grid, env=env, series_tol=tol, max_terms=max_terms, masked=True)
    a1 = a.a(1)
    up = ce.expprim(a1, 1)
    down = ce.expprim(a1, -1)

    if n == 2:
        phi2 = ce.simplify(up)
        phi1 = ce.simplify(ce.mul(a.a(2), down))
        phi = (phi1, phi2)
    elif n == 3:
        c = TrigNode((ce.mul(a.a(2), down), up), 2)
        phi3 = c
        phi2 = ce.simplify(ce.mul(up, ce.intpow(c, -2)))
        phi1 = ce.simplify(ce.mul(ce.mul(a.a(3), down), c))
        phi = (phi1, phi2, phi3)
    else:
        c = TrigNode((ce.mul(a.a(2), down), up), 2)
        inner = (
            ce.simplify(ce.mul(ce.mul(a.a(3), down), c)),
            ce.simplify(ce.mul(up, ce.intpow(c, -2))),
            c,
        )
        psi4 = AuxFn("cf_psi4", 3, (a.a(1), a.a(2), a.a(3)), TrigNode(inner, 3))
        p4d1 = ce.AuxDeriv(psi4, 1)
        p4d2 = ce.AuxDeriv(psi4, 2)
        bracket = ce.add(
            ce.mul(a.a(2), psi4),
            ce.sub(ce.mul(ce.mul(Const(2), a.a(1)), p4d1), ce.mul(Const(3), p4d2)),
        )
        psi3 = TrigNode(
            (
                ce.mul(ce.mul(down, ce.intpow(psi4, 2)), bracket),
                ce.mul(up, ce.intpow(psi4, -3)),
            ),
            2,
        )
        psi2 = ce.mul(ce.mul(up, ce.intpow(psi3, -2)), ce.intpow(psi4, -3))
        psi1 = ce.mul(ce.mul(ce.mul(a.a(4), down), psi3), ce.intpow(psi4, 2))
        phi = (ce.simplify(psi1), ce.simplify(psi2), psi3, psi4)

    fns = tuple(
        lower(p, ctx).with_label(f"cf_phi{k}") for k, p in enumerate(phi, start=1)
    )
    validity = _finalize_validity(ctx)
    diags = {k: _series_diag_for(p, ctx) for k, p in enumerate(phi, start=1)}
    betas = (tuple([ZERO] * n + [ce.ONE]),)
    return AuxChain(n, a, phi, fns, betas, validity, ctx, diags)


def realization_residual(fn_expr: AuxFn, ctx: LowerContext) -> GridFn:
    """Residual of an auxiliary function's realization in its own equation,
    computed by differentiating the realization (not the capped wrapper)."""
    m = fn_expr.order
    lhs = ctx.realized_derivative(fn_expr, m)
    rhs = ZERO
    for i, b in enumerate(fn_expr.bcoeffs, start=1):
        term = fn_expr.realization if m - i == 0 else ctx.realized_derivative(fn_expr, m - i)
        rhs = ce.add(rhs, ce.mul(b, term))
    return lower(ce.simplify(ce.sub(lhs, rhs)), ctx)
