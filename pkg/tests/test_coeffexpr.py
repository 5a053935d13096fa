import numpy as np
import pytest

from multexode import (
    AuxDeriv,
    AuxFn,
    Const,
    ExpPrim,
    FuncCall,
    IntPow,
    LowerContext,
    Mul,
    NonDifferentiable,
    Prim,
    Sampled,
    TrigNode,
    UnboundCoefficient,
    Var,
    CoeffRef,
    differentiate,
    lower,
    parse,
    simplify,
    to_text,
)
from multexode.coeffexpr import ONE, X, ZERO, add, mul

from multexode import GridFn


class TestStructure:
    def test_equality_and_hashing(self):
        assert parse("x^2 + 1") == parse("x^2 + 1")
        assert hash(parse("sin(x)")) == hash(FuncCall("sin", X))
        assert parse("x + 1") != parse("1 + x")

    def test_immutability(self):
        e = Const(2)
        with pytest.raises(AttributeError):
            e.value = 3


class TestSimplify:
    def test_constant_folding_and_absorption(self):
        assert simplify(Mul(Const(2), Const(3))) == Const(6)
        assert simplify(Mul(Const(1), X)) == X
        assert simplify(Mul(Const(0), parse("sin(x)"))) == ZERO
        assert simplify(parse("x - x")) == ZERO
        assert simplify(IntPow(X, 0)) == ONE

    def test_flattening_collects_constants(self):
        e = Mul(Mul(Const(2), X), Mul(Const(3), FuncCall("cos", X)))
        s = simplify(e)
        assert s == Mul(Mul(Const(6), X), FuncCall("cos", X))

    def test_idempotent(self):
        e = parse("2*x*3 + 0*sin(x) + x^2 - x^2 + 1")
        assert simplify(simplify(e)) == simplify(e)


class TestDifferentiate:
    def test_power_rule(self):
        assert simplify(differentiate(IntPow(X, 2))) == Mul(Const(2), X)

    def test_trig_node_shift(self):
        f1, f2 = parse("sin(x)"), parse("1 + x^2")
        t = TrigNode((f1, f2), 2)
        assert differentiate(t) == Mul(f2, TrigNode((f1, f2), 1))
        # index 1 wraps to the top index
        assert differentiate(TrigNode((f1, f2), 1)) == Mul(f1, TrigNode((f1, f2), 2))

    def test_exp_primitive_rule(self):
        a1 = parse("sin(x)")
        e = ExpPrim(a1, 1)
        assert differentiate(e) == Mul(a1, e)
        em = ExpPrim(a1, -1)
        assert simplify(differentiate(em)) == Mul(Mul(Const(-1), a1), em)

    def test_primitive_rule(self):
        f = parse("cos(x)")
        assert differentiate(Prim(f)) == f

    def test_second_derivative_of_trig_node_composes(self):
        f1, f2 = parse("sin(x)"), parse("x^2")
        t2 = TrigNode((f1, f2), 2)
        d2 = simplify(differentiate(differentiate(t2)))
        expected = simplify(
            add(
                mul(differentiate(f2), TrigNode((f1, f2), 1)),
                mul(f2, mul(f1, TrigNode((f1, f2), 2))),
            )
        )
        assert d2 == expected

    def test_unresolved_coefficient_rejected(self):
        with pytest.raises(NonDifferentiable):
            differentiate(CoeffRef("a1"))

    def test_sampled_rejected_without_opt_in(self):
        xs = np.linspace(-1, 1, 101)
        s = Sampled(xs, np.cos(xs))
        with pytest.raises(NonDifferentiable):
            differentiate(s)

    def test_sampled_numeric_opt_in(self):
        xs = np.linspace(-1.2, 1.2, 2001)
        s = Sampled(xs, np.cos(xs))
        ds = differentiate(s, numeric=True)
        assert np.max(np.abs(ds.ys - (-np.sin(xs)))) < 1e-9

    def test_aux_fn_caps_at_its_equation(self):
        b1, b2 = parse("x"), parse("sin(x)")
        fn = AuxFn("w", 2, (b1, b2), TrigNode((mul(b2, ExpPrim(b1, -1)), ExpPrim(b1, 1)), 2))
        d1 = differentiate(fn)
        assert d1 == AuxDeriv(fn, 1)
        d2 = simplify(differentiate(d1))
        assert d2 == simplify(add(mul(b1, AuxDeriv(fn, 1)), mul(b2, fn)))


class TestLower:
    def test_const_is_one(self, grid200):
        ctx = LowerContext(grid200)
        assert np.all(lower(ONE, ctx).values == 1.0)

    def test_exp_primitive_of_log_derivative(self, grid2000):
        # a1 bound to -zeta'/zeta for zeta = 2 + sin x
        zeta = 2.0 + np.sin(grid2000.nodes)
        env = {"a1": GridFn(grid2000, -np.cos(grid2000.nodes) / zeta)}
        ctx = LowerContext(grid2000, env=env)
        e = lower(ExpPrim(CoeffRef("a1"), -1), ctx)
        assert np.max(np.abs(e.values - zeta / 2.0)) <= 1e-9

    def test_trig_node_recovers_cosine(self, grid2000):
        omega = 2.0
        t = TrigNode((Const(-(omega**2)), ONE), 2)
        ctx = LowerContext(grid2000)
        c = lower(t, ctx)
        assert np.max(np.abs(c.values - np.cos(omega * grid2000.nodes))) <= 1e-8

    def test_unbound_coefficient(self, grid200):
        with pytest.raises(UnboundCoefficient):
            lower(CoeffRef("a7"), LowerContext(grid200))

    def test_memoized_per_context(self, grid200):
        ctx = LowerContext(grid200)
        e = parse("sin(x) + x^2")
        assert lower(e, ctx) is lower(e, ctx)

    def test_symbolic_matches_finite_difference(self, grid2000):
        e = parse("sin(2*x)*exp(x/2) + x^3/(2 + cos(x))")
        ctx = LowerContext(grid2000)
        f = lower(e, ctx)
        df = lower(simplify(differentiate(e)), ctx)
        h = 1e-4
        interior = grid2000.nodes[(grid2000.nodes > grid2000.lo + 0.01) & (grid2000.nodes < grid2000.hi - 0.01)]
        fd = (f(interior + h) - f(interior - h)) / (2 * h)
        rel = np.abs(fd - df(interior)) / np.maximum(1.0, np.abs(df(interior)))
        assert np.max(rel) <= 1e-5

    def test_sampled_lowering_interpolates(self, grid200):
        xs = np.linspace(-1.5, 1.5, 3001)
        s = Sampled(xs, np.cos(xs))
        got = lower(s, LowerContext(grid200))
        assert np.max(np.abs(got.values - np.cos(grid200.nodes))) < 1e-10

    def test_div_by_const_expr(self, grid200):
        e = parse("1/(1+x^2)")
        got = lower(e, LowerContext(grid200))
        assert np.max(np.abs(got.values - 1.0 / (1.0 + grid200.nodes**2))) < 1e-14


class TestPrinter:
    def test_display_forms(self):
        assert to_text(Prim(X)) == "P(x)"
        assert to_text(ExpPrim(X, -1)) == "expP[-](x)"
        assert to_text(TrigNode((X, ONE), 2)) == "T[2](x, 1)"

    def test_constant_first_canonical_order(self):
        assert to_text(Mul(X, Const(2))) == "2*x"
