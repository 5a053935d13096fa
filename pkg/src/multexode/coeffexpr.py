"""Immutable coefficient-expression IR with symbolic differentiation.

Expression trees carry everything the solver manipulates symbolically:
constants, the variable x, named coefficient references, arithmetic, the
anchored primitive P, exponentials of primitives, trig-operator nodes, and
sampled data tables.  Differentiation knows the special rules of the method:
the derivative of a trig node shifts its index and multiplies by one input,
the derivative of exp(±P f) is ±f times itself, and derivatives of a solved
auxiliary function stop at the order of its defining equation, where the
equation's right side is substituted instead of differentiating further.

Simplification is deliberately small: constant folding, 0/1 absorption and
flattening of +/* chains.  Nothing here attempts general computer algebra.
"""

from __future__ import annotations

import cmath
import hashlib

import numpy as np

from .errors import NonDifferentiable

FUNC_NAMES = ("sin", "cos", "exp", "sinh", "cosh", "sqrt")

_FUNC_EVAL = {
    "sin": cmath.sin,
    "cos": cmath.cos,
    "exp": cmath.exp,
    "sinh": cmath.sinh,
    "cosh": cmath.cosh,
    "sqrt": cmath.sqrt,
}


class Expr:
    """Base class for expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ("_hash",)

    def _key(self):
        raise NotImplementedError

    def children(self):
        return ()

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            object.__setattr__(self, "_hash", hash((type(self).__name__,) + self._key()))
            return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    # arithmetic sugar; numbers coerce to Const
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return intpow(self, int(k))

    def __neg__(self):
        return mul(Const(-1), self)

    def __repr__(self):
        return f"{type(self).__name__}({to_text(self)})"


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, complex, np.integer, np.floating, np.complexfloating)):
        return Const(complex(v))
    raise TypeError(f"cannot interpret {v!r} as an expression")


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", complex(value))

    def __setattr__(self, *a):
        raise AttributeError("expressions are immutable")

    def _key(self):
        return (self.value,)


class Var(Expr):
    __slots__ = ()

    def _key(self):
        return ()


class CoeffRef(Expr):
    __slots__ = ("name",)

    def __init__(self, name):
        object.__setattr__(self, "name", str(name))

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.name,)


class _Binary(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        object.__setattr__(self, "a", as_expr(a))
        object.__setattr__(self, "b", as_expr(b))

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.a, self.b)

    def children(self):
        return (self.a, self.b)


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


class IntPow(Expr):
    __slots__ = ("base", "k")

    def __init__(self, base, k):
        object.__setattr__(self, "base", as_expr(base))
        object.__setattr__(self, "k", int(k))

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.base, self.k)

    def children(self):
        return (self.base,)


class ExpPrim(Expr):
    """exp(sign * P child) where P is the anchored primitive."""

    __slots__ = ("child", "sign")

    def __init__(self, child, sign):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "child", as_expr(child))
        object.__setattr__(self, "sign", int(sign))

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.child, self.sign)

    def children(self):
        return (self.child,)


class Prim(Expr):
    """P child: the anchored primitive, always evaluated numerically."""

    __slots__ = ("child",)

    def __init__(self, child):
        object.__setattr__(self, "child", as_expr(child))

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.child,)

    def children(self):
        return (self.child,)


class FuncCall(Expr):
    __slots__ = ("name", "child")

    def __init__(self, name, child):
        if name not in FUNC_NAMES:
            raise ValueError(f"unknown function {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "child", as_expr(child))

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.name, self.child)

    def children(self):
        return (self.child,)


class TrigNode(Expr):
    """Trig operator applied to n input expressions, selected index j."""

    __slots__ = ("fs", "j")

    def __init__(self, fs, j):
        fs = tuple(as_expr(f) for f in fs)
        j = int(j)
        if not fs:
            raise ValueError("trig node needs at least one input")
        if not 1 <= j <= len(fs):
            raise ValueError(f"index j = {j} out of range 1..{len(fs)}")
        object.__setattr__(self, "fs", fs)
        object.__setattr__(self, "j", j)

    __setattr__ = Const.__setattr__

    @property
    def n(self):
        return len(self.fs)

    def _key(self):
        return (self.fs, self.j)

    def children(self):
        return self.fs


class Sampled(Expr):
    """A data table (xs, values) interpolated onto the grid at lowering.

    Identity (equality, hashing) is by content digest so tables can be large
    without making tree comparisons expensive.
    """

    __slots__ = ("xs", "ys", "key")

    def __init__(self, xs, ys, key=None):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=complex)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("sampled table needs matching 1-d abscissae and values")
        xs = xs.copy()
        ys = ys.copy()
        xs.setflags(write=False)
        ys.setflags(write=False)
        if key is None:
            key = hashlib.sha1(xs.tobytes() + ys.tobytes()).hexdigest()[:16]
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "key", key)

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.key,)


class AuxFn(Expr):
    """A solved auxiliary function wrapped with its defining equation.

    order m and right-side coefficients (b1..bm) of u^(m) = b1 u^(m-1) + ...
    + bm u; realization is the closed expression the solver produced for it.
    Differentiation of an AuxFn proceeds through AuxDeriv placeholders until
    order m, where the equation's right side is substituted, capping the
    symbolic derivative depth exactly as the recursion requires.
    """

    __slots__ = ("name", "order", "bcoeffs", "realization")

    def __init__(self, name, order, bcoeffs, realization):
        bcoeffs = tuple(as_expr(b) for b in bcoeffs)
        order = int(order)
        if order < 1 or len(bcoeffs) != order:
            raise ValueError("need exactly `order` right-side coefficients")
        object.__setattr__(self, "name", str(name))
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "bcoeffs", bcoeffs)
        object.__setattr__(self, "realization", as_expr(realization))

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.name, self.order, self.bcoeffs, self.realization)

    def children(self):
        return (self.realization,) + self.bcoeffs


class AuxDeriv(Expr):
    """s-th derivative of an AuxFn, 1 <= s < order."""

    __slots__ = ("fn", "s")

    def __init__(self, fn, s):
        if not isinstance(fn, AuxFn):
            raise TypeError("AuxDeriv wraps an AuxFn")
        s = int(s)
        if not 1 <= s <= fn.order - 1:
            raise ValueError(f"derivative order {s} outside 1..{fn.order - 1}")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "s", s)

    __setattr__ = Const.__setattr__

    def _key(self):
        return (self.fn, self.s)

    def children(self):
        return (self.fn,)


ZERO = Const(0)
ONE = Const(1)
X = Var()


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


# ---------------------------------------------------------------------
# smart constructors: local constant folding and 0/1 absorption
# ---------------------------------------------------------------------

def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if a == b:
        return ZERO
    if _is_const(a, 0):
        return mul(Const(-1), b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(b) and not _is_const(a):
        a, b = b, a
    if _is_const(a) and isinstance(b, Mul) and _is_const(b.a):
        return mul(Const(a.value * b.a.value), b.b)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b) and b.value != 0:
        return Const(a.value / b.value)
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    if _is_const(b) and b.value != 0:
        return mul(Const(1.0 / b.value), a)
    return Div(a, b)


def intpow(base: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return base
    if _is_const(base):
        try:
            folded = base.value**k
        except (ZeroDivisionError, OverflowError):
            return IntPow(base, k)
        if cmath.isfinite(folded):
            return Const(folded)
        return IntPow(base, k)
    if isinstance(base, IntPow):
        return IntPow(base.base, base.k * k)
    return IntPow(base, k)


def expprim(child: Expr, sign: int) -> Expr:
    if _is_const(child, 0):
        return ONE
    return ExpPrim(child, sign)


def prim(child: Expr) -> Expr:
    if _is_const(child, 0):
        return ZERO
    return Prim(child)


def func(name: str, child: Expr) -> Expr:
    if _is_const(child):
        try:
            folded = _FUNC_EVAL[name](child.value)
        except (OverflowError, ValueError):
            return FuncCall(name, child)
        if cmath.isfinite(folded):
            return Const(folded)
    return FuncCall(name, child)


def invert(e: Expr) -> Expr:
    """Structural reciprocal, pushing through products and exponentials."""
    if isinstance(e, ExpPrim):
        return ExpPrim(e.child, -e.sign)
    if isinstance(e, IntPow):
        return intpow(e.base, -e.k)
    if isinstance(e, Mul):
        return mul(invert(e.a), invert(e.b))
    if _is_const(e) and e.value != 0:
        return Const(1.0 / e.value)
    return IntPow(e, -1)


# ---------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------

def _flatten(e: Expr, cls):
    """Collect the operand chain of nested Add or Mul nodes."""
    out = []
    stack = [e]
    while stack:
        cur = stack.pop()
        if isinstance(cur, cls):
            stack.append(cur.b)
            stack.append(cur.a)
        else:
            out.append(cur)
    return out


def simplify(e: Expr) -> Expr:
    """Bottom-up constant folding, 0/1 absorption, and +/* flattening.

    Flattened chains are rebuilt left-associated with any folded constant
    first, which is also the canonical order the printer emits.
    """
    if isinstance(e, (Const, Var, CoeffRef, Sampled)):
        return e
    if isinstance(e, (Add, Mul)):
        cls = type(e)
        ops = [simplify(c) for c in _flatten(e, cls)]
        cval = complex(0) if cls is Add else complex(1)
        rest = []
        for c in ops:
            if _is_const(c):
                cval = cval + c.value if cls is Add else cval * c.value
            else:
                rest.append(c)
        if cls is Mul and cval == 0:
            return ZERO
        identity = 0 if cls is Add else 1
        out = None
        if cval != identity or not rest:
            out = Const(cval)
        for c in rest:
            out = c if out is None else (Add(out, c) if cls is Add else Mul(out, c))
        return out
    if isinstance(e, Sub):
        return sub(simplify(e.a), simplify(e.b))
    if isinstance(e, Div):
        return div(simplify(e.a), simplify(e.b))
    if isinstance(e, IntPow):
        return intpow(simplify(e.base), e.k)
    if isinstance(e, ExpPrim):
        return expprim(simplify(e.child), e.sign)
    if isinstance(e, Prim):
        return prim(simplify(e.child))
    if isinstance(e, FuncCall):
        return func(e.name, simplify(e.child))
    if isinstance(e, TrigNode):
        return TrigNode(tuple(simplify(f) for f in e.fs), e.j)
    if isinstance(e, (AuxFn, AuxDeriv)):
        return e
    raise TypeError(f"cannot simplify {type(e).__name__}")


# ---------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------

_FUNC_DERIV = {
    "sin": lambda u, du: mul(func("cos", u), du),
    "cos": lambda u, du: mul(Const(-1), mul(func("sin", u), du)),
    "exp": lambda u, du: mul(func("exp", u), du),
    "sinh": lambda u, du: mul(func("cosh", u), du),
    "cosh": lambda u, du: mul(func("sinh", u), du),
    "sqrt": lambda u, du: div(du, mul(Const(2), func("sqrt", u))),
}


def differentiate(e: Expr, numeric: bool = False) -> Expr:
    """Symbolic d/dx of an expression.

    Trig nodes follow the index-shift rule (the j-th operator's derivative is
    its j-th input times the operator at index j-1, wrapping j=1 to n).
    Sampled tables are rejected unless ``numeric`` opts into order-4 finite
    differences.  Auxiliary-function derivatives cap at the order of the
    defining equation, substituting its right side there.
    """
    d = lambda x: differentiate(x, numeric)  # noqa: E731
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, CoeffRef):
        raise NonDifferentiable(
            f"cannot differentiate unresolved coefficient {e.name!r}; substitute its definition first"
        )
    if isinstance(e, Add):
        return add(d(e.a), d(e.b))
    if isinstance(e, Sub):
        return sub(d(e.a), d(e.b))
    if isinstance(e, Mul):
        return add(mul(d(e.a), e.b), mul(e.a, d(e.b)))
    if isinstance(e, Div):
        return div(sub(mul(d(e.a), e.b), mul(e.a, d(e.b))), intpow(e.b, 2))
    if isinstance(e, IntPow):
        return mul(mul(Const(e.k), intpow(e.base, e.k - 1)), d(e.base))
    if isinstance(e, ExpPrim):
        return mul(mul(Const(e.sign), e.child), e)
    if isinstance(e, Prim):
        return e.child
    if isinstance(e, FuncCall):
        return _FUNC_DERIV[e.name](e.child, d(e.child))
    if isinstance(e, TrigNode):
        if e.j >= 2:
            return mul(e.fs[e.j - 1], TrigNode(e.fs, e.j - 1))
        return mul(e.fs[0], TrigNode(e.fs, e.n))
    if isinstance(e, Sampled):
        if not numeric:
            raise NonDifferentiable(
                "sampled data is not symbolically differentiable; enable numeric differentiation"
            )
        return Sampled(e.xs, _table_derivative(e.xs, e.ys), key=e.key + "'")
    if isinstance(e, AuxFn):
        if e.order == 1:
            return mul(e.bcoeffs[0], e)
        return AuxDeriv(e, 1)
    if isinstance(e, AuxDeriv):
        fn = e.fn
        if e.s + 1 <= fn.order - 1:
            return AuxDeriv(fn, e.s + 1)
        out = ZERO
        for i, b in enumerate(fn.bcoeffs, start=1):
            lower_order = fn.order - i
            term = fn if lower_order == 0 else AuxDeriv(fn, lower_order)
            out = add(out, mul(b, term))
        return out
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def _table_derivative(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Order-4 finite-difference derivative of a (possibly non-uniform) table."""
    m = len(xs)
    if m < 4:
        raise ValueError("need at least 4 samples to differentiate a table")
    out = np.empty(m, dtype=complex)
    for i in range(m):
        w = min(max(i - 1, 0), m - 4)
        xw = xs[w : w + 4]
        yw = ys[w : w + 4]
        q = xs[i]
        acc = 0.0 + 0.0j
        for k in range(4):
            dk = 0.0
            for mm in range(4):
                if mm == k:
                    continue
                p = 1.0
                for r in range(4):
                    if r in (k, mm):
                        continue
                    p *= (q - xw[r]) / (xw[k] - xw[r])
                dk += p / (xw[k] - xw[mm])
            acc += dk * yw[k]
        out[i] = acc
    return out


# ---------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------

def _fmt_real(v: float) -> str:
    s = format(v, ".17g")
    return s


def _fmt_const(c: complex) -> str:
    if c.imag == 0:
        return _fmt_real(c.real)
    if c.real == 0:
        if c.imag == 1:
            return "i"
        return f"({_fmt_real(c.imag)}*i)"
    return f"({_fmt_real(c.real)} + {_fmt_real(c.imag)}*i)"


_PREC = {"add": 1, "mul": 2, "pow": 3, "atom": 4}


def _print(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        s = _fmt_const(e.value)
        return s, (_PREC["atom"] if not s.startswith("-") else _PREC["pow"])
    if isinstance(e, Var):
        return "x", _PREC["atom"]
    if isinstance(e, CoeffRef):
        return e.name, _PREC["atom"]
    if isinstance(e, Add):
        sa, _ = _print(e.a)
        sb, pb = _print(e.b)
        if pb <= _PREC["add"]:
            sb = f"({sb})"
        return f"{sa} + {sb}", _PREC["add"]
    if isinstance(e, Sub):
        sa, _ = _print(e.a)
        sb, pb = _print(e.b)
        if pb <= _PREC["add"]:
            sb = f"({sb})"
        return f"{sa} - {sb}", _PREC["add"]
    if isinstance(e, Mul):
        if _is_const(e.a, -1):
            sb, pb = _print(e.b)
            # unary minus binds tighter than ^, so only atoms stay bare
            if pb != _PREC["atom"]:
                sb = f"({sb})"
            return f"-{sb}", _PREC["mul"]
        sa, pa = _print(e.a)
        sb, pb = _print(e.b)
        if pa < _PREC["mul"]:
            sa = f"({sa})"
        if pb <= _PREC["mul"] and not pb == _PREC["atom"]:
            sb = f"({sb})"
        return f"{sa}*{sb}", _PREC["mul"]
    if isinstance(e, Div):
        sa, pa = _print(e.a)
        sb, pb = _print(e.b)
        if pa < _PREC["mul"]:
            sa = f"({sa})"
        if pb <= _PREC["mul"]:
            sb = f"({sb})"
        return f"{sa}/{sb}", _PREC["mul"]
    if isinstance(e, IntPow):
        sb, pb = _print(e.base)
        if pb < _PREC["atom"]:
            sb = f"({sb})"
        return f"{sb}^{e.k}", _PREC["pow"]
    if isinstance(e, FuncCall):
        return f"{e.name}({_print(e.child)[0]})", _PREC["atom"]
    # display-only forms below; not part of the parseable grammar
    if isinstance(e, ExpPrim):
        s = "+" if e.sign > 0 else "-"
        return f"expP[{s}]({_print(e.child)[0]})", _PREC["atom"]
    if isinstance(e, Prim):
        return f"P({_print(e.child)[0]})", _PREC["atom"]
    if isinstance(e, TrigNode):
        inner = ", ".join(_print(f)[0] for f in e.fs)
        return f"T[{e.j}]({inner})", _PREC["atom"]
    if isinstance(e, Sampled):
        return f"sampled({e.key})", _PREC["atom"]
    if isinstance(e, AuxFn):
        return e.name, _PREC["atom"]
    if isinstance(e, AuxDeriv):
        return f"{e.fn.name}{'_x' * e.s}", _PREC["atom"]
    raise TypeError(f"cannot print {type(e).__name__}")


def to_text(e: Expr) -> str:
    """Canonical text of the simplified expression.

    For trees built from the parseable grammar (constants, x, coefficient
    names, arithmetic, integer powers, function calls) the output parses back
    to the same simplified tree.  Operator nodes print in a bracketed display
    form that is not meant to be re-parsed.
    """
    return _print(simplify(e))[0]
