"""Expression trees for symbols a(x, xi) and amplitudes a(x, y, xi).

Node kinds: constant, variable, sum, product, quotient, integer power,
exponential, and the Japanese bracket of a variable block.  The language is
closed under exact partial differentiation, and every constant is kept as an
exact complex rational so that polynomial identities cancel to literal zero.

Evaluation broadcasts over numpy arrays; the environment maps variable blocks
("x", "xi", "y") to tuples of coordinate arrays.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

BLOCKS = ("x", "y", "xi")


class ExactC:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def of(value) -> "ExactC":
        if isinstance(value, ExactC):
            return value
        if isinstance(value, complex):
            return ExactC(Fraction(value.real), Fraction(value.imag))
        return ExactC(Fraction(value), 0)

    def __add__(self, o):
        return ExactC(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return ExactC(self.re - o.re, self.im - o.im)

    def __mul__(self, o):
        return ExactC(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __truediv__(self, o):
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by exact zero")
        return ExactC((self.re * o.re + self.im * o.im) / d,
                      (self.im * o.re - self.re * o.im) / d)

    def __neg__(self):
        return ExactC(-self.re, -self.im)

    def __pow__(self, n: int):
        if n < 0:
            return ExactC(1) / self.__pow__(-n)
        out = ExactC(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, o):
        if not isinstance(o, ExactC):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    @property
    def is_zero(self):
        return self.re == 0 and self.im == 0

    @property
    def is_one(self):
        return self.re == 1 and self.im == 0

    @property
    def is_real(self):
        return self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactC({self.re}, {self.im})"


ZERO = ExactC(0)
ONE = ExactC(1)
I_UNIT = ExactC(0, 1)
MINUS_I = ExactC(0, -1)


class Expr:
    """Immutable expression node.

    Evaluation memoizes per call on node identity: derivative trees share
    subtrees heavily (every derivative of exp(g) reuses the same exp node),
    so shared nodes are computed once per grid.
    """

    __slots__ = ()

    def diff(self, block: str, index: int = 0) -> "Expr":
        raise NotImplementedError

    def evaluate(self, env: Mapping) -> np.ndarray | complex:
        return self._ev(env, {})

    def _ev(self, env, memo):
        key = id(self)
        hit = memo.get(key)
        if hit is None:
            hit = self._compute(env, memo)
            memo[key] = hit
        return hit

    def _compute(self, env, memo):
        raise NotImplementedError

    # operator sugar, used by term generators
    def __add__(self, o):
        return add(self, _coerce(o))

    def __radd__(self, o):
        return add(_coerce(o), self)

    def __sub__(self, o):
        return add(self, neg(_coerce(o)))

    def __rsub__(self, o):
        return add(_coerce(o), neg(self))

    def __mul__(self, o):
        return mul(self, _coerce(o))

    def __rmul__(self, o):
        return mul(_coerce(o), self)

    def __truediv__(self, o):
        return div(self, _coerce(o))

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return pow_(self, n)


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Const(ExactC.of(v))


class Const(Expr):
    __slots__ = ("value", "_c")

    def __init__(self, value):
        object.__setattr__(self, "value", ExactC.of(value))
        object.__setattr__(self, "_c", self.value.to_complex())

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        return Const(ZERO)

    def _compute(self, env, memo):
        return self._c

    def __eq__(self, o):
        return isinstance(o, Const) and self.value == o.value

    def __hash__(self):
        return hash(("const", self.value))


class Var(Expr):
    __slots__ = ("block", "index")

    def __init__(self, block: str, index: int = 0):
        if block not in BLOCKS:
            raise ValueError(f"unknown variable block {block!r}")
        object.__setattr__(self, "block", block)
        object.__setattr__(self, "index", index)

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        return Const(ONE if (block == self.block and index == self.index) else ZERO)

    def _compute(self, env, memo):
        return env[self.block][self.index]

    def __eq__(self, o):
        return isinstance(o, Var) and (self.block, self.index) == (o.block, o.index)

    def __hash__(self):
        return hash(("var", self.block, self.index))


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        object.__setattr__(self, "terms", tuple(terms))

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        return add(*[t.diff(block, index) for t in self.terms])

    def _compute(self, env, memo):
        acc = self.terms[0]._ev(env, memo)
        for t in self.terms[1:]:
            acc = acc + t._ev(env, memo)
        return acc

    def __eq__(self, o):
        return isinstance(o, Sum) and self.terms == o.terms

    def __hash__(self):
        return hash(("sum", self.terms))


class Prod(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        object.__setattr__(self, "factors", tuple(factors))

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        terms = []
        fs = self.factors
        for i, f in enumerate(fs):
            d = f.diff(block, index)
            terms.append(mul(*fs[:i], d, *fs[i + 1:]))
        return add(*terms)

    def _compute(self, env, memo):
        acc = self.factors[0]._ev(env, memo)
        for f in self.factors[1:]:
            acc = acc * f._ev(env, memo)
        return acc

    def __eq__(self, o):
        return isinstance(o, Prod) and self.factors == o.factors

    def __hash__(self):
        return hash(("prod", self.factors))


class Quot(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        u, v = self.num, self.den
        return div(add(mul(u.diff(block, index), v), neg(mul(u, v.diff(block, index)))),
                   pow_(v, 2))

    def _compute(self, env, memo):
        return self.num._ev(env, memo) / self.den._ev(env, memo)

    def __eq__(self, o):
        return isinstance(o, Quot) and (self.num, self.den) == (o.num, o.den)

    def __hash__(self):
        return hash(("quot", self.num, self.den))


class Pow(Expr):
    """Integer power; negative exponents allowed away from zeros."""

    __slots__ = ("base", "n")

    def __init__(self, base, n: int):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "n", int(n))

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        d = self.base.diff(block, index)
        return mul(Const(ExactC(self.n)), pow_(self.base, self.n - 1), d)

    def _compute(self, env, memo):
        b = self.base._ev(env, memo)
        if self.n < 0:
            return 1.0 / (b ** (-self.n))
        return b ** self.n

    def __eq__(self, o):
        return isinstance(o, Pow) and (self.base, self.n) == (o.base, o.n)

    def __hash__(self):
        return hash(("pow", self.base, self.n))


class Exp(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        object.__setattr__(self, "arg", arg)

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        return mul(self, self.arg.diff(block, index))

    def _compute(self, env, memo):
        return np.exp(self.arg._ev(env, memo))

    def __eq__(self, o):
        return isinstance(o, Exp) and self.arg == o.arg

    def __hash__(self):
        return hash(("exp", self.arg))


class Angle(Expr):
    """Japanese bracket <v> = (1 + |v|^2)^(1/2) of one variable block."""

    __slots__ = ("block",)

    def __init__(self, block: str):
        if block not in BLOCKS:
            raise ValueError(f"unknown variable block {block!r}")
        object.__setattr__(self, "block", block)

    def __setattr__(self, *a):
        raise AttributeError("immutable")

    def diff(self, block, index=0):
        if block != self.block:
            return Const(ZERO)
        return div(Var(block, index), self)

    def _compute(self, env, memo):
        coords = env[self.block]
        s = coords[0] * coords[0]
        for c in coords[1:]:
            s = s + c * c
        return np.sqrt(1.0 + s)

    def __eq__(self, o):
        return isinstance(o, Angle) and self.block == o.block

    def __hash__(self):
        return hash(("angle", self.block))


# ---------------------------------------------------------------------------
# smart constructors (flatten, fold constants, drop identities)
# ---------------------------------------------------------------------------

def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    const = ZERO
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    rest = []
    for t in flat:
        if isinstance(t, Const):
            const = const + t.value
        else:
            rest.append(t)
    if not const.is_zero or not rest:
        rest.append(Const(const))
    if len(rest) == 1:
        return rest[0]
    return Sum(rest)


def neg(e: Expr) -> Expr:
    return mul(Const(ExactC(-1)), e)


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    const = ONE
    for f in factors:
        if isinstance(f, Prod):
            flat.extend(f.factors)
        else:
            flat.append(f)
    rest = []
    for f in flat:
        if isinstance(f, Const):
            const = const * f.value
        else:
            rest.append(f)
    if const.is_zero:
        return Const(ZERO)
    if not const.is_one or not rest:
        rest.insert(0, Const(const))
    if len(rest) == 1:
        return rest[0]
    return Prod(rest)


def div(num: Expr, den: Expr) -> Expr:
    if isinstance(den, Const):
        return mul(Const(ONE / den.value), num)
    if isinstance(num, Const) and num.value.is_zero:
        return Const(ZERO)
    return Quot(num, den)


def pow_(base: Expr, n: int) -> Expr:
    n = int(n)
    if n == 0:
        return Const(ONE)
    if n == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** n)
    return Pow(base, n)


def exp(arg: Expr) -> Expr:
    if isinstance(arg, Const) and arg.value.is_zero:
        return Const(ONE)
    return Exp(arg)


def angle(block: str) -> Expr:
    return Angle(block)


# ---------------------------------------------------------------------------
# differentiation with multi-indices and the D = partial / i convention
# ---------------------------------------------------------------------------

class BudgetExceededError(ValueError):
    """Requested derivative order beyond the configured budget."""


def differentiate(a: Expr, alpha=0, beta=0, gamma=0, convention: str = "partial",
                  budget: int = 12) -> Expr:
    """D^alpha_xi D^beta_x D^gamma_y a (or plain partials).

    Multi-indices are ints in d = 1 or sequences of ints in general; the
    ``D`` convention multiplies each partial by 1/i.
    """
    alpha = _as_multi(alpha)
    beta = _as_multi(beta)
    gamma = _as_multi(gamma)
    total = sum(alpha) + sum(beta) + sum(gamma)
    if total > budget:
        raise BudgetExceededError(f"|alpha|+|beta|+|gamma| = {total} exceeds budget {budget}")
    out = a
    for block, multi in (("xi", alpha), ("x", beta), ("y", gamma)):
        for idx, k in enumerate(multi):
            for _ in range(k):
                out = collect(out.diff(block, idx))
    if convention == "D":
        out = mul(Const(MINUS_I ** total), out)
    elif convention != "partial":
        raise ValueError("convention must be 'partial' or 'D'")
    return out


def _as_multi(m):
    if isinstance(m, (int, np.integer)):
        return (int(m),)
    return tuple(int(v) for v in m)


def reflect_xi(e: Expr) -> Expr:
    """Substitute xi -> -xi.  The bracket of the xi block is even, so it is
    left untouched; only xi variables pick up a sign."""
    if isinstance(e, Var):
        return neg(e) if e.block == "xi" else e
    if isinstance(e, Const) or isinstance(e, Angle):
        return e
    if isinstance(e, Sum):
        return add(*[reflect_xi(t) for t in e.terms])
    if isinstance(e, Prod):
        return mul(*[reflect_xi(f) for f in e.factors])
    if isinstance(e, Quot):
        return div(reflect_xi(e.num), reflect_xi(e.den))
    if isinstance(e, Pow):
        return pow_(reflect_xi(e.base), e.n)
    if isinstance(e, Exp):
        return exp(reflect_xi(e.arg))
    raise TypeError(f"unknown node {type(e)}")


def swap_x_y(e: Expr) -> Expr:
    """Substitute x <-> y (amplitude manipulation helper)."""
    table = {"x": "y", "y": "x", "xi": "xi"}
    if isinstance(e, Var):
        return Var(table[e.block], e.index)
    if isinstance(e, Angle):
        return Angle(table[e.block])
    if isinstance(e, Const):
        return e
    if isinstance(e, Sum):
        return add(*[swap_x_y(t) for t in e.terms])
    if isinstance(e, Prod):
        return mul(*[swap_x_y(f) for f in e.factors])
    if isinstance(e, Quot):
        return div(swap_x_y(e.num), swap_x_y(e.den))
    if isinstance(e, Pow):
        return pow_(swap_x_y(e.base), e.n)
    if isinstance(e, Exp):
        return exp(swap_x_y(e.arg))
    raise TypeError(f"unknown node {type(e)}")


def blocks_used(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.block}
    if isinstance(e, Angle):
        return {e.block}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Sum):
        out = set()
        for t in e.terms:
            out |= blocks_used(t)
        return out
    if isinstance(e, Prod):
        out = set()
        for f in e.factors:
            out |= blocks_used(f)
        return out
    if isinstance(e, Quot):
        return blocks_used(e.num) | blocks_used(e.den)
    if isinstance(e, (Pow,)):
        return blocks_used(e.base)
    if isinstance(e, Exp):
        return blocks_used(e.arg)
    raise TypeError(f"unknown node {type(e)}")


def dimension(e: Expr) -> int:
    """Inferred d = 1 + max variable index."""
    def walk(n):
        if isinstance(n, Var):
            return n.index
        if isinstance(n, (Const, Angle)):
            return -1
        if isinstance(n, Sum):
            return max((walk(t) for t in n.terms), default=-1)
        if isinstance(n, Prod):
            return max((walk(f) for f in n.factors), default=-1)
        if isinstance(n, Quot):
            return max(walk(n.num), walk(n.den))
        if isinstance(n, Pow):
            return walk(n.base)
        if isinstance(n, Exp):
            return walk(n.arg)
        raise TypeError(type(n))
    return max(1, walk(e) + 1)


# ---------------------------------------------------------------------------
# polynomial expansion (exact)
# ---------------------------------------------------------------------------

def to_polynomial(e: Expr):
    """Expand into {monomial: ExactC} with monomial keys as sorted tuples of
    ((block, index), exponent).  Returns None when the tree is not polynomial
    (exp, bracket, true quotients, negative powers)."""
    if isinstance(e, Const):
        return {} if e.value.is_zero else {(): e.value}
    if isinstance(e, Var):
        return {(((e.block, e.index), 1),): ONE}
    if isinstance(e, Sum):
        out: dict = {}
        for t in e.terms:
            p = to_polynomial(t)
            if p is None:
                return None
            for k, v in p.items():
                s = out.get(k, ZERO) + v
                if s.is_zero:
                    out.pop(k, None)
                else:
                    out[k] = s
        return out
    if isinstance(e, Prod):
        out = {(): ONE}
        for f in e.factors:
            p = to_polynomial(f)
            if p is None:
                return None
            out = _poly_mul(out, p)
        return out
    if isinstance(e, Pow):
        if e.n < 0:
            return None
        p = to_polynomial(e.base)
        if p is None:
            return None
        out = {(): ONE}
        for _ in range(e.n):
            out = _poly_mul(out, p)
        return out
    if isinstance(e, Quot):
        den = to_polynomial(e.den)
        if den is not None and len(den) == 1 and () in den:
            num = to_polynomial(e.num)
            if num is None:
                return None
            c = den[()]
            return {k: v / c for k, v in num.items()}
        return None
    return None


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for k1, v1 in a.items():
        d1 = dict(k1)
        for k2, v2 in b.items():
            d = dict(d1)
            for var, n in k2:
                d[var] = d.get(var, 0) + n
            key = tuple(sorted(d.items()))
            s = out.get(key, ZERO) + v1 * v2
            if s.is_zero:
                out.pop(key, None)
            else:
                out[key] = s
    return out


def poly_to_expr(poly: dict) -> Expr:
    """Rebuild a compact expression from a {monomial: ExactC} table."""
    if not poly:
        return Const(ZERO)
    terms = []
    for key in sorted(poly.keys(), key=lambda k: (len(k), k)):
        factors = [Const(poly[key])]
        for (block, idx), n in key:
            factors.append(pow_(Var(block, idx), n))
        terms.append(mul(*factors))
    return add(*terms)


def collect(e: Expr) -> Expr:
    """Group additive terms by exponential factor and canonicalize polynomial
    cofactors.  Product-rule trees of poly * exp(g) collapse back to that
    shape, keeping iterated derivatives linear in the monomial count instead
    of exponential in the order."""
    terms = e.terms if isinstance(e, Sum) else [e]
    groups: dict = {}
    order: list = []
    for t in terms:
        factors = list(t.factors) if isinstance(t, Prod) else [t]
        exp_args = [f.arg for f in factors if isinstance(f, Exp)]
        rest = [f for f in factors if not isinstance(f, Exp)]
        key = add(*exp_args) if exp_args else None
        cof = mul(*rest) if rest else Const(ONE)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(cof)
    out = []
    for key in order:
        s = add(*groups[key])
        p = to_polynomial(s)
        if p is not None:
            s = poly_to_expr(p)
        if key is not None:
            s = mul(s, exp(key))
        out.append(s)
    return add(*out)


def poly_equal(a: Expr, b: Expr) -> bool:
    """Exact polynomial equality a == b (raises if either is non-polynomial)."""
    pa, pb = to_polynomial(a), to_polynomial(b)
    if pa is None or pb is None:
        raise ValueError("non-polynomial operand")
    return pa == pb


def is_zero_tree(e: Expr) -> bool:
    return isinstance(e, Const) and e.value.is_zero


# convenience singletons
X = Var("x")
XI = Var("xi")
Y = Var("y")
I_CONST = Const(I_UNIT)
