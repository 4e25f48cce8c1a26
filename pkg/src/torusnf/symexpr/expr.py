"""Coefficient expressions in the frequency variable xi.

Nodes are immutable and interned (hash-consed), so structurally equal
subexpressions are one object.  This keeps repeated differentiation and the
long bracket chains of the normal form from blowing up, and lets evaluation
share work across a DAG.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .smoothstep import bump_derivative


class EvaluationError(ArithmeticError):
    pass


_TABLE: dict[tuple, "Expr"] = {}
_SERIAL = [0]


def _intern(cls, key: tuple, init) -> "Expr":
    node = _TABLE.get(key)
    if node is None:
        node = object.__new__(cls)
        node._key = key
        node._serial = _SERIAL[0]
        _SERIAL[0] += 1
        node._dcache = {}
        node._plan = None
        init(node)
        _TABLE[key] = node
    return node


def table_size() -> int:
    return len(_TABLE)


class Expr:
    """Base class; build nodes with the module-level constructors."""

    __slots__ = ("_key", "_serial", "_dcache", "_plan", "__weakref__")
    children: tuple = ()

    def __hash__(self):
        return self._serial

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        from .printer import to_string

        return f"Expr({to_string(self, max_len=200)})"

    # arithmetic sugar
    def __add__(self, o):
        return add(self, as_expr(o))

    __radd__ = __add__

    def __sub__(self, o):
        return add(self, neg(as_expr(o)))

    def __rsub__(self, o):
        return add(as_expr(o), neg(self))

    def __mul__(self, o):
        return mul(self, as_expr(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return mul(self, power(as_expr(o), -1.0))

    def __rtruediv__(self, o):
        return mul(as_expr(o), power(self, -1.0))

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, float(p))

    @property
    def is_zero(self) -> bool:
        return False

    def depends_on_xi(self) -> bool:
        return any(c.depends_on_xi() for c in self.children)


class Const(Expr):
    __slots__ = ("value",)

    @property
    def is_zero(self):
        return self.value == 0

    def depends_on_xi(self):
        return False

    def _eval(self, vals, xi, ctx):
        return np.full(xi.shape[0], self.value, dtype=complex)


class Xi(Expr):
    __slots__ = ("index",)

    def depends_on_xi(self):
        return True

    def _eval(self, vals, xi, ctx):
        return xi[:, self.index].astype(complex)


class NormPow(Expr):
    """|xi|^p."""

    __slots__ = ("p",)

    def depends_on_xi(self):
        return True

    def _eval(self, vals, xi, ctx):
        if self.p == 1:
            return ctx.norm(xi).astype(complex)
        with np.errstate(divide="ignore"):
            return (ctx.sq(xi) ** (0.5 * self.p)).astype(complex)


class Jap(Expr):
    """<xi>^s = (1 + |xi|^2)^(s/2)."""

    __slots__ = ("s",)

    def depends_on_xi(self):
        return True

    def _eval(self, vals, xi, ctx):
        return ((1.0 + ctx.sq(xi)) ** (0.5 * self.s)).astype(complex)


class Add(Expr):
    __slots__ = ("children",)

    def _eval(self, vals, xi, ctx):
        out = vals[0].copy()
        for v in vals[1:]:
            out += v
        return out


class Mul(Expr):
    __slots__ = ("children",)

    def _eval(self, vals, xi, ctx):
        out = vals[0].copy()
        for v in vals[1:]:
            out *= v
        return out


class Pow(Expr):
    __slots__ = ("children", "p")

    def _eval(self, vals, xi, ctx):
        b = vals[0]
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if float(p).is_integer():
                return b ** int(p) if p >= 0 else 1.0 / b ** int(-p)
            return b ** p


class Bump(Expr):
    """order-th derivative of the bump chi (plateau [-gamma, gamma]) at arg."""

    __slots__ = ("children", "gamma", "order")

    def _eval(self, vals, xi, ctx):
        t = vals[0].real
        return bump_derivative(t, self.gamma, self.order).astype(complex)


class Masked(Expr):
    """``expr`` where lo < |arg| < hi, exactly zero elsewhere.

    Used only around expressions whose exact value (and every derivative)
    vanishes off the band, so differentiating under the mask is exact.
    """

    __slots__ = ("children", "lo", "hi")

    def _eval(self, vals, xi, ctx):
        a = np.abs(vals[1].real)
        keep = (a > self.lo) & (a < self.hi)
        return np.where(keep, vals[0], 0.0 + 0.0j)


# ---------------------------------------------------------------- constructors


def const(c) -> Const:
    c = complex(c)
    if c.imag == 0:
        c = complex(c.real + 0.0, 0.0)  # drop signed zero
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise EvaluationError(f"non-finite constant {c}")

    def init(n):
        n.value = c

    return _intern(Const, ("c", c.real, c.imag), init)


ZERO = const(0)
ONE = const(1)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return const(x)


def xi(i: int) -> Xi:
    def init(n):
        n.index = int(i)

    return _intern(Xi, ("xi", int(i)), init)


def norm_pow(p: float) -> Expr:
    p = float(p)
    if p == 0:
        return ONE

    def init(n):
        n.p = p

    return _intern(NormPow, ("np", p), init)


def norm() -> Expr:
    return norm_pow(1.0)


def jap(s: float) -> Expr:
    s = float(s)
    if s == 0:
        return ONE

    def init(n):
        n.s = s

    return _intern(Jap, ("jap", s), init)


def _split_coef(t: Expr) -> tuple[complex, Expr]:
    if isinstance(t, Const):
        return t.value, ONE
    if isinstance(t, Mul) and isinstance(t.children[0], Const):
        rest = t.children[1:]
        return t.children[0].value, rest[0] if len(rest) == 1 else _mul_node(rest)
    return 1.0, t


def _mul_node(factors: Sequence[Expr]) -> Expr:
    def init(n):
        n.children = tuple(factors)

    return _intern(Mul, ("*",) + tuple(f._serial for f in factors), init)


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    stack = list(terms)
    while stack:
        t = as_expr(stack.pop())
        if isinstance(t, Add):
            stack.extend(t.children)
        elif not t.is_zero:
            flat.append(t)
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    coefs: dict[int, list] = {}
    c0 = 0j
    for t in flat:
        c, rest = _split_coef(t)
        if rest is ONE:
            c0 += c
            continue
        slot = coefs.get(rest._serial)
        if slot is None:
            coefs[rest._serial] = [rest, c]
        else:
            slot[1] += c
    out = []
    for serial in sorted(coefs):
        rest, c = coefs[serial]
        if c == 0:
            continue
        out.append(rest if c == 1 else mul(const(c), rest))
    if c0 != 0:
        out.insert(0, const(c0))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda e: e._serial)

    def init(n):
        n.children = tuple(out)

    return _intern(Add, ("+",) + tuple(t._serial for t in out), init)


def _base_exp(f: Expr):
    if isinstance(f, NormPow):
        return ("norm", f.p)
    if isinstance(f, Jap):
        return ("jap", f.s)
    if isinstance(f, Pow):
        return (f.children[0], f.p)
    return (f, 1.0)


def mul(*factors: Expr) -> Expr:
    coef = 1 + 0j
    flat: list[Expr] = []
    stack = list(factors)
    while stack:
        f = as_expr(stack.pop())
        if isinstance(f, Const):
            coef *= f.value
        elif isinstance(f, Mul):
            stack.extend(f.children)
        else:
            flat.append(f)
    if coef == 0:
        return ZERO
    exps: dict = {}
    bases: dict = {}
    for f in flat:
        b, p = _base_exp(f)
        key = b if isinstance(b, str) else b._serial
        bases[key] = b
        exps[key] = exps.get(key, 0.0) + p
    out: list[Expr] = []
    for key, p in exps.items():
        if abs(p) < 1e-14:
            continue
        b = bases[key]
        if b == "norm":
            out.append(norm_pow(p))
        elif b == "jap":
            out.append(jap(p))
        else:
            r = power(b, p)
            if isinstance(r, Const):
                coef *= r.value
            else:
                out.append(r)
    out.sort(key=lambda e: e._serial)
    if not out:
        return const(coef)
    if coef == 1:
        return out[0] if len(out) == 1 else _mul_node(out)
    return _mul_node([const(coef)] + out)


def neg(e: Expr) -> Expr:
    return mul(const(-1), e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def power(b: Expr, p: float) -> Expr:
    p = float(p)
    b = as_expr(b)
    if p == 0:
        return ONE
    if p == 1:
        return b
    if isinstance(b, Const):
        if b.value == 0 and p < 0:
            raise EvaluationError("zero raised to a negative power")
        return const(b.value ** p)
    if isinstance(b, NormPow):
        return norm_pow(b.p * p)
    if isinstance(b, Jap):
        return jap(b.s * p)
    if isinstance(b, Pow) and float(b.p).is_integer() and p.is_integer():
        return power(b.children[0], b.p * p)
    if isinstance(b, Mul) and p.is_integer():
        return mul(*[power(f, p) for f in b.children])

    def init(n):
        n.children = (b,)
        n.p = p

    return _intern(Pow, ("^", b._serial, p), init)


def bump(arg: Expr, gamma: float, order: int = 0) -> Expr:
    arg = as_expr(arg)
    gamma = float(gamma)
    if gamma <= 0:
        raise ValueError("bump width must be positive")
    if isinstance(arg, Const):
        return const(complex(bump_derivative(arg.value.real, gamma, order)[0]))

    def init(n):
        n.children = (arg,)
        n.gamma = gamma
        n.order = int(order)

    return _intern(Bump, ("chi", arg._serial, gamma, int(order)), init)


def psi(arg: Expr, gamma: float) -> Expr:
    """Radial cutoff: 0 on [-gamma, gamma], 1 for |t| >= 2 gamma."""
    return sub(ONE, bump(arg, gamma))


def masked(e: Expr, arg: Expr, lo: float, hi: float = math.inf) -> Expr:
    e = as_expr(e)
    if e.is_zero:
        return ZERO
    lo, hi = float(lo), float(hi)
    if isinstance(e, Masked) and e.children[1] is arg and e.lo >= lo and e.hi <= hi:
        return e

    def init(n):
        n.children = (e, arg)
        n.lo = lo
        n.hi = hi

    return _intern(Masked, ("mask", e._serial, arg._serial, lo, hi), init)


def linear(k: Sequence[float]) -> Expr:
    """xi . k"""
    return add(*[mul(const(float(c)), xi(i)) for i, c in enumerate(k) if c != 0])


# -------------------------------------------------------------- differentiation


def differentiate(e: Expr, i: int) -> Expr:
    """Structural partial derivative d/dxi_i."""
    cached = e._dcache.get(i)
    if cached is not None:
        return cached
    # iterative post-order so deep DAGs do not hit the recursion limit
    stack = [e]
    while stack:
        node = stack[-1]
        if i in node._dcache:
            stack.pop()
            continue
        pending = [c for c in node.children if i not in c._dcache]
        if pending:
            stack.extend(pending)
            continue
        node._dcache[i] = _diff_node(node, i)
        stack.pop()
    return e._dcache[i]


def _d(c: Expr, i: int) -> Expr:
    return c._dcache[i]


def _diff_node(e: Expr, i: int) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Xi):
        return ONE if e.index == i else ZERO
    if isinstance(e, NormPow):
        return mul(const(e.p), norm_pow(e.p - 2.0), xi(i))
    if isinstance(e, Jap):
        return mul(const(e.s), jap(e.s - 2.0), xi(i))
    if isinstance(e, Add):
        return add(*[_d(c, i) for c in e.children])
    if isinstance(e, Mul):
        terms = []
        cs = e.children
        for j, c in enumerate(cs):
            dc = _d(c, i)
            if dc.is_zero:
                continue
            terms.append(mul(dc, *cs[:j], *cs[j + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        b = e.children[0]
        db = _d(b, i)
        if db.is_zero:
            return ZERO
        return mul(const(e.p), power(b, e.p - 1.0), db)
    if isinstance(e, Bump):
        arg = e.children[0]
        da = _d(arg, i)
        if da.is_zero:
            return ZERO
        # chi' vanishes off the transition band; the mask also removes 0*inf
        # from singular arg derivatives inside the plateau
        return masked(mul(bump(arg, e.gamma, e.order + 1), da), arg, e.gamma, 2.0 * e.gamma)
    if isinstance(e, Masked):
        inner, arg = e.children
        return masked(_d(inner, i), arg, e.lo, e.hi)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def diff_multi(e: Expr, alpha: Sequence[int]) -> Expr:
    """d^alpha / dxi^alpha for a multi-index alpha."""
    for i, n in enumerate(alpha):
        for _ in range(n):
            e = differentiate(e, i)
            if e.is_zero:
                return e
    return e


# ------------------------------------------------------------------ evaluation


class _Ctx:
    __slots__ = ("_sq",)

    def __init__(self):
        self._sq = None

    def sq(self, xi):
        if self._sq is None:
            self._sq = np.sum(xi * xi, axis=1)
        return self._sq

    def norm(self, xi):
        return np.sqrt(self.sq(xi))


class Plan:
    """Topological schedule for evaluating several roots with shared work."""

    def __init__(self, roots: Sequence[Expr]):
        order: list[Expr] = []
        seen: set[int] = set()
        for r in roots:
            stack = [(r, False)]
            while stack:
                node, done = stack.pop()
                if done:
                    order.append(node)
                    continue
                if node._serial in seen:
                    continue
                seen.add(node._serial)
                stack.append((node, True))
                for c in node.children:
                    if c._serial not in seen:
                        stack.append((c, False))
        pos = {n._serial: j for j, n in enumerate(order)}
        self.order = order
        self.args = [tuple(pos[c._serial] for c in n.children) for n in order]
        last = list(range(len(order)))
        for j, a in enumerate(self.args):
            for p in a:
                last[p] = max(last[p], j)
        keep = {pos[r._serial] for r in roots}
        frees: list[list[int]] = [[] for _ in order]
        for p, j in enumerate(last):
            if p not in keep:
                frees[j].append(p)
        self.frees = frees
        self.roots = [pos[r._serial] for r in roots]

    def run(self, xi: np.ndarray) -> list[np.ndarray]:
        ctx = _Ctx()
        vals: list = [None] * len(self.order)
        with np.errstate(all="ignore"):
            for j, node in enumerate(self.order):
                vals[j] = node._eval([vals[p] for p in self.args[j]], xi, ctx)
                for p in self.frees[j]:
                    vals[p] = None
        return [vals[r] for r in self.roots]


def _as_points(x, d: int | None):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got {arr.shape[1]}")
    return arr, scalar


def max_xi_index(e: Expr) -> int:
    """Largest xi component index referenced (-1 if none)."""
    best = -1
    for n in Plan([e]).order:
        if isinstance(n, Xi):
            best = max(best, n.index)
    return best


def evaluate_many(roots: Sequence[Expr], points, d: int | None = None, check: bool = True):
    """Evaluate several expressions at the same points, sharing common subtrees."""
    pts, scalar = _as_points(points, d)
    roots = [as_expr(r) for r in roots]
    plan = Plan(roots)
    out = plan.run(pts)
    if check:
        for v in out:
            if not np.all(np.isfinite(v)):
                raise EvaluationError("expression evaluated to a non-finite value")
    if scalar:
        return [complex(v[0]) for v in out]
    return out


def evaluate(e: Expr, points, d: int | None = None):
    """Value of ``e`` at one point (shape (d,)) or many points (shape (N, d))."""
    e = as_expr(e)
    pts, scalar = _as_points(points, d)
    if max_xi_index(e) >= pts.shape[1]:
        raise ValueError("expression references a xi component beyond the point dimension")
    if e._plan is None:
        e._plan = Plan([e])
    (v,) = e._plan.run(pts)
    if not np.all(np.isfinite(v)):
        raise EvaluationError("expression evaluated to a non-finite value")
    return complex(v[0]) if scalar else v


def node_count(roots: Iterable[Expr]) -> int:
    return len(Plan(list(roots)).order)


def substitute_shift(e: Expr, kappa: Sequence[float]) -> Expr:
    """The expression with xi replaced by xi - kappa."""
    kappa = [float(k) for k in kappa]
    shifted_sq = add(*[power(add(xi(i), const(-k)), 2.0) for i, k in enumerate(kappa)])
    memo: dict[int, Expr] = {}
    for node in Plan([e]).order:
        memo[node._serial] = _rebuild_shift(node, [memo[c._serial] for c in node.children], kappa, shifted_sq)
    return memo[e._serial]


def _rebuild_shift(node, kids, kappa, sq):
    if isinstance(node, Const):
        return node
    if isinstance(node, Xi):
        return add(node, const(-kappa[node.index]))
    if isinstance(node, NormPow):
        return power(sq, node.p / 2.0)
    if isinstance(node, Jap):
        return power(add(ONE, sq), node.s / 2.0)
    if isinstance(node, Add):
        return add(*kids)
    if isinstance(node, Mul):
        return mul(*kids)
    if isinstance(node, Pow):
        return power(kids[0], node.p)
    if isinstance(node, Bump):
        return bump(kids[0], node.gamma, node.order)
    if isinstance(node, Masked):
        return masked(kids[0], kids[1], node.lo, node.hi)
    raise TypeError(type(node).__name__)
