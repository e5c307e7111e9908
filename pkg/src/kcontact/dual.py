"""Forward-mode automatic differentiation on dual numbers.

A :class:`Dual` carries a value and a tuple of partial derivatives with
respect to the seed variables of one differentiation pass.  Passes can be
nested (dual-over-dual), which is how exact Hessians and derivatives of
derivative-defined quantities (projected fields, section coefficients)
are obtained.  Each pass gets a fresh *level* tag; an operation between
duals of different levels treats the lower level as a constant, which
avoids perturbation confusion when passes nest.

User-supplied callables stay differentiable as long as they use ordinary
scalar arithmetic and the math helpers exported here (``exp``, ``log``,
``sqrt``, ...) instead of the ``math``/``numpy`` versions.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "Dual",
    "value",
    "derive1",
    "jacobian",
    "derive2",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "tanh",
    "fabs",
    "sign",
]

_LEVELS = itertools.count(1)


class Dual:
    """Truncated first-order Taylor number: value ``a`` plus partials ``b``.

    ``b`` is a tuple with one entry per seed variable of the pass the dual
    belongs to; the entries are themselves numbers (floats, or duals of an
    enclosing pass when nested).
    """

    __slots__ = ("a", "b", "lev")
    __array_ufunc__ = None  # keep numpy from absorbing us into object arrays

    def __init__(self, a, b, lev):
        self.a = a
        self.b = b
        self.lev = lev

    # -- helpers -----------------------------------------------------------

    def _split(self, other):
        """Return (value-part, partials-part) of `other` as seen from self's level."""
        if isinstance(other, Dual):
            if other.lev == self.lev:
                return other.a, other.b
            if other.lev > self.lev:
                return NotImplemented, None
        return other, None

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return _bcast(lambda x: self + x, other)
        oa, ob = self._split(other)
        if oa is NotImplemented:
            return other.__radd__(self)
        if ob is None:
            return Dual(self.a + oa, self.b, self.lev)
        return Dual(self.a + oa, tuple(x + y for x, y in zip(self.b, ob)), self.lev)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.a, tuple(-x for x in self.b), self.lev)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return _bcast(lambda x: self * x, other)
        oa, ob = self._split(other)
        if oa is NotImplemented:
            return other.__rmul__(self)
        if ob is None:
            return Dual(self.a * oa, tuple(x * oa for x in self.b), self.lev)
        return Dual(
            self.a * oa,
            tuple(x * oa + self.a * y for x, y in zip(self.b, ob)),
            self.lev,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return _bcast(lambda x: self / x, other)
        oa, ob = self._split(other)
        if oa is NotImplemented:
            return other.__rtruediv__(self)
        if ob is None:
            return Dual(self.a / oa, tuple(x / oa for x in self.b), self.lev)
        inv = 1.0 / oa
        av = self.a * inv
        return Dual(av, tuple((x - av * y) * inv for x, y in zip(self.b, ob)), self.lev)

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return _bcast(lambda x: x / self, other)
        inv_a = 1.0 / self.a
        av = other * inv_a
        return Dual(av, tuple(-av * inv_a * x for x in self.b), self.lev)

    def __pow__(self, n):
        if isinstance(n, Dual):
            return exp(log(self) * n)
        if n == 0:
            return Dual(1.0, tuple(0.0 * x for x in self.b), self.lev)
        if n == 1:
            return self
        if n == 2:
            return self * self
        c = n * self.a ** (n - 1)
        return Dual(self.a ** n, tuple(c * x for x in self.b), self.lev)

    def __rpow__(self, base):
        return exp(self * math.log(base))

    # -- comparisons look at values only -----------------------------------

    def __lt__(self, other):
        return value(self) < value(other)

    def __le__(self, other):
        return value(self) <= value(other)

    def __gt__(self, other):
        return value(self) > value(other)

    def __ge__(self, other):
        return value(self) >= value(other)

    def __abs__(self):
        s = 1.0 if value(self) >= 0.0 else -1.0
        return self * s

    def __float__(self):
        return float(value(self))

    def __repr__(self):
        return f"Dual({self.a!r}, {self.b!r}, lev={self.lev})"

    def _chain(self, fa, dfa):
        return Dual(fa, tuple(dfa * x for x in self.b), self.lev)


def _bcast(fn, arr):
    out = np.empty(arr.shape, dtype=object)
    flat = arr.reshape(-1)
    res = out.reshape(-1)
    for i in range(flat.size):
        res[i] = fn(flat[i])
    return out


def value(x):
    """Strip all dual layers off `x` and return the underlying float."""
    while isinstance(x, Dual):
        x = x.a
    return float(x)


# -- math helpers that dispatch on Dual ------------------------------------

def exp(x):
    if isinstance(x, Dual):
        inner = exp(x.a)
        return x._chain(inner, inner)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return x._chain(log(x.a), 1.0 / x.a)
    return math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        inner = sqrt(x.a)
        return x._chain(inner, 0.5 / inner)
    return math.sqrt(x)


def sin(x):
    if isinstance(x, Dual):
        return x._chain(sin(x.a), cos(x.a))
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return x._chain(cos(x.a), -sin(x.a))
    return math.cos(x)


def tanh(x):
    if isinstance(x, Dual):
        t = tanh(x.a)
        return x._chain(t, 1.0 - t * t)
    return math.tanh(x)


def fabs(x):
    if isinstance(x, Dual):
        return abs(x)
    return abs(x)


def sign(x):
    v = value(x) if isinstance(x, Dual) else x
    return 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)


# -- differentiation drivers ------------------------------------------------

def _seed(xs, lev):
    m = len(xs)
    return [Dual(xs[j], tuple(1.0 if i == j else 0.0 for i in range(m)), lev) for j in range(m)]


def _parts(out, m, lev):
    if isinstance(out, Dual) and out.lev == lev:
        return out.a, list(out.b)
    return out, [0.0] * m


def derive1(f, xs):
    """Value and gradient of scalar ``f`` at ``xs`` (a sequence of numbers).

    Entries of ``xs`` may themselves be duals of an enclosing pass, in
    which case the returned value/gradient entries are duals too.
    """
    lev = next(_LEVELS)
    out = f(_seed(xs, lev))
    return _parts(out, len(xs), lev)


def jacobian(f, xs):
    """Values and Jacobian rows of vector-valued ``f`` at ``xs``.

    Returns ``(vals, rows)`` with ``rows[i][j] = d f_i / d x_j``.
    """
    lev = next(_LEVELS)
    outs = f(_seed(xs, lev))
    m = len(xs)
    vals, rows = [], []
    for o in outs:
        v, r = _parts(o, m, lev)
        vals.append(v)
        rows.append(r)
    return vals, rows


def derive2(f, xs):
    """Value, gradient, and Hessian of scalar ``f`` at ``xs`` via nested passes."""
    m = len(xs)

    def grad_vec(ys):
        _, g = derive1(f, ys)
        return g

    vals, rows = jacobian(grad_vec, xs)
    val, grad = derive1(f, xs)  # cheap second pass keeps the code simple
    hess = [[rows[i][j] for j in range(m)] for i in range(m)]
    return val, grad, hess
