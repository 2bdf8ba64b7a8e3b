"""Truncated univariate Taylor arithmetic and the Lie-derivative engine.

A :class:`Jet` stores normalised Taylor coefficients ``c[m] = u^(m)(0) / m!`` of a
scalar function of time. Propagating a state of jets through a vector field
with the Picard recurrence gives the Taylor expansion of the flow, and
evaluating a scalar function ``H`` on that expansion yields every Lie
derivative of ``H`` in one pass::

    H(phi_t(x)) = sum_m  L_f^m H(x) * t^m / m!

Coefficients may themselves be jets, which is how exact first-order
directional derivatives of Lie derivatives are obtained
(:func:`directional_lie`).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, JetError
from . import fmath

DEFAULT_ORDER = 4


def constant_part(x):
    """Innermost constant coefficient of a (possibly nested) jet, as a float."""
    while isinstance(x, Jet):
        x = x.c[0]
    return float(x)


def _all_finite(x):
    if isinstance(x, Jet):
        return all(_all_finite(c) for c in x.c)
    return math.isfinite(x)


class Jet:
    """Truncated Taylor polynomial in one variable.

    Parameters
    ----------
    coeffs : sequence
        Normalised coefficients ``c_0 .. c_K``. Entries are floats or, for
        nested use, jets of a second variable.
    """

    __slots__ = ("c",)
    # make numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, coeffs):
        self.c = list(coeffs)
        if not self.c:
            raise JetError("a jet needs at least one coefficient")

    @classmethod
    def constant(cls, value, order):
        return cls([value] + [0.0] * order)

    @classmethod
    def variable(cls, value, order):
        """Jet of ``t -> value + t``."""
        if order == 0:
            return cls([value])
        return cls([value, 1.0] + [0.0] * (order - 1))

    @property
    def order(self):
        return len(self.c) - 1

    @property
    def coeffs(self):
        return tuple(self.c)

    def derivatives(self):
        """Plain derivatives ``u^(m)(0) = m! c_m``."""
        return [math.factorial(m) * c for m, c in enumerate(self.c)]

    def __repr__(self):
        return f"Jet({self.c!r})"

    def _lift(self, other):
        if isinstance(other, Jet):
            if len(other.c) != len(self.c):
                raise JetError(f"jet orders differ: {self.order} vs {other.order}")
            return other
        return Jet.constant(other, self.order)

    # -- ring operations ---------------------------------------------------

    def __pos__(self):
        return self

    def __neg__(self):
        return Jet([-c for c in self.c])

    def __add__(self, other):
        if isinstance(other, Jet):
            other = self._lift(other)
            return Jet([a + b for a, b in zip(self.c, other.c)])
        out = list(self.c)
        out[0] = out[0] + other
        return Jet(out)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            other = self._lift(other)
            return Jet([a - b for a, b in zip(self.c, other.c)])
        out = list(self.c)
        out[0] = out[0] - other
        return Jet(out)

    def __rsub__(self, other):
        out = [-c for c in self.c]
        out[0] = other + out[0]
        return Jet(out)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet([c * other for c in self.c])
        b = self._lift(other).c
        a = self.c
        n = len(a)
        return Jet([sum((a[j] * b[k - j] for j in range(1, k + 1)), a[0] * b[k]) for k in range(n)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet([c / other for c in self.c])
        b = self._lift(other).c
        if constant_part(b[0]) == 0.0:
            raise JetError("division by a jet with zero constant term")
        a = self.c
        q = []
        for k in range(len(a)):
            acc = a[k]
            for j in range(1, k + 1):
                acc = acc - b[j] * q[k - j]
            q.append(acc / b[0])
        return Jet(q)

    def __rtruediv__(self, other):
        return Jet.constant(other, self.order) / self

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            return (exponent * self.log()).exp()
        if float(exponent).is_integer():
            n = int(exponent)
            if n < 0:
                return 1.0 / (self ** (-n))
            result = Jet.constant(1.0, self.order)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        return (self.log() * exponent).exp()

    def __rpow__(self, base):
        return (self * fmath.log(base)).exp()

    # -- elementary functions ----------------------------------------------

    def _sincos(self):
        u = self.c
        s = [fmath.sin(u[0])]
        c = [fmath.cos(u[0])]
        for k in range(1, len(u)):
            sk = 0.0
            ck = 0.0
            for j in range(1, k + 1):
                sk = sk + j * u[j] * c[k - j]
                ck = ck - j * u[j] * s[k - j]
            s.append(sk / k)
            c.append(ck / k)
        return Jet(s), Jet(c)

    def sin(self):
        return self._sincos()[0]

    def cos(self):
        return self._sincos()[1]

    def exp(self):
        u = self.c
        e = [fmath.exp(u[0])]
        for k in range(1, len(u)):
            acc = 0.0
            for j in range(1, k + 1):
                acc = acc + j * u[j] * e[k - j]
            e.append(acc / k)
        return Jet(e)

    def log(self):
        u = self.c
        if constant_part(u[0]) <= 0.0:
            raise JetError("log of a jet with non-positive constant term")
        out = [fmath.log(u[0])]
        for k in range(1, len(u)):
            acc = 0.0
            for j in range(1, k):
                acc = acc + j * out[j] * u[k - j]
            out.append((u[k] - acc / k) / u[0])
        return Jet(out)

    def sqrt(self):
        u = self.c
        if constant_part(u[0]) <= 0.0:
            raise JetError("sqrt of a jet needs a positive constant term")
        r = [fmath.sqrt(u[0])]
        for k in range(1, len(u)):
            acc = u[k]
            for j in range(1, k):
                acc = acc - r[j] * r[k - j]
            r.append(acc / (2.0 * r[0]))
        return Jet(r)

    def absval(self):
        s = constant_part(self.c[0])
        if s > 0.0:
            return self
        if s < 0.0:
            return -self
        raise JetError("|u| is not differentiable where the constant term vanishes")


@dataclass
class FlowJet:
    """Taylor expansion in time of the flow through ``base``."""

    state: list
    base: np.ndarray

    @property
    def order(self):
        return self.state[0].order

    def coefficients(self):
        """Array ``(order + 1, n)`` of normalised coefficients (float base points only)."""
        return np.array([[constant_part(c) for c in xi.c] for xi in self.state]).T


def _coefficient(value, m):
    if isinstance(value, Jet):
        return value.c[m]
    return value if m == 0 else 0.0


def flow_jet(f, x, order=DEFAULT_ORDER):
    """Expand the flow of ``xdot = f(x)`` from ``x`` to the given order.

    ``f`` maps a list of jets to a sequence of jets or scalars. The returned
    jets satisfy ``x_{m+1} = [f(x)]_m / (m + 1)`` for every ``m < order``.

    Raises
    ------
    EvaluationError
        When a coefficient of the field is not finite; ``coordinate`` names the
        offending component.
    """
    if order < 1:
        raise ValueError("flow_jet needs order >= 1")
    state = [Jet([xi] + [0.0] * order) for xi in x]
    for m in range(order):
        values = f(state)
        new = []
        for i, v in enumerate(values):
            cm = _coefficient(v, m)
            if not _all_finite(cm):
                raise EvaluationError(f"non-finite value in component {i} of the vector field", coordinate=i)
            new.append(cm / (m + 1))
        for i, cm in enumerate(new):
            state[i].c[m + 1] = cm
    base = np.array([constant_part(xi) for xi in x], dtype=float)
    return FlowJet(state, base)


def lie_series(f, H, x, max_m=3, order=None):
    """Lie derivatives ``[L^0 H, ..., L^max_m H]`` of ``H`` along ``f`` at ``x``."""
    order = max(order or DEFAULT_ORDER, max_m)
    fj = flow_jet(f, x, order)
    h = H(fj.state)
    out = np.empty(max_m + 1)
    for m in range(max_m + 1):
        cm = _coefficient(h, m)
        if not _all_finite(cm):
            raise EvaluationError("non-finite value of the surface function")
        out[m] = math.factorial(m) * constant_part(cm)
    return out


def directional_lie(f, H, x, w):
    """Exact ``grad(L_f H)(x) . w`` using jets whose coefficients are jets.

    The base point is lifted to ``x + eps w`` with first-order jets in
    ``eps``; the time expansion of ``H`` along ``f`` then carries the
    ``eps``-derivative of every Lie derivative.
    """
    base = [Jet([float(xi), float(wi)]) for xi, wi in zip(x, w)]
    fj = flow_jet(f, base, 1)
    h = H(fj.state)
    first = _coefficient(h, 1)
    if isinstance(first, Jet):
        return float(first.c[1])
    return 0.0
