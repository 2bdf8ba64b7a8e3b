"""Elementary functions usable by model code on floats, jets and inside numba.

Model vector fields are written once against these helpers. On plain floats
they defer to :mod:`math`; on :class:`~filippov.jets.Jet` objects they call the
jet's own truncated-Taylor implementation; inside numba-compiled kernels the
overloads registered below compile them to the corresponding ``math`` call.
"""

import math

from ._jit import HAVE_NUMBA


def cos(x):
    try:
        return math.cos(x)
    except TypeError:
        return x.cos()


def sin(x):
    try:
        return math.sin(x)
    except TypeError:
        return x.sin()


def exp(x):
    try:
        return math.exp(x)
    except TypeError:
        return x.exp()


def log(x):
    try:
        return math.log(x)
    except TypeError:
        return x.log()


def sqrt(x):
    try:
        return math.sqrt(x)
    except TypeError:
        return x.sqrt()


def absval(x):
    """``|x|``; on jets this branches on the sign of the constant term."""
    try:
        return abs(float(x))
    except TypeError:
        return x.absval()


if HAVE_NUMBA:
    from numba import types
    from numba.extending import overload

    def _scalar(x):
        return isinstance(x, (types.Float, types.Integer))

    @overload(cos)
    def _ol_cos(x):
        if _scalar(x):
            return lambda x: math.cos(x)

    @overload(sin)
    def _ol_sin(x):
        if _scalar(x):
            return lambda x: math.sin(x)

    @overload(exp)
    def _ol_exp(x):
        if _scalar(x):
            return lambda x: math.exp(x)

    @overload(log)
    def _ol_log(x):
        if _scalar(x):
            return lambda x: math.log(x)

    @overload(sqrt)
    def _ol_sqrt(x):
        if _scalar(x):
            return lambda x: math.sqrt(x)

    @overload(absval)
    def _ol_absval(x):
        if _scalar(x):
            return lambda x: abs(x)
