"""Sliding vector fields built from convex combinations of ``f^L`` and ``f^R``."""

import numpy as np

from .errors import DegeneracyError, NotOnSurfaceError, RegionError
from .geometry import on_T
from .surface import RegionKind, classify_point
from .system import Side

DEGENERACY_RTOL = 1e-12


def convex_field(sys, x, s):
    """``(1 - s) f^L(x) + s f^R(x)``."""
    return (1.0 - s) * sys.fL(x) + s * sys.fR(x)


def _combine(sys, x, a, b, what):
    den = a - b
    scale = max(abs(a), abs(b))
    if den == 0.0 or abs(den) <= DEGENERACY_RTOL * scale:
        raise DegeneracyError(f"{what}: the two Lie derivatives coincide ({a!r} vs {b!r})")
    s = a / den
    fL = sys.fL(x)
    fR = sys.fR(x)
    return (fR * a - fL * b) / den, s


def sliding_field(sys, x):
    """Sliding vector field ``f^S`` and its convex weight ``s``.

    Raises
    ------
    DegeneracyError
        ``L_{f^L} H = L_{f^R} H`` at ``x`` (to relative ``1e-12``).
    """
    x = np.asarray(x, dtype=float)
    a = sys.lie(Side.L, x, 1)[1]
    b = sys.lie(Side.R, x, 1)[1]
    return _combine(sys, x, a, b, "sliding field")


def second_order_sliding_field(sys, x, tol=1e-9, check=True):
    """Second-order sliding vector field ``f^T`` and its convex weight ``s``.

    Raises
    ------
    NotOnSurfaceError
        ``x`` is not on ``T`` (when ``check``).
    DegeneracyError
        The second Lie derivatives coincide.
    """
    x = np.asarray(x, dtype=float)
    if check and not on_T(sys, x, tol):
        raise NotOnSurfaceError("second-order sliding needs a point of the tangency surface")
    a = sys.lie(Side.L, x, 2)[2]
    b = sys.lie(Side.R, x, 2)[2]
    return _combine(sys, x, a, b, "second-order sliding field")


def d_eta(sys, x, v):
    """``(grad H . v, grad V . v)``, both exact."""
    from .geometry import directional

    p = sys.params
    dh = directional(lambda s: sys.H_raw(s, p), x, v)
    return np.array([dh, sys.grad_V_dot(x, v)])


def tangential_field_carvalho(sys, x, tol=1e-9):
    """Tangential sliding field for ``eta = (H, V)``.

    ``lambda* = (|d eta f^R| - |d eta f^L|) / (|d eta f^R| + |d eta f^L|)``
    and ``f^tan = (1 - lambda*)/2 f^R + (1 + lambda*)/2 f^L``.
    """
    x = np.asarray(x, dtype=float)
    if not on_T(sys, x, tol):
        raise NotOnSurfaceError("the tangential sliding field is defined on the tangency surface")
    fL = sys.fL(x)
    fR = sys.fR(x)
    nL = float(np.linalg.norm(d_eta(sys, x, fL)))
    nR = float(np.linalg.norm(d_eta(sys, x, fR)))
    if nL + nR == 0.0:
        raise DegeneracyError("both fields are tangent to T to second order")
    lam = (nR - nL) / (nR + nL)
    return 0.5 * (1.0 - lam) * fR + 0.5 * (1.0 + lam) * fL


def beta_from_lie(aL, aR):
    return 2.0 * (1.0 / aL - 1.0 / aR)


def beta(sys, x, tol=None):
    """``beta = 2 (1/L^2_L H - 1/L^2_R H)``, the leading return-time coefficient.

    Raises
    ------
    RegionError
        ``x`` is not in an invisible-invisible region.
    """
    c = classify_point(sys, x, tol)
    if c.region is not RegionKind.INVINV:
        raise RegionError(f"beta needs an invisible-invisible point, got {c.region}")
    return beta_from_lie(c.lieL[2], c.lieR[2])
