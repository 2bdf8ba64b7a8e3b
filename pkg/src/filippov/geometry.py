"""Gradients, projections and local charts for ``Sigma`` and ``T``.

Gradients of ``H`` and ``V`` are taken with first-order jets in a spatial
direction (forward-mode differentiation of the model code), which is exact to
rounding. Central finite differences remain available through
:func:`fd_gradient` and serve as the fallback where a jet evaluation is
undefined (``|x2|`` at ``x2 = 0`` in the Fuller surface).
"""

import numpy as np

from .errors import JetError, NotOnSurfaceError
from .jets import Jet, constant_part

FD_STEP = np.cbrt(np.finfo(float).eps)
RANK_TOL = 1e-8


def fd_gradient(fun, x, h=None):
    """Central-difference gradient with step ``cbrt(eps) * max(1, |x|)``."""
    x = np.asarray(x, dtype=float)
    h = FD_STEP * max(1.0, float(np.linalg.norm(x))) if h is None else h
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def directional(fun_generic, x, w):
    """``d/de fun(x + e w)`` at ``e = 0`` for a jet-evaluable scalar function."""
    lifted = [Jet([float(xi), float(wi)]) for xi, wi in zip(x, w)]
    val = fun_generic(lifted)
    if isinstance(val, Jet):
        return constant_part(val.c[1])
    return 0.0


def jet_gradient(fun_generic, x):
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)
    return np.array([directional(fun_generic, x, eye[i]) for i in range(x.size)])


def grad_H(sys, x):
    p = sys.params
    try:
        return jet_gradient(lambda s: sys.H_raw(s, p), x)
    except JetError:
        return fd_gradient(sys.H, x)


def grad_V(sys, x):
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)
    try:
        return np.array([sys.grad_V_dot(x, eye[i]) for i in range(x.size)])
    except JetError:
        return fd_gradient(sys.V, x)


def constraint_matrix(sys, x):
    """Rows ``grad H`` and ``grad V`` (the derivative of ``eta = (H, V)``)."""
    return np.vstack([grad_H(sys, x), grad_V(sys, x)])


def rank_ok(sys, x, tol=RANK_TOL):
    """Whether ``[grad H, grad V]`` has two singular values ``>= tol``."""
    sv = np.linalg.svd(constraint_matrix(sys, x), compute_uv=False)
    return bool(sv.size >= 2 and sv[1] >= tol), sv


def tangent_basis(rows):
    """Orthonormal basis (as columns) of the null space of ``rows``."""
    rows = np.atleast_2d(rows)
    _, _, vt = np.linalg.svd(rows)
    return vt[rows.shape[0]:].T.copy()


def project_sigma(sys, x, tol=1e-14, max_iter=20):
    """Newton projection of ``x`` onto ``H = 0`` along ``grad H``."""
    x = np.asarray(x, dtype=float).copy()
    for _ in range(max_iter):
        h = sys.H(x)
        if abs(h) <= tol * (1.0 + np.linalg.norm(x)):
            return x
        g = grad_H(sys, x)
        gg = float(g @ g)
        if gg == 0.0:
            break
        x = x - h * g / gg
    if abs(sys.H(x)) > 1e-10 * (1.0 + np.linalg.norm(x)):
        raise NotOnSurfaceError("projection onto the switching surface did not converge")
    return x


def project_T(sys, x, tol=1e-14, max_iter=30):
    """Minimum-norm Newton projection onto ``T = {H = 0, V = 0}``."""
    x = np.asarray(x, dtype=float).copy()
    for _ in range(max_iter):
        r = np.array([sys.H(x), sys.V(x)])
        if np.max(np.abs(r)) <= tol * (1.0 + np.linalg.norm(x)):
            return x
        J = constraint_matrix(sys, x)
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        x = x + dx
        if not np.all(np.isfinite(x)):
            break
    r = np.array([sys.H(x), sys.V(x)]) if np.all(np.isfinite(x)) else np.array([np.inf])
    if np.max(np.abs(r)) > 1e-10 * (1.0 + np.linalg.norm(x)):
        raise NotOnSurfaceError("projection onto the tangency surface did not converge")
    return x


def on_sigma(sys, x, tol=1e-9):
    return abs(sys.H(x)) <= tol * (1.0 + np.linalg.norm(x))


def on_T(sys, x, tol=1e-9):
    s = tol * (1.0 + np.linalg.norm(x))
    return abs(sys.H(x)) <= s and abs(sys.V(x)) <= s
