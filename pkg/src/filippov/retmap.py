"""Return maps around invisible-invisible tangency regions.

For a point ``x`` of ``Sigma`` with ``V(x) = nu > 0`` the orbit of ``f^R``
comes back to ``Sigma`` at ``P_R(x)`` after time ``tau_R``; from there the orbit
of ``f^L`` returns at ``P(x) = P_L(P_R(x))``. For small ``nu`` these maps have
the expansions

    tau      = beta nu + O(nu^2),
    P(x)     = x + beta f^T(x) nu + O(nu^2),
    V(P(x))  = nu + (2/3) Lambda(x) nu^2 + O(nu^3),

which :func:`fit_asymptotics` checks by regression over a geometric grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, NoReturnError, NotOnSurfaceError, RegionError
from .geometry import constraint_matrix
from .integrate import IntegrateOptions, flow_piece
from . import _kernels as K
from .sliding import beta_from_lie, second_order_sliding_field
from .surface import lambda_from_lie
from .system import Side

RETURN_OPTS = IntegrateOptions(rtol=1e-12, atol=1e-15, h0=1e-3)
SKIP_FACTOR = 1e-3


def sigma_point(sys, y, nu, tol=1e-15, max_iter=30):
    """Point ``x`` near ``y`` with ``H(x) = 0`` and ``V(x) = nu`` (minimum-norm Newton)."""
    x = np.asarray(y, dtype=float).copy()
    for _ in range(max_iter):
        r = np.array([sys.H(x), sys.V(x) - nu])
        if np.max(np.abs(r)) <= tol * max(1.0, abs(nu), float(np.linalg.norm(x))) * 1e-0:
            break
        J = constraint_matrix(sys, x)
        x = x + np.linalg.lstsq(J, -r, rcond=None)[0]
    r = np.array([sys.H(x), sys.V(x) - nu])
    if np.max(np.abs(r)) > 1e-12 * (1.0 + np.linalg.norm(x)):
        raise NotOnSurfaceError("could not place a point with the requested V on the switching surface")
    return x


def half_return(sys, side, x, t_max=None, opts=None):
    """Next intersection with ``Sigma`` of the ``f^side`` orbit of ``x``.

    The trivial root at ``t = 0`` is skipped by ignoring ``t <= 1e-3 nu |beta|``.

    Returns
    -------
    point : ndarray
    time : float

    Raises
    ------
    RegionError
        ``V(x)`` has the wrong sign for ``side`` (``R`` needs ``V > 0``,
        ``L`` needs ``V < 0``).
    NoReturnError
        No return within ``t_max``.
    """
    side = Side(side)
    opts = opts or RETURN_OPTS
    x = np.asarray(x, dtype=float)
    lieL = sys.lie(Side.L, x, 2)
    lieR = sys.lie(Side.R, x, 2)
    nu = lieL[1] if side is Side.L else lieR[1]
    if side is Side.R and not nu > 0.0:
        raise RegionError("the right half-map needs V(x) > 0")
    if side is Side.L and not nu < 0.0:
        raise RegionError("the left half-map needs V(x) < 0")
    own = (lieL if side is Side.L else lieR)[2]
    b = beta_from_lie(lieL[2], lieR[2])
    skip = SKIP_FACTOR * abs(nu) * abs(b) if math.isfinite(b) else 0.0
    expected = 2.0 * abs(nu) / abs(own) if own != 0.0 else 1.0
    if t_max is None:
        t_max = max(100.0 * expected, 1.0)
    h0 = min(opts.h0, 0.05 * expected)
    status, t, y, _, _, _ = flow_piece(sys, side, x, 0.0, t_max, opts, h0=h0, t_arm=skip, record=False)
    if status != K.EVENT:
        raise NoReturnError(f"{side.value} orbit did not return to the switching surface (status {status})")
    return y, t


@dataclass
class ReturnMapSample:
    x: np.ndarray
    nu: float
    PR: np.ndarray
    tauR: float
    P: np.ndarray
    tauL: float
    V_return: float

    @property
    def tau(self):
        return self.tauR + self.tauL

    def to_dict(self):
        return {
            "x": [float(v) for v in self.x], "nu": float(self.nu), "PR": [float(v) for v in self.PR],
            "tauR": float(self.tauR), "P": [float(v) for v in self.P], "tauL": float(self.tauL),
            "tau": float(self.tau), "V_return": float(self.V_return),
        }


def full_return(sys, x, opts=None):
    """One revolution ``P = P_L o P_R`` from ``x`` (``V(x) > 0``)."""
    x = np.asarray(x, dtype=float)
    nu = sys.V(x)
    PR, tR = half_return(sys, Side.R, x, opts=opts)
    P, tL = half_return(sys, Side.L, PR, opts=opts)
    return ReturnMapSample(x.copy(), nu, PR, tR, P, tL, sys.V(P))


def default_grid(start=1e-2, n=8, ratio=0.5):
    return start * ratio ** np.arange(n)


@dataclass
class AsymptoticFit:
    base: np.ndarray
    nus: np.ndarray
    samples: list
    beta_hat: float
    c_hat: float
    beta_pred: float
    c_pred: float
    lam: float
    tau_ratios: list = field(default_factory=list)
    P_ratios: list = field(default_factory=list)
    dropped: list = field(default_factory=list)

    @property
    def beta_rel_dev(self):
        return abs(self.beta_hat - self.beta_pred) / abs(self.beta_pred)

    @property
    def c_rel_dev(self):
        return abs(self.c_hat - self.c_pred) / abs(self.c_pred) if self.c_pred != 0 else math.inf

    def to_dict(self):
        return {
            "base": [float(v) for v in self.base],
            "nus": [float(v) for v in self.nus],
            "samples": [s.to_dict() for s in self.samples],
            "beta_hat": float(self.beta_hat),
            "beta_pred": float(self.beta_pred),
            "c_hat": float(self.c_hat),
            "c_pred": float(self.c_pred),
            "lambda": float(self.lam),
            "tau_residual_ratios": [float(r) for r in self.tau_ratios],
            "P_residual_ratios": [float(r) for r in self.P_ratios],
            "dropped": [float(v) for v in self.dropped],
        }


def _linear_intercept(u, y):
    A = np.vstack([np.ones_like(u), u]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def first_order_prediction(sys, x, nu):
    """``(beta nu, x + beta f^T nu)`` evaluated at ``x`` itself."""
    lieL = sys.lie(Side.L, x, 2)
    lieR = sys.lie(Side.R, x, 2)
    b = beta_from_lie(lieL[2], lieR[2])
    fT, _ = second_order_sliding_field(sys, x, check=False)
    return b * nu, x + b * fT * nu


def fit_asymptotics(sys, base, nus=None, n_fit=4, opts=None):
    """Fit the leading coefficients of ``tau`` and ``V(P) - nu`` near ``base``.

    Parameters
    ----------
    sys : PiecewiseSystem
    base : array_like
        Point of an invisible-invisible region of ``T``.
    nus : array_like, optional
        ``nu`` grid; default geometric, ratio 1/2, 8 points from ``1e-2``.
    n_fit : int
        Number of smallest surviving grid points used in the fits.

    Raises
    ------
    InsufficientDataError
        Fewer than three grid points returned.
    """
    base = np.asarray(base, dtype=float)
    nus = default_grid() if nus is None else np.sort(np.asarray(nus, dtype=float))[::-1]
    lieL = sys.lie(Side.L, base, 3)
    lieR = sys.lie(Side.R, base, 3)
    if not (lieL[2] > 0.0 > lieR[2]):
        raise RegionError("the return-map expansion needs an invisible-invisible base point")
    beta_pred = beta_from_lie(lieL[2], lieR[2])
    lam = lambda_from_lie(lieL, lieR)
    samples, dropped = [], []
    for nu in nus:
        try:
            x = sigma_point(sys, base, float(nu))
            samples.append(full_return(sys, x, opts))
        except (NoReturnError, NotOnSurfaceError, RegionError):
            dropped.append(float(nu))
    if len(samples) < 3:
        raise InsufficientDataError(f"only {len(samples)} grid points returned")
    use = sorted(samples, key=lambda s: s.nu)[:n_fit]
    u = np.array([s.nu for s in use])
    tau_over = np.array([s.tau / s.nu for s in use])
    dv = np.array([(s.V_return - s.nu) / s.nu ** 2 for s in use])
    beta_hat = _linear_intercept(u, tau_over)
    c_hat = _linear_intercept(u, dv)
    # residuals of the first-order predictions, ordered by decreasing nu
    res_tau, res_P = [], []
    for s in sorted(samples, key=lambda s: -s.nu):
        tau1, P1 = first_order_prediction(sys, s.x, s.nu)
        res_tau.append(abs(s.tau - tau1))
        res_P.append(float(np.linalg.norm(s.P - P1)))
    ratios = lambda r: [r[i] / r[i + 1] for i in range(len(r) - 1) if r[i + 1] > 0]  # noqa: E731
    return AsymptoticFit(base, np.array([s.nu for s in samples]), samples, beta_hat, c_hat, beta_pred,
                         2.0 * lam / 3.0, lam, ratios(res_tau), ratios(res_P), dropped)
