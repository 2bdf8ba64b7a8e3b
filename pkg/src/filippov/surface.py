"""Pointwise classification of the switching surface and the tangency surface.

On ``Sigma`` the signs of the first Lie derivatives separate crossing from
attracting and repelling sliding. Where a first Lie derivative vanishes the
second one decides fold visibility, and on the tangency surface ``T`` of a
second-order system the pair of second Lie derivatives gives the region kind.
On invisible-invisible regions the scalar

    Lambda = L^3_L H / (L^2_L H)^2 - L^3_R H / (L^2_R H)^2

decides whether nearby spiralling orbits approach ``T`` (``Lambda < 0``) or
recede from it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NotOnSurfaceError, RegionError
from .geometry import constraint_matrix, rank_ok
from .system import Side

DEFAULT_TOL = 1e-9


class SurfaceKind(enum.Enum):
    CROSSING = "Crossing"
    ATTRACTING_SLIDING = "AttractingSliding"
    REPELLING_SLIDING = "RepellingSliding"
    TANGENCY = "Tangency"


class Fold(enum.Enum):
    VISIBLE = "Visible"
    INVISIBLE = "Invisible"
    DEGENERATE = "Degenerate"


class RegionKind(enum.Enum):
    VISVIS = "VisVis"
    VISINV = "VisInv"
    INVINV = "InvInv"
    BOUNDARY = "Boundary"


class LambdaSign(enum.Enum):
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"
    MARGINAL = "Marginal"


@dataclass
class SurfaceClassification:
    point: np.ndarray
    lieL: np.ndarray
    lieR: np.ndarray
    kind: SurfaceKind
    foldL: Fold | None = None
    foldR: Fold | None = None
    region: RegionKind | None = None
    lam: float = math.nan
    lambda_sign: LambdaSign | None = None

    def to_dict(self):
        def name(e):
            return None if e is None else e.value

        return {
            "point": [float(v) for v in self.point],
            "lieL": [float(v) for v in self.lieL],
            "lieR": [float(v) for v in self.lieR],
            "kind": self.kind.value,
            "foldL": name(self.foldL),
            "foldR": name(self.foldR),
            "region": name(self.region),
            "lambda": None if not math.isfinite(self.lam) else float(self.lam),
            "lambdaSign": name(self.lambda_sign),
        }


def _scaled_tol(tol, x):
    return (DEFAULT_TOL if tol is None else tol) * (1.0 + float(np.linalg.norm(x)))


def fold_kind(side, second, tol):
    """Visibility of a fold from the second Lie derivative of that side."""
    s = -second if Side(side) is Side.L else second
    if s > tol:
        return Fold.VISIBLE
    if s < -tol:
        return Fold.INVISIBLE
    return Fold.DEGENERATE


def region_kind(aL, aR, tol):
    """Region type from the two second Lie derivatives on ``T``."""
    if aL < -tol and aR > tol:
        return RegionKind.VISVIS
    if aL > tol and aR < -tol:
        return RegionKind.INVINV
    if min(abs(aL), abs(aR)) > tol and aL * aR > 0.0:
        return RegionKind.VISINV
    return RegionKind.BOUNDARY


def lambda_from_lie(lieL, lieR):
    """``Lambda`` from Lie-derivative lists; non-finite where an ``L^2`` vanishes."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.float64(lieL[3]) / np.float64(lieL[2]) ** 2 - np.float64(lieR[3]) / np.float64(lieR[2]) ** 2)


def lambda_value(sys, x):
    """``Lambda(x)`` evaluated from the formula, with no region check."""
    return lambda_from_lie(sys.lie(Side.L, x, 3), sys.lie(Side.R, x, 3))


def lambda_sign(lam, tol):
    if not math.isfinite(lam):
        return None
    if lam < -tol:
        return LambdaSign.ATTRACTING
    if lam > tol:
        return LambdaSign.REPELLING
    return LambdaSign.MARGINAL


def classify_point(sys, x, tol=None):
    """Classify a point of ``Sigma``.

    Parameters
    ----------
    sys : PiecewiseSystem
    x : array_like
        Point with ``|H(x)| <= tol (1 + |x|)``.
    tol : float, optional
        Relative sign tolerance, default ``1e-9``.

    Raises
    ------
    NotOnSurfaceError
        ``x`` is not on ``Sigma``.
    """
    x = np.asarray(x, dtype=float)
    t = _scaled_tol(tol, x)
    h = sys.H(x)
    if not abs(h) <= t:
        raise NotOnSurfaceError(f"|H(x)| = {abs(h):.3e} exceeds the tolerance {t:.3e}")
    lieL = sys.lie(Side.L, x, 3)
    lieR = sys.lie(Side.R, x, 3)
    a, b = lieL[1], lieR[1]
    if abs(a) > t and abs(b) > t:
        if a * b > 0.0:
            kind = SurfaceKind.CROSSING
        elif a > 0.0:
            kind = SurfaceKind.ATTRACTING_SLIDING
        else:
            kind = SurfaceKind.REPELLING_SLIDING
    else:
        kind = SurfaceKind.TANGENCY
    out = SurfaceClassification(x.copy(), lieL, lieR, kind)
    if abs(a) <= t:
        out.foldL = fold_kind(Side.L, lieL[2], t)
    if abs(b) <= t:
        out.foldR = fold_kind(Side.R, lieR[2], t)
    if sys.second_order and abs(a) <= t and abs(b) <= t:
        out.region = region_kind(lieL[2], lieR[2], t)
        if out.region is RegionKind.INVINV:
            out.lam = lambda_from_lie(lieL, lieR)
            out.lambda_sign = lambda_sign(out.lam, t)
    return out


# -- charts of the tangency surface --------------------------------------------


class BoundaryKind(enum.Enum):
    CL = "cL"
    CR = "cR"
    CHI = "chi"


@dataclass
class RegionBoundary:
    point: np.ndarray
    kind: BoundaryKind
    parameter: float


@dataclass
class TangencyChart:
    """One-parameter chart of a curve ``T`` using coordinate ``axis`` as parameter.

    Points are produced by Newton's method on ``(H, V) = 0`` in the remaining
    coordinates, continued from the last computed point.
    """

    sys: object
    seed: np.ndarray
    axis: int
    _last: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.seed = np.asarray(self.seed, dtype=float)
        self._last = self.seed.copy()

    def point(self, s, tol=1e-15, max_iter=40):
        sys = self.sys
        x = self._last.copy()
        x[self.axis] = s
        free = [i for i in range(sys.dim) if i != self.axis]
        for _ in range(max_iter):
            r = np.array([sys.H(x), sys.V(x)])
            if np.max(np.abs(r)) <= tol * (1.0 + np.linalg.norm(x)):
                break
            J = constraint_matrix(sys, x)[:, free]
            dx = np.linalg.lstsq(J, -r, rcond=None)[0]
            x[free] += dx
            if not np.all(np.isfinite(x)):
                raise NotOnSurfaceError(f"tangency chart diverged at parameter {s}")
        r = np.array([sys.H(x), sys.V(x)])
        if np.max(np.abs(r)) > 1e-10 * (1.0 + np.linalg.norm(x)):
            raise NotOnSurfaceError(f"tangency chart failed to converge at parameter {s}")
        self._last = x.copy()
        return x

    def rank_ok(self, x):
        return rank_ok(self.sys, x)[0]


def default_axis(sys):
    return sys.dim - 1


def _second_lie(sys, x):
    return sys.lie(Side.L, x, 3), sys.lie(Side.R, x, 3)


def find_region_boundaries(sys, seed, interval, axis=None, n_grid=400):
    """Locate ``c^L``, ``c^R`` and ``chi`` along a one-dimensional ``T``.

    ``c^Z`` are zeros of ``L^2_Z H`` along the chart; ``chi`` is a zero of
    ``Lambda`` and is only searched between grid points that both lie in an
    invisible-invisible region. Each root is refined with Brent's method.

    Returns
    -------
    list of RegionBoundary
        Sorted by chart parameter; empty when nothing changes sign.
    """
    axis = default_axis(sys) if axis is None else axis
    chart = TangencyChart(sys, seed, axis)
    lo, hi = float(interval[0]), float(interval[1])
    grid = np.linspace(lo, hi, n_grid + 1)
    # start continuation at the seed's own parameter, then sweep
    chart.point(float(np.clip(chart.seed[axis], lo, hi)))
    pts = [chart.point(lo)]
    for s in grid[1:]:
        pts.append(chart.point(s))
    vals = []
    for x in pts:
        if not chart.rank_ok(x):
            raise NotOnSurfaceError(f"rank condition fails on T at {x}")
        lieL, lieR = _second_lie(sys, x)
        vals.append((lieL[2], lieR[2], lambda_from_lie(lieL, lieR), region_kind(lieL[2], lieR[2], 0.0)))

    def along(fun, i):
        def g(s):
            chart._last = pts[i]
            x = chart.point(s)
            lieL, lieR = _second_lie(sys, x)
            return fun(lieL, lieR)

        return g

    out = []
    for i in range(n_grid):
        aL0, aR0, lam0, reg0 = vals[i]
        aL1, aR1, lam1, reg1 = vals[i + 1]
        for which, v0, v1, fun in (
            (BoundaryKind.CL, aL0, aL1, lambda L, R: L[2]),
            (BoundaryKind.CR, aR0, aR1, lambda L, R: R[2]),
        ):
            if v0 == 0.0 or v0 * v1 < 0.0:
                s = grid[i] if v0 == 0.0 else brentq(along(fun, i), grid[i], grid[i + 1], xtol=1e-15,
                                                     rtol=4 * np.finfo(float).eps)
                chart._last = pts[i]
                out.append(RegionBoundary(chart.point(s), which, float(s)))
        if reg0 is RegionKind.INVINV and reg1 is RegionKind.INVINV and lam0 * lam1 < 0.0:
            s = brentq(along(lambda L, R: lambda_from_lie(L, R), i), grid[i], grid[i + 1], xtol=1e-15,
                       rtol=4 * np.finfo(float).eps)
            chart._last = pts[i]
            out.append(RegionBoundary(chart.point(s), BoundaryKind.CHI, float(s)))
    out.sort(key=lambda b: b.parameter)
    return out


def sample_tangency(sys, n, rng, region=None, interval=None, axis=None, seed=None, max_tries=None):
    """Random points of a one-dimensional ``T``, optionally restricted to a region kind."""
    axis = default_axis(sys) if axis is None else axis
    seed = np.zeros(sys.dim) if seed is None else np.asarray(seed, dtype=float)
    chart = TangencyChart(sys, seed, axis)
    lo, hi = interval
    pts = []
    tries = 0
    max_tries = 50 * n if max_tries is None else max_tries
    while len(pts) < n and tries < max_tries:
        tries += 1
        chart._last = seed.copy()
        x = chart.point(float(rng.uniform(lo, hi)))
        if region is not None:
            c = classify_point(sys, x)
            if c.region not in region:
                continue
        pts.append(x)
    if len(pts) < n:
        raise RegionError(f"only {len(pts)} of {n} requested points found on T")
    return np.array(pts)
