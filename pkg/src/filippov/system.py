"""Piecewise-smooth systems and the built-in model registry.

A system is the triple ``(f^L, f^R, H)``: ``f^L`` governs ``H < 0``, ``f^R``
governs ``H > 0`` and ``Sigma = {H = 0}`` is the switching surface. Model
functions have the signature ``f(x, p) -> tuple`` and ``H(x, p) -> scalar``,
where ``x`` is indexable (a float array, a list of :class:`~filippov.jets.Jet`
objects, or a numba array) and ``p`` is a float parameter vector. Because the
elementary functions come from :mod:`filippov.fmath`, each model is written
once and serves the jet engine, the plain-Python integrator and the compiled
kernels alike.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import fmath
from ._jit import jitable, njit, use_jit
from .errors import SamplingError, UnknownModelError, UnknownParameterError
from .jets import DEFAULT_ORDER, directional_lie, lie_series

log = logging.getLogger(__name__)


class Side(enum.Enum):
    L = "L"
    R = "R"

    @property
    def sign(self):
        """``-1`` for the ``H < 0`` side, ``+1`` for ``H > 0``."""
        return -1.0 if self is Side.L else 1.0

    @property
    def other(self):
        return Side.R if self is Side.L else Side.L


class ModelId(str, enum.Enum):
    EXAMPLE_B = "example-b"
    CUBIC_3D = "cubic-3d"
    IMPACT_OSC = "impact-osc"
    ANT_COLONY = "ant-colony"
    PLANAR_QUADRATIC = "planar-quadratic"
    FULLER = "fuller"


def _side(side):
    return side if isinstance(side, Side) else Side(str(side).upper())


@dataclass(frozen=True, eq=False)
class PiecewiseSystem:
    """An immutable two-piece Filippov system.

    Parameters
    ----------
    name : str
        Model identifier.
    dim : int
        State dimension ``n``.
    fL_raw, fR_raw, H_raw : callable
        Generic model functions ``(x, p)``.
    param_names : tuple of str
        Names matching the entries of ``params``.
    params : ndarray
        Parameter values.
    second_order : bool
        Whether the system is flagged as second-order (first Lie derivatives
        agree on ``Sigma``).
    smooth_surface : bool
        ``False`` when ``H`` is not ``C^1`` (the Fuller controller); the
        second-order machinery is not used for such systems.
    center, scale : ndarray, float
        Where random base points for surface sampling are drawn from.
    """

    name: str
    dim: int
    fL_raw: Callable
    fR_raw: Callable
    H_raw: Callable
    param_names: tuple
    params: np.ndarray
    second_order: bool = True
    smooth_surface: bool = True
    center: np.ndarray = None
    scale: float = 1.0
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "params", np.asarray(self.params, dtype=float))
        if self.center is None:
            object.__setattr__(self, "center", np.zeros(self.dim))
        else:
            object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    # -- evaluation on floats ---------------------------------------------

    def param(self, name):
        try:
            return float(self.params[self.param_names.index(name)])
        except ValueError:
            raise UnknownParameterError(name) from None

    @property
    def param_dict(self):
        return {k: float(v) for k, v in zip(self.param_names, self.params)}

    def raw(self, side):
        return self.fL_raw if _side(side) is Side.L else self.fR_raw

    def field(self, side, x):
        x = np.asarray(x, dtype=float)
        return np.array(self.raw(side)(x, self.params), dtype=float)

    def fL(self, x):
        return self.field(Side.L, x)

    def fR(self, x):
        return self.field(Side.R, x)

    def H(self, x):
        return float(self.H_raw(np.asarray(x, dtype=float), self.params))

    # -- Lie derivatives ----------------------------------------------------

    def _jet_field(self, side):
        raw = self.raw(side)
        p = self.params
        return lambda s: raw(s, p)

    def _jet_H(self):
        p = self.params
        return lambda s: self.H_raw(s, p)

    def lie(self, side, x, max_m=3, order=None):
        """``[L^0 H, ..., L^max_m H]`` along ``f^side`` at ``x``."""
        return lie_series(self._jet_field(side), self._jet_H(), np.asarray(x, dtype=float), max_m,
                          order or DEFAULT_ORDER)

    def V(self, x):
        """``V = L_{f^L} H``, used globally (it equals ``L_{f^R} H`` only on ``Sigma``)."""
        return float(self.lie(Side.L, x, 1)[1])

    def grad_V_dot(self, x, w):
        """Exact ``grad V(x) . w`` from nested jets."""
        return directional_lie(self._jet_field(Side.L), self._jet_H(), np.asarray(x, dtype=float),
                               np.asarray(w, dtype=float))

    # -- derived systems ----------------------------------------------------

    def with_params(self, **overrides):
        names = self.param_names
        values = self.params.copy()
        for k, v in overrides.items():
            if k not in names:
                raise UnknownParameterError(f"model {self.name!r} has no parameter {k!r}")
            values[names.index(k)] = float(v)
        return replace(self, params=values)

    def swapped(self):
        """The same ``H`` with the two vector fields exchanged."""
        return replace(self, name=self.name + "/swapped", fL_raw=self.fR_raw, fR_raw=self.fL_raw)

    # -- compiled callables -------------------------------------------------

    def kernels(self, jit=None):
        """``(fL, fR, H)`` ready for :func:`filippov._kernels.flow_to_event`.

        With JIT active these are numba dispatchers; otherwise the plain model
        functions are returned.
        """
        if not use_jit(jit):
            return self.fL_raw, self.fR_raw, self.H_raw
        return _compiled(self.fL_raw), _compiled(self.fR_raw), _compiled(self.H_raw)


_COMPILED = {}
def _compiled(fn):
    if fn not in _COMPILED:
        _COMPILED[fn] = njit(fn)
    return _COMPILED[fn]


# -- model definitions -------------------------------------------------------


def _exb_fL(x, p):
    return (-x[1], -1.0 + 0.0 * x[1])


def _exb_fR(x, p):
    return (2.0 * x[1] - 2.0, 1.0 + 0.0 * x[1])


def _x1(x, p):
    return x[0]


def _cubic_fL(x, p):
    return (x[1], 1.0 - x[2], p[0] + 0.0 * x[2])


def _cubic_fR(x, p):
    return (x[1], x[2], p[1] + 0.0 * x[2])


# impact-osc parameters: k, b, kD, d, A
def _impact_fL(x, p):
    return (
        x[1],
        -p[0] * (x[0] + 1.0) - p[1] * x[1] + p[4] * fmath.cos(x[2]),
        1.0 + 0.0 * x[2],
    )


def _impact_fR(x, p):
    return (
        x[1],
        -p[0] * (x[0] + 1.0) - p[1] * x[1] + p[4] * fmath.cos(x[2]) - p[2] * (x[0] + p[3]),
        1.0 + 0.0 * x[2],
    )


# ant-colony parameters: N, Theta, rho, a_cs, a_ls, b_ls, b_cs, a_al, a_lc, a_as, a_sa
def _ant_fL(x, p):
    free = p[2] * p[0] - x[0] - x[1] - x[2]
    return (
        (p[10] + p[5] * x[1] + p[6] * x[2]) * free - (p[9] + p[7]) * x[0],
        p[7] * x[0] - p[4] * x[1],
        -p[3] * x[2],
    )


def _ant_fR(x, p):
    free = p[2] * p[0] - x[0] - x[1] - x[2]
    return (
        (p[10] + p[5] * x[1] + p[6] * x[2]) * free - (p[9] + p[7]) * x[0],
        p[7] * x[0] - p[4] * x[1] - p[8] * x[1],
        -p[3] * x[2] + p[8] * x[1],
    )


def _ant_H(x, p):
    return x[0] + x[1] + x[2] - p[1]


# planar-quadratic parameters: a0L..a5L, b0L..b5L, a0R..a5R, b0R..b5R
@jitable
def _quad(c, x1, x2):
    return c[0] + c[1] * x1 + c[2] * x2 + c[3] * x1 * x1 + c[4] * x1 * x2 + c[5] * x2 * x2


def _planar_fL(x, p):
    return (_quad(p[0:6], x[0], x[1]), _quad(p[6:12], x[0], x[1]))


def _planar_fR(x, p):
    return (_quad(p[12:18], x[0], x[1]), _quad(p[18:24], x[0], x[1]))


def _fuller_fL(x, p):
    return (x[1], 1.0 + 0.0 * x[1])


def _fuller_fR(x, p):
    return (x[1], -1.0 + 0.0 * x[1])


def _fuller_H(x, p):
    return x[0] + p[0] * x[1] * fmath.absval(x[1])


FULLER_C = math.sqrt((math.sqrt(33.0) - 1.0) / 24.0)

PLANAR_NAMES = tuple(f"{c}{i}{s}" for s in "LR" for c in "ab" for i in range(6))

# L: a = (0, -0.5, 1, 0.1, -0.2, 0.3), b = (1, 0.1, 0.3, 0, 0.1, -0.2)
# R: a = (0, -0.1, 1, 0.2, 0.1, 0.3), b = (-1, 0.2, 0.1, 0.1, 0, 0.1)
PLANAR_DEFAULTS = (
    0.0, -0.5, 1.0, 0.1, -0.2, 0.3,
    1.0, 0.1, 0.3, 0.0, 0.1, -0.2,
    0.0, -0.1, 1.0, 0.2, 0.1, 0.3,
    -1.0, 0.2, 0.1, 0.1, 0.0, 0.1,
)


@dataclass(frozen=True)
class ModelSpec:
    id: ModelId
    dim: int
    fL: Callable
    fR: Callable
    H: Callable
    defaults: dict
    second_order: bool
    smooth_surface: bool = True
    center: tuple = None
    scale: float = 1.0
    description: str = ""


REGISTRY = {
    ModelId.EXAMPLE_B: ModelSpec(
        ModelId.EXAMPLE_B, 2, _exb_fL, _exb_fR, _x1, {}, second_order=False,
        center=(0.0, 1.0), scale=2.0,
        description="planar system with attracting and repelling sliding and a pseudo-equilibrium",
    ),
    ModelId.CUBIC_3D: ModelSpec(
        ModelId.CUBIC_3D, 3, _cubic_fL, _cubic_fR, _x1, {"rate_L": 0.5, "rate_R": 0.2},
        second_order=True, scale=2.0,
        description="3D second-order system whose x3-axis holds all three region types",
    ),
    ModelId.IMPACT_OSC: ModelSpec(
        ModelId.IMPACT_OSC, 3, _impact_fL, _impact_fR, _x1,
        {"k": 5.0, "b": 0.5, "kD": 10.0, "d": 0.3, "A": 9.0},
        second_order=True, scale=2.0,
        description="harmonically forced block against a prestressed damper (x3 = forcing phase)",
    ),
    ModelId.ANT_COLONY: ModelSpec(
        ModelId.ANT_COLONY, 3, _ant_fL, _ant_fR, _ant_H,
        {
            "N": 200.0, "Theta": 30.0, "rho": 0.25, "alpha_cs": 0.07, "alpha_ls": 0.018,
            "beta_ls": 0.049, "beta_cs": 0.079, "alpha_al": 0.007, "alpha_lc": 0.15,
            "alpha_as": 0.24, "alpha_sa": 0.01,
        },
        second_order=True, center=(10.0, 10.0, 10.0), scale=10.0,
        description="ant colony migration with a quorum threshold",
    ),
    ModelId.PLANAR_QUADRATIC: ModelSpec(
        ModelId.PLANAR_QUADRATIC, 2, _planar_fL, _planar_fR, _x1,
        dict(zip(PLANAR_NAMES, PLANAR_DEFAULTS)), second_order=True, scale=1.0,
        description="quadratic planar two-fold with H = x1",
    ),
    ModelId.FULLER: ModelSpec(
        ModelId.FULLER, 2, _fuller_fL, _fuller_fR, _fuller_H, {"C": FULLER_C},
        second_order=False, smooth_surface=False, scale=1.0,
        description="time-optimal double integrator; switching curve x1 + C x2|x2| = 0",
    ),
}


def model_ids():
    return [m.value for m in ModelId]


def build_model(model_id, overrides=None):
    """Construct a registered model with optional parameter overrides.

    Raises
    ------
    UnknownModelError
        ``model_id`` is not registered.
    UnknownParameterError
        An override names a parameter the model does not have.
    """
    try:
        spec = REGISTRY[ModelId(model_id)]
    except ValueError:
        raise UnknownModelError(f"unknown model {model_id!r}; choose from {', '.join(model_ids())}") from None
    names = tuple(spec.defaults)
    values = dict(spec.defaults)
    for k, v in (overrides or {}).items():
        if k not in values:
            raise UnknownParameterError(f"model {spec.id.value!r} has no parameter {k!r}")
        values[k] = float(v)
    return PiecewiseSystem(
        name=spec.id.value,
        dim=spec.dim,
        fL_raw=spec.fL,
        fR_raw=spec.fR,
        H_raw=spec.H,
        param_names=names,
        params=np.array([values[k] for k in names], dtype=float),
        second_order=spec.second_order,
        smooth_surface=spec.smooth_surface,
        center=None if spec.center is None else np.array(spec.center, dtype=float),
        scale=spec.scale,
        description=spec.description,
    )


# -- sampling of Sigma ----------------------------------------------------------


def sample_sigma(sys, n_samples, rng, budget=None, n_grid=16):
    """Draw ``n_samples`` points of ``Sigma`` by root-finding ``H`` on random lines.

    Each attempt picks a base point around ``sys.center``, a random unit
    direction, scans ``H`` on a grid of ``n_grid`` points along the line and
    refines the first sign change with Brent's method. Every evaluation of
    ``H`` counts against ``budget`` (default ``100 * n_samples``).
    """
    budget = 100 * n_samples if budget is None else budget
    used = 0
    pts = []
    span = 2.0 * sys.scale
    ts = np.linspace(-span, span, n_grid)
    while len(pts) < n_samples:
        base = sys.center + sys.scale * rng.standard_normal(sys.dim)
        d = rng.standard_normal(sys.dim)
        d /= np.linalg.norm(d)
        if used + n_grid > budget:
            break
        hs = np.array([sys.H(base + t * d) for t in ts])
        used += n_grid
        idx = np.nonzero(np.sign(hs[:-1]) * np.sign(hs[1:]) <= 0)[0]
        if idx.size == 0:
            continue
        i = int(rng.choice(idx))
        if hs[i] == 0.0:
            pts.append(base + ts[i] * d)
            continue
        counter = [0]

        def g(t):
            counter[0] += 1
            return sys.H(base + t * d)

        t_root = brentq(g, ts[i], ts[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
        used += counter[0]
        pts.append(base + t_root * d)
    if len(pts) < n_samples:
        raise SamplingError(f"found {len(pts)} of {n_samples} surface points within {budget} evaluations")
    return np.array(pts)


@dataclass(frozen=True)
class SecondOrderCheck:
    passed: bool
    max_deviation: float
    n_samples: int

    def __bool__(self):
        return self.passed


def check_second_order(sys, n_samples=1000, seed=0):
    """Test whether ``L_{f^L} H = L_{f^R} H`` on sampled points of ``Sigma``.

    Returns
    -------
    SecondOrderCheck
        ``passed`` is true iff every sample satisfies
        ``|L_{f^L} H - L_{f^R} H| <= 1e-10 (1 + |x|)``; ``max_deviation`` is
        the largest raw difference.
    """
    rng = np.random.default_rng(seed)
    pts = sample_sigma(sys, n_samples, rng)
    worst = 0.0
    ok = True
    for x in pts:
        dev = abs(sys.lie(Side.L, x, 1)[1] - sys.lie(Side.R, x, 1)[1])
        worst = max(worst, dev)
        if dev > 1e-10 * (1.0 + np.linalg.norm(x)):
            ok = False
    return SecondOrderCheck(ok, worst, len(pts))
