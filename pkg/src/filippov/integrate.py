"""Event-driven Filippov integration.

The integrator alternates between four motion modes:

``FlowL`` / ``FlowR``
    smooth flow of one piece, advanced by the compiled Dormand-Prince kernel
    until ``H`` returns to zero;
``SlideSigma``
    sliding on ``Sigma`` with ``f^S`` while the convex weight stays in
    ``[0, 1]``;
``SlideT``
    second-order sliding on ``T`` with ``f^T`` while the region stays
    visible-visible or invisible-invisible.

At every arrival on ``Sigma`` the first (and, at tangencies, second) Lie
derivatives decide whether the orbit crosses, starts sliding or meets a
repelling sliding region. Spiralling around an attracting
invisible-invisible region never reaches ``T`` in finite time, so once the
spiral amplitude ``V`` has decreased below ``v_converge`` the orbit is
projected onto ``T`` and continued with ``f^T`` (a ``TConvergence`` event).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .errors import DegeneracyError, FilippovError, JetError, NotOnSurfaceError, StepFailure
from .geometry import project_sigma, project_T
from .sliding import second_order_sliding_field, sliding_field
from .surface import RegionKind, region_kind
from .system import Side

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    FLOW_L = "FlowL"
    FLOW_R = "FlowR"
    SLIDE_SIGMA = "SlideSigma"
    SLIDE_T = "SlideT"

    @classmethod
    def flow(cls, side):
        return cls.FLOW_L if Side(side) is Side.L else cls.FLOW_R


class EventKind(enum.Enum):
    CROSS = "HitSigma-Cross"
    SLIDE_START = "HitSigma-SlideStart"
    REPELLING = "HitSigma-Repelling"
    SLIDE_EXIT = "SlideExit"
    T_CONVERGENCE = "TConvergence"
    T_EXIT = "TExit-CubicTangency"
    EJECTION = "Ejection"
    HORIZON = "HorizonEnd"
    STEP_FAILURE = "StepFailure"


class RepellingChoice(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    STOP = "stop"


@dataclass
class Event:
    t: float
    x: np.ndarray
    kind: EventKind
    nu: float = math.nan
    s: float = math.nan
    note: str = ""

    def to_dict(self):
        def num(v):
            return None if not math.isfinite(v) else float(v)

        return {"t": float(self.t), "x": [float(v) for v in self.x], "kind": self.kind.value,
                "nu": num(self.nu), "s": num(self.s)}


@dataclass
class Segment:
    mode: Mode
    ts: list = field(default_factory=list)
    xs: list = field(default_factory=list)

    def append(self, t, x):
        self.ts.append(float(t))
        self.xs.append(np.array(x, dtype=float))

    def extend(self, ts, xs):
        self.ts.extend(float(t) for t in ts)
        self.xs.extend(np.array(x, dtype=float) for x in xs)

    @property
    def t0(self):
        return self.ts[0]

    @property
    def t1(self):
        return self.ts[-1]

    def array(self):
        return np.asarray(self.ts), np.asarray(self.xs)


@dataclass
class Trajectory:
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def final_time(self):
        return self.segments[-1].t1 if self.segments else math.nan

    @property
    def final_state(self):
        return self.segments[-1].xs[-1] if self.segments else None

    def events_of(self, *kinds):
        return [e for e in self.events if e.kind in kinds]

    def modes(self):
        return [s.mode for s in self.segments]

    def samples(self):
        """Rows ``(t, x, mode)`` over all segments in time order."""
        rows = []
        for seg in self.segments:
            for t, x in zip(seg.ts, seg.xs):
                rows.append((t, x, seg.mode))
        return rows


@dataclass
class IntegrateOptions:
    """Tolerances and policies for :func:`integrate`.

    Attributes
    ----------
    rtol, atol : float
        Local error tolerances of the Runge-Kutta pair.
    v_converge : float
        Spiral amplitude below which a converging spiral is handed to ``T``.
    guard_tol : float
        ``|L^1 H|`` below which a surface hit is treated as a tangency.
    repelling_choice : {'stop', 'left', 'right'}
        Forward continuation after reaching a repelling sliding region.
    stop_norm : float or None
        Stop once ``|x|`` at a surface event falls to this value.
    eject_factor : float
        A flow segment lasting this many times the previous one on the same
        side (during spiralling) is reported as an ejection.
    max_events : int
        Safety cap on surface events.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    v_converge: float = 1e-6
    guard_tol: float = 1e-8
    repelling_choice: str = "stop"
    stop_norm: float | None = None
    eject_factor: float = 20.0
    max_events: int = 200000
    max_step: float = math.inf
    h0: float = 1e-2
    record: bool = True
    spiral_to_T: bool = True
    jit: bool | None = None

    def __post_init__(self):
        RepellingChoice(self.repelling_choice)
        for name in ("rtol", "atol", "v_converge", "guard_tol", "eject_factor", "h0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# -- smooth flow -------------------------------------------------------------


_BUF = 2048


def flow_piece(sys, side, x0, t0, t_limit, opts, h0=None, t_arm=None, armed=False, record=True, max_steps=10 ** 7):
    """Advance ``f^side`` until ``H`` returns to zero or ``t_limit`` is reached.

    Returns
    -------
    status : int
        A ``_kernels`` status code.
    t, x : float, ndarray
        Final time and state (the located surface point for ``EVENT``).
    ts, xs : list
        Recorded accepted steps (empty when ``record`` is false).
    armed : bool
    """
    side = Side(side)
    fL, fR, H = sys.kernels(opts.jit)
    kernel = K.get_flow_kernel(opts.jit)
    x = np.asarray(x0, dtype=float).copy()
    t = float(t0)
    h = float(opts.h0 if h0 is None else h0)
    t_arm = t if t_arm is None else float(t_arm)
    ts, xs = [], []
    n = sys.dim
    tbuf = np.empty(_BUF if record else 0)
    xbuf = np.empty((_BUF if record else 0, n))
    max_step = float(opts.max_step) if math.isfinite(opts.max_step) else 1e300
    while True:
        status, t, x, h, nrec, armed = kernel(
            fL, fR, H, sys.params, x, t, float(t_limit), h, opts.rtol, opts.atol, max_step, t_arm,
            side.sign, armed, max_steps, tbuf, xbuf,
        )
        if record and nrec:
            ts.extend(tbuf[:nrec].tolist())
            xs.extend(xbuf[:nrec].copy())
        if status != K.BUFFER_FULL:
            return status, float(t), np.array(x), ts, xs, armed


# -- constrained (sliding) flow ------------------------------------------------


def constrained_flow(field_fn, project, monitors, x0, t0, t_end, opts, seg=None):
    """Integrate ``xdot = field_fn(x)`` with projection and exit monitoring.

    ``monitors`` is a list of callables ``g(x)``; the motion ends at the first
    time one of them drops to zero or below (located by Brent's method on the
    dense output, then projected).

    Returns
    -------
    t, x, which : float, ndarray, int or None
        ``which`` indexes the triggered monitor, ``None`` at the horizon.
    """
    n = x0.size
    fn = lambda y, p: field_fn(y)  # noqa: E731
    x = project(np.asarray(x0, dtype=float))
    t = float(t0)
    Kst = np.empty((7, n))
    Kst[0] = field_fn(x)
    xnew = np.empty(n)
    y = np.empty(n)
    h = min(opts.h0, max(t_end - t, 0.0)) or opts.h0
    p = np.empty(0)
    n_steps = 0
    while t < t_end:
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        if h < 1e-15 * max(1.0, abs(t)):
            if last:
                break
            raise StepFailure(f"step size underflow at t={t:.17g}")
        try:
            err = K.dopri_step(fn, fn, -1.0, p, x, h, Kst, xnew)
            en = K.error_norm(err, x, xnew, opts.rtol, opts.atol)
        except (DegeneracyError, ArithmeticError):
            # a trial stage left the region where the field is defined
            en = math.inf
        if not np.all(np.isfinite(xnew)) or en > 1.0:
            h *= 0.25 if not np.isfinite(en) else max(K.MIN_FACTOR, K.SAFETY * en ** -0.2)
            continue
        n_steps += 1
        hit = None
        for j in (1, 2, 3, 4):
            s = 0.25 * j
            if j < 4:
                K.dense_eval(x, h, Kst, s, y)
                z = y
            else:
                z = xnew
            vals = [g(z) for g in monitors]
            bad = [i for i, v in enumerate(vals) if v <= 0.0]
            if bad:
                hit = (s, bad[0])
                break
        if hit is not None:
            s_hi, which = hit
            g = monitors[which]

            def along(theta):
                K.dense_eval(x, h, Kst, theta, y)
                return g(y)

            g0 = g(x)
            if g0 <= 0.0:
                theta = 0.0
            else:
                theta = brentq(along, 0.0, s_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            K.dense_eval(x, h, Kst, theta, y)
            xe = project(y.copy())
            te = t + theta * h
            if seg is not None and theta > 0.0:
                seg.append(te, xe)
            return te, xe, which
        x = project(xnew.copy())
        t = t_end if last else t + h
        if seg is not None and opts.record:
            seg.append(t, x)
        Kst[0] = field_fn(x)
        factor = K.MAX_FACTOR if en == 0.0 else min(K.MAX_FACTOR, K.SAFETY * en ** -0.2)
        h = min(h * factor, opts.max_step)
    return t, x, None


# -- surface logic ---------------------------------------------------------------


@dataclass
class SurfaceState:
    """Lie data at a surface point used for the switching decision."""

    lieL: np.ndarray
    lieR: np.ndarray

    @property
    def a(self):
        return self.lieL[1]

    @property
    def b(self):
        return self.lieR[1]


def departs(side, lie, guard):
    """Whether the flow of ``f^side`` leaves ``Sigma`` into its own half-space."""
    sgn = Side(side).sign
    v = sgn * lie[1]
    if abs(lie[1]) > guard:
        return v > 0.0
    if abs(lie[2]) > guard:
        return sgn * lie[2] > 0.0
    return sgn * lie[3] > 0.0


class _Runner:
    """Mutable state of one :func:`integrate` call."""

    def __init__(self, sys, opts):
        self.sys = sys
        self.opts = opts
        self.traj = Trajectory()
        self.n_events = 0
        self.sigma_plus = []  # V at successive crossings from L to R
        self.last_duration = {Side.L: None, Side.R: None}
        self.spiralling = False
        self.ejected = False

    def event(self, t, x, kind, nu=math.nan, s=math.nan, note=""):
        self.traj.events.append(Event(float(t), np.array(x, dtype=float), kind, nu, s, note))
        self.n_events += 1

    def new_segment(self, mode, t, x):
        seg = Segment(mode)
        seg.append(t, x)
        self.traj.segments.append(seg)
        return seg

    # each handler returns (mode, t, x) for the next phase or None to stop

    def run(self, x0, t_end):
        sys, opts = self.sys, self.opts
        x = np.asarray(x0, dtype=float).copy()
        if x.shape != (sys.dim,):
            raise ValueError(f"initial state must have {sys.dim} components")
        t = 0.0
        h = sys.H(x)
        if abs(h) <= 1e-12 * (1.0 + np.linalg.norm(x)):
            nxt = self.on_sigma(t, x, arrived_from=None)
        else:
            nxt = (Mode.flow(Side.L if h < 0 else Side.R), t, x, {})
        while nxt is not None:
            mode, t, x, info = nxt
            if t >= t_end:
                self.new_segment(mode, t, x)
                self.event(t, x, EventKind.HORIZON)
                break
            if self.n_events >= opts.max_events:
                self.new_segment(mode, t, x)
                self.event(t, x, EventKind.STEP_FAILURE, note="event budget exhausted")
                break
            try:
                if mode in (Mode.FLOW_L, Mode.FLOW_R):
                    nxt = self.flow(mode, t, x, t_end, info)
                elif mode is Mode.SLIDE_SIGMA:
                    nxt = self.slide_sigma(t, x, t_end)
                else:
                    nxt = self.slide_T(t, x, t_end)
            except (FilippovError, ArithmeticError) as exc:
                seg = self.traj.segments[-1] if self.traj.segments else self.new_segment(mode, t, x)
                self.event(seg.t1, seg.xs[-1], EventKind.STEP_FAILURE, note=str(exc))
                nxt = None
        return self.traj

    # -- smooth pieces ---------------------------------------------------------

    def flow(self, mode, t, x, t_end, info):
        sys, opts = self.sys, self.opts
        side = Side.L if mode is Mode.FLOW_L else Side.R
        seg = self.new_segment(mode, t, x)
        h0 = info.get("h0", opts.h0)
        t_arm = t
        limit = t_end
        prev = self.last_duration[side]
        if self.spiralling and prev is not None and not self.ejected:
            limit = min(t_end, t + opts.eject_factor * prev)
        armed = False
        t_start = t
        while True:
            status, t, x, ts, xs, armed = flow_piece(sys, side, x, t, limit, opts, h0=h0, t_arm=t_arm, armed=armed,
                                                     record=opts.record)
            if opts.record:
                seg.extend(ts, xs)
            if status == K.HORIZON and limit < t_end:
                self.ejected = True
                self.event(t, x, EventKind.EJECTION, nu=sys.V(x))
                limit = t_end
                h0 = opts.h0
                continue
            break
        if status == K.EVENT:
            if not (seg.ts and seg.ts[-1] == t):
                seg.append(t, x)
            self.last_duration[side] = t - t_start
            return self.on_sigma(t, x, arrived_from=side)
        if status == K.HORIZON:
            if not (seg.ts and seg.ts[-1] == t):
                seg.append(t, x)
            self.event(t, x, EventKind.HORIZON)
            return None
        raise StepFailure(f"smooth integration stopped with kernel status {status} at t={t:.17g}")

    # -- arrival on Sigma ------------------------------------------------------

    def on_sigma(self, t, x, arrived_from):
        sys, opts = self.sys, self.opts
        g = opts.guard_tol
        try:
            lieL = sys.lie(Side.L, x, 3)
            lieR = sys.lie(Side.R, x, 3)
        except JetError as exc:
            raise StepFailure(f"Lie derivatives undefined on the surface: {exc}") from exc
        nu = lieL[1]
        if opts.stop_norm is not None and np.linalg.norm(x) <= opts.stop_norm:
            self.new_segment(Mode.flow(arrived_from or Side.L), t, x)
            self.event(t, x, EventKind.HORIZON, nu=nu, note="stop_norm reached")
            return None
        dL = departs(Side.L, lieL, g)
        dR = departs(Side.R, lieR, g)
        if sys.second_order and sys.smooth_surface and abs(lieL[1]) <= g and abs(lieR[1]) <= g:
            if region_kind(lieL[2], lieR[2], g) is RegionKind.INVINV:
                y = project_T(sys, x)
                self.event(t, y, EventKind.T_CONVERGENCE, nu=nu, note="arrival at the tangency surface")
                return Mode.SLIDE_T, t, y, {}
        if dR and not dL:
            if arrived_from is not None:
                self.event(t, x, EventKind.CROSS, nu=nu)
            if arrived_from is Side.L:
                nxt = self.spiral_bookkeeping(t, x, nu)
                if nxt is not None:
                    return nxt
            return Mode.FLOW_R, t, x, {"h0": self.departure_step(lieR)}
        if dL and not dR:
            if arrived_from is not None:
                self.event(t, x, EventKind.CROSS, nu=nu)
            return Mode.FLOW_L, t, x, {"h0": self.departure_step(lieL)}
        if not dL and not dR:
            try:
                _, s = sliding_field(sys, x)
            except DegeneracyError:
                s = math.nan
            self.event(t, x, EventKind.SLIDE_START, nu=nu, s=s)
            self.spiralling = False
            return Mode.SLIDE_SIGMA, t, x, {}
        # both fields leave Sigma: repelling sliding, forward evolution not unique
        self.event(t, x, EventKind.REPELLING, nu=nu, note=f"policy={opts.repelling_choice}")
        choice = RepellingChoice(opts.repelling_choice)
        if choice is RepellingChoice.STOP:
            self.new_segment(Mode.flow(arrived_from or Side.L), t, x)
            return None
        side = Side.L if choice is RepellingChoice.LEFT else Side.R
        return Mode.flow(side), t, x, {"h0": self.departure_step(lieL if side is Side.L else lieR)}

    def departure_step(self, lie):
        """Initial step small enough to resolve a short excursion off ``Sigma``."""
        a = abs(lie[1])
        c = abs(lie[2])
        if c > 0.0 and a > 0.0:
            return min(self.opts.h0, 0.05 * a / c)
        return self.opts.h0

    def spiral_bookkeeping(self, t, x, nu):
        """Track ``V`` at crossings from ``L`` to ``R`` and hand converged spirals to ``T``."""
        sys, opts = self.sys, self.opts
        if not (sys.second_order and sys.smooth_surface):
            return None
        vp = self.sigma_plus
        vp.append(nu)
        self.spiralling = len(vp) >= 2
        if not opts.spiral_to_T or len(vp) < 3:
            return None
        if not (vp[-3] > vp[-2] > vp[-1] and vp[-1] < opts.v_converge):
            return None
        try:
            y = project_T(sys, x)
        except NotOnSurfaceError:
            return None
        lieL = sys.lie(Side.L, y, 2)
        lieR = sys.lie(Side.R, y, 2)
        if region_kind(lieL[2], lieR[2], opts.guard_tol) is not RegionKind.INVINV:
            return None
        self.event(t, y, EventKind.T_CONVERGENCE, nu=nu)
        return Mode.SLIDE_T, t, y, {}

    # -- sliding on Sigma ------------------------------------------------------

    def slide_sigma(self, t, x, t_end):
        sys, opts = self.sys, self.opts
        seg = self.new_segment(Mode.SLIDE_SIGMA, t, x)
        monitors = [lambda y: sys.lie(Side.L, y, 1)[1], lambda y: -sys.lie(Side.R, y, 1)[1]]
        t1, x1, which = constrained_flow(lambda y: sliding_field(sys, y)[0], lambda y: project_sigma(sys, y),
                                         monitors, x, t, t_end, opts, seg)
        if which is None:
            self.event(t1, x1, EventKind.HORIZON)
            return None
        side = Side.L if which == 0 else Side.R
        self.event(t1, x1, EventKind.SLIDE_EXIT, nu=sys.V(x1), s=0.0 if side is Side.L else 1.0)
        return Mode.flow(side), t1, x1, {}

    # -- sliding on T --------------------------------------------------------------

    def slide_T(self, t, x, t_end):
        sys = self.sys
        traj = integrate_slideT(sys, x, t_end, self.opts, t0=t)
        for seg in traj.segments:
            self.traj.segments.append(seg)
        last = traj.events[-1]
        self.traj.events.extend(traj.events)
        self.n_events += len(traj.events)
        self.spiralling = False
        self.sigma_plus = []
        if last.kind is EventKind.T_EXIT and "exit=" in last.note:
            side = Side(last.note.rsplit("exit=", 1)[1])
            return Mode.flow(side), last.t, last.x, {"h0": self.opts.h0 * 0.01}
        return None


def _exit_side(lieL, lieR, boundary):
    """Side followed after reaching ``c^boundary``: the cubically tangent orbit, if it departs."""
    lie = lieL if boundary is Side.L else lieR
    sgn = boundary.sign
    if sgn * lie[3] > 0.0:
        return boundary
    return None


def integrate_slideT(sys, y0, t_end, opts=None, t0=0.0):
    """Second-order sliding along ``T`` until a region boundary or the horizon.

    The state is projected back onto ``{H = 0, V = 0}`` after every accepted
    step. At ``c^L`` (``L^2_L H = 0``) or ``c^R`` the orbit leaves along the
    cubically tangent side when its third Lie derivative points away from
    ``Sigma``; with a vanishing third derivative it stops.
    """
    opts = opts or IntegrateOptions()
    traj = Trajectory()
    y = project_T(sys, np.asarray(y0, dtype=float))
    lieL = sys.lie(Side.L, y, 2)
    lieR = sys.lie(Side.R, y, 2)
    reg = region_kind(lieL[2], lieR[2], 0.0)
    seg = Segment(Mode.SLIDE_T)
    seg.append(t0, y)
    traj.segments.append(seg)
    if reg not in (RegionKind.INVINV, RegionKind.VISVIS):
        traj.events.append(Event(t0, y, EventKind.STEP_FAILURE, note=f"second-order sliding not admissible on {reg.value}"))
        return traj
    sL = math.copysign(1.0, lieL[2])
    sR = math.copysign(1.0, lieR[2])
    monitors = [lambda z: sL * sys.lie(Side.L, z, 2)[2], lambda z: sR * sys.lie(Side.R, z, 2)[2]]

    def fT(z):
        return second_order_sliding_field(sys, z, check=False)[0]

    try:
        t1, x1, which = constrained_flow(fT, lambda z: project_T(sys, z), monitors, y, t0, t_end, opts, seg)
    except (FilippovError, ArithmeticError) as exc:
        traj.events.append(Event(seg.t1, seg.xs[-1], EventKind.STEP_FAILURE, note=str(exc)))
        return traj
    if which is None:
        traj.events.append(Event(t1, x1, EventKind.HORIZON))
        return traj
    boundary = Side.L if which == 0 else Side.R
    lieL = sys.lie(Side.L, x1, 3)
    lieR = sys.lie(Side.R, x1, 3)
    side = _exit_side(lieL, lieR, boundary)
    note = f"c{boundary.value} " + ("marginal cubic tangency" if side is None else f"exit={side.value}")
    traj.events.append(Event(t1, x1, EventKind.T_EXIT, nu=lieL[1], note=note))
    return traj


def integrate(sys, x0, t_end, opts=None):
    """Filippov solution from ``x0`` over ``[0, t_end]``.

    Parameters
    ----------
    sys : PiecewiseSystem
    x0 : array_like
    t_end : float
        Horizon, must be positive.
    opts : IntegrateOptions, optional

    Returns
    -------
    Trajectory
        Segments tagged with their motion mode, separated by events. Failures
        are reported as a final ``StepFailure`` event rather than raised.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    opts = opts or IntegrateOptions()
    return _Runner(sys, opts).run(x0, float(t_end))
