"""Smooth-piece integration kernels.

Everything here is written in the subset of Python/NumPy that numba can
compile. :func:`flow_to_event` is the hot loop: it advances ``xdot = f(x)`` with
the Dormand-Prince 5(4) pair until the surface function ``H`` leaves the
requested side, then pins the crossing with an Illinois search on the dense
output followed by a Newton polish on a re-taken step. ``f(x, p)`` returns a
tuple, ``H(x, p)`` a float.

:func:`get_flow_kernel` hands out the compiled or the plain version.
"""

import math

import numpy as np

from ._jit import jitable, njit, use_jit

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    -71.0 / 57600.0,
    71.0 / 16695.0,
    -71.0 / 1920.0,
    17253.0 / 339200.0,
    -22.0 / 525.0,
    1.0 / 40.0,
)

# continuous extension: x(t + s h) = x + h * sum_k K_k * sum_j P[k, j] s^(j+1)
DENSE_P = np.array(
    [
        [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
        [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
        [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
        [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
        [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0

# status codes returned by flow_to_event
HORIZON = 0
EVENT = 1
BUFFER_FULL = 2
UNDERFLOW = 3
NONFINITE = 4
MAX_STEPS = 5


@jitable
def eval_field(fL, fR, sign, x, p, out):
    """``out = f^L(x)`` for ``sign < 0``, else ``f^R(x)``."""
    if sign < 0.0:
        r = fL(x, p)
    else:
        r = fR(x, p)
    for i in range(out.shape[0]):
        out[i] = r[i]


@jitable
def dopri_step(fL, fR, sign, p, x, h, K, xnew):
    """One Dormand-Prince step; ``K[0]`` must hold ``f(x)`` on entry.

    Fills ``K[1..6]`` (``K[6] = f(xnew)``) and ``xnew``; returns the raw
    (unscaled) error vector.
    """
    n = x.shape[0]
    y = np.empty(n)
    for i in range(n):
        y[i] = x[i] + h * A21 * K[0, i]
    eval_field(fL, fR, sign, y, p, K[1])
    for i in range(n):
        y[i] = x[i] + h * (A31 * K[0, i] + A32 * K[1, i])
    eval_field(fL, fR, sign, y, p, K[2])
    for i in range(n):
        y[i] = x[i] + h * (A41 * K[0, i] + A42 * K[1, i] + A43 * K[2, i])
    eval_field(fL, fR, sign, y, p, K[3])
    for i in range(n):
        y[i] = x[i] + h * (A51 * K[0, i] + A52 * K[1, i] + A53 * K[2, i] + A54 * K[3, i])
    eval_field(fL, fR, sign, y, p, K[4])
    for i in range(n):
        y[i] = x[i] + h * (A61 * K[0, i] + A62 * K[1, i] + A63 * K[2, i] + A64 * K[3, i] + A65 * K[4, i])
    eval_field(fL, fR, sign, y, p, K[5])
    for i in range(n):
        xnew[i] = x[i] + h * (B1 * K[0, i] + B3 * K[2, i] + B4 * K[3, i] + B5 * K[4, i] + B6 * K[5, i])
    eval_field(fL, fR, sign, xnew, p, K[6])
    err = np.empty(n)
    for i in range(n):
        err[i] = h * (
            E1 * K[0, i] + E3 * K[2, i] + E4 * K[3, i] + E5 * K[4, i] + E6 * K[5, i] + E7 * K[6, i]
        )
    return err


@jitable
def dense_eval(x, h, K, s, out):
    s2 = s * s
    s3 = s2 * s
    s4 = s3 * s
    for i in range(x.shape[0]):
        acc = 0.0
        for k in range(7):
            acc += K[k, i] * (DENSE_P[k, 0] * s + DENSE_P[k, 1] * s2 + DENSE_P[k, 2] * s3 + DENSE_P[k, 3] * s4)
        out[i] = x[i] + h * acc


@jitable
def error_norm(err, x, xnew, rtol, atol):
    acc = 0.0
    n = x.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(x[i]), abs(xnew[i]))
        acc += (err[i] / sc) ** 2
    return math.sqrt(acc / n)


@jitable
def all_finite(v):
    for i in range(v.shape[0]):
        if not math.isfinite(v[i]):
            return False
    return True


@jitable
def _retake(fL, fR, sign, H, p, x, h, K, theta, xe):
    """Re-step from ``x`` with length ``theta * h`` and return ``H`` there."""
    Kt = np.empty_like(K)
    Kt[0] = K[0]
    dopri_step(fL, fR, sign, p, x, theta * h, Kt, xe)
    return H(xe, p)


@jitable
def locate_event(fL, fR, H, p, x, h, K, sign, lo, glo, hi, ghi, xe):
    """Find ``theta`` in ``(lo, hi]`` where ``sign * H`` reaches zero.

    ``glo > 0 >= ghi`` on the dense output. Returns ``theta`` and leaves the
    state at ``t + theta h`` (from a fresh step, not the interpolant) in ``xe``.
    """
    n = x.shape[0]
    y = np.empty(n)
    a, fa, b, fb = lo, glo, hi, ghi
    side = 0
    theta = hi
    for _ in range(200):
        if fb == fa:
            break
        c = (a * fb - b * fa) / (fb - fa)
        if not (a < c < b):
            c = 0.5 * (a + b)
        dense_eval(x, h, K, c, y)
        fc = sign * H(y, p)
        theta = c
        if fc > 0.0:
            a, fa = c, fc
            if side == 1:
                fb *= 0.5
            side = 1
        else:
            b, fb = c, fc
            if side == -1:
                fa *= 0.5
            side = -1
        if b - a <= 1e-15 * max(1.0, b) or fc == 0.0:
            break
    # the dense output is only 4th order; polish against real steps
    theta = b
    g = sign * _retake(fL, fR, sign, H, p, x, h, K, theta, xe)
    scale = 1.0
    for i in range(n):
        scale = max(scale, abs(xe[i]))
    fe = np.empty(n)
    yp = np.empty(n)
    ym = np.empty(n)
    for _ in range(6):
        if abs(g) <= 1e-15 * scale:
            break
        eval_field(fL, fR, sign, xe, p, fe)
        dt = 1e-4 * abs(theta * h) + 1e-300
        for i in range(n):
            yp[i] = xe[i] + dt * fe[i]
            ym[i] = xe[i] - dt * fe[i]
        dg = sign * (H(yp, p) - H(ym, p)) / (2.0 * dt)
        if dg == 0.0 or not math.isfinite(dg):
            break
        new_theta = theta - g / (dg * h)
        if not (lo <= new_theta <= hi + 1e-12):
            break
        g_new = sign * _retake(fL, fR, sign, H, p, x, h, K, new_theta, y)
        if abs(g_new) >= abs(g):
            break
        theta = new_theta
        g = g_new
        for i in range(n):
            xe[i] = y[i]
    return theta


def flow_to_event(fL, fR, H, p, x0, t0, t_limit, h0, rtol, atol, max_step, t_arm, sign, armed,
                  max_steps, ts_buf, xs_buf):
    """Integrate until ``sign * H`` drops to zero after having been positive.

    Parameters
    ----------
    sign : float
        ``-1`` follows ``f^L`` while watching ``H < 0``; ``+1`` follows ``f^R``
        while watching ``H > 0``. Both fields are passed so that one compiled
        specialization serves a whole model.
    t_arm : float
        Samples at or before this time neither arm nor trigger the detector;
        this skips the trivial root of an orbit that starts on the surface.
    armed : bool
        Whether ``sign * H > 0`` has already been observed (for resumption).
    ts_buf, xs_buf : ndarray
        Storage for accepted steps; length 0 disables recording.

    Returns
    -------
    status, t, x, h_next, n_recorded, armed
    """
    n = x0.shape[0]
    x = x0.copy()
    xnew = np.empty(n)
    xe = np.empty(n)
    y = np.empty(n)
    K = np.empty((7, n))
    eval_field(fL, fR, sign, x, p, K[0])
    t = t0
    h = min(h0, max_step)
    cap = ts_buf.shape[0]
    nrec = 0
    steps = 0
    if not all_finite(K[0]):
        return NONFINITE, t, x, h, nrec, armed
    while t < t_limit:
        if steps >= max_steps:
            return MAX_STEPS, t, x, h, nrec, armed
        hmin = 1e-15 * max(1.0, abs(t))
        last = False
        if t + h >= t_limit:
            h = t_limit - t
            last = True
        if h < hmin:
            if last:
                return HORIZON, t_limit, x, h, nrec, armed
            return UNDERFLOW, t, x, h, nrec, armed
        err = dopri_step(fL, fR, sign, p, x, h, K, xnew)
        if not (all_finite(xnew) and all_finite(K[6])):
            h *= 0.25
            continue
        en = error_norm(err, x, xnew, rtol, atol)
        if en > 1.0:
            h *= max(MIN_FACTOR, SAFETY * en ** -0.2)
            continue
        steps += 1
        # scan the step for a departure from the watched side
        lo = 0.0
        glo = 1.0
        found = False
        ghi = 0.0
        hi = 1.0
        for j in range(1, 5):
            s = 0.25 * j
            if j < 4:
                dense_eval(x, h, K, s, y)
                g = sign * H(y, p)
            else:
                g = sign * H(xnew, p)
            if t + s * h <= t_arm:
                continue
            if g > 0.0:
                armed = True
                lo = s
                glo = g
            elif armed:
                found = True
                hi = s
                ghi = g
                break
        if found:
            if lo == 0.0:
                glo = sign * H(x, p)
                if glo <= 0.0:
                    glo = 1e-300
            theta = locate_event(fL, fR, H, p, x, h, K, sign, lo, glo, hi, ghi, xe)
            return EVENT, t + theta * h, xe, h, nrec, armed
        t = t_limit if last else t + h
        for i in range(n):
            x[i] = xnew[i]
            K[0, i] = K[6, i]
        if cap > 0:
            ts_buf[nrec] = t
            for i in range(n):
                xs_buf[nrec, i] = x[i]
            nrec += 1
        if en == 0.0:
            factor = MAX_FACTOR
        else:
            factor = min(MAX_FACTOR, SAFETY * en ** -0.2)
        h = min(h * factor, max_step)
        if last:
            return HORIZON, t, x, h, nrec, armed
        if cap > 0 and nrec >= cap:
            return BUFFER_FULL, t, x, h, nrec, armed
    return HORIZON, t, x, h, nrec, armed


_flow_to_event_jit = None


def get_flow_kernel(jit=None):
    """``flow_to_event``, compiled when JIT is active."""
    global _flow_to_event_jit
    if not use_jit(jit):
        return flow_to_event
    if _flow_to_event_jit is None:
        _flow_to_event_jit = njit(flow_to_event)
    return _flow_to_event_jit
