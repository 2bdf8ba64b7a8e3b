"""Compare the numba-compiled flow kernel with the same code run as plain Python.

Usage::

    python3 benchmarks/bench_kernels.py [--t-end T] [--repeat R]

Both variants integrate the same cubic-3d spiral and must agree to round-off;
the compiled timing excludes the one-off compilation, which is reported
separately.
"""

import argparse
import time

import numpy as np

from filippov import IntegrateOptions, build_model, integrate
from filippov._jit import HAVE_NUMBA


def run(jit, t_end, x0):
    sys_ = build_model("cubic-3d")
    opts = IntegrateOptions(jit=jit, record=False)
    t = time.perf_counter()
    traj = integrate(sys_, x0, t_end, opts)
    return time.perf_counter() - t, traj


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=2.0, help="integration horizon")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    x0 = np.array([0.0, 1e-2, -1.0])
    if not HAVE_NUMBA:
        print("numba is not installed; only the pure-Python path is available")
    first, _ = run(True, 1e-3, x0)
    print(f"compile + first call: {first:.2f} s")
    rows = []
    for jit in (True, False):
        best = min(run(jit, args.t_end, x0)[0] for _ in range(args.repeat))
        rows.append((jit, best))
    _, a = run(True, args.t_end, x0)
    _, b = run(False, args.t_end, x0)
    diff = float(np.max(np.abs(a.final_state - b.final_state)))
    for jit, best in rows:
        print(f"{'numba' if jit else 'python':<7} {best:8.3f} s  ({len(a.events)} events)")
    print(f"speed-up: {rows[1][1] / rows[0][1]:.1f}x   max final-state difference: {diff:.3e}")


if __name__ == "__main__":
    main()
