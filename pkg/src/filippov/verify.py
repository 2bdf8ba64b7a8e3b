"""Closed-form and property checks of the whole toolkit.

Each check returns a :class:`CheckResult` with the measured quantities; the
report is plain JSON-compatible data with no timings, so two runs with the
same seed give identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .equilibria import Order, find_pseudo_equilibria
from .integrate import EventKind, IntegrateOptions, integrate
from .retmap import fit_asymptotics, full_return
from .sliding import second_order_sliding_field, tangential_field_carvalho
from .surface import (BoundaryKind, RegionKind, TangencyChart, find_region_boundaries, lambda_value,
                      sample_tangency)
from .system import FULLER_C, PLANAR_NAMES, Side, build_model

LIE_RTOL = 1e-12


@dataclass
class CheckResult:
    id: str
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"id": self.id, "name": self.name, "passed": bool(self.passed), "details": _clean(self.details)}


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _rel_err(got, want):
    return abs(got - want) / max(1.0, abs(want))


def _lie_table_error(sys, points, table):
    """Largest relative error of the jet Lie derivatives against ``table(x) -> (L, R)`` lists."""
    worst = 0.0
    for x in points:
        wantL, wantR = table(x)
        gotL = sys.lie(Side.L, x, len(wantL))[1:]
        gotR = sys.lie(Side.R, x, len(wantR))[1:]
        for g, w in zip(list(gotL) + list(gotR), list(wantL) + list(wantR)):
            worst = max(worst, _rel_err(g, w))
    return worst


# -- individual checks -----------------------------------------------------------


def check_lie_exactness(rng, n=100):
    exb = build_model("example-b")
    pts = rng.uniform(-3.0, 3.0, size=(n, 2))
    e_exb = _lie_table_error(exb, pts, lambda x: ([-x[1], 1.0], [2 * x[1] - 2.0, 2.0]))

    cub = build_model("cubic-3d")
    pts = rng.uniform(-3.0, 3.0, size=(n, 3))
    # third left derivative is -1/2 for f^L_3 = 1/2 (the reference table has +1/2)
    e_cub = _lie_table_error(cub, pts, lambda x: ([x[1], 1.0 - x[2], -0.5], [x[1], x[2], 0.2]))

    imp = build_model("impact-osc")
    k, b, kD, d, A = (imp.param(n_) for n_ in ("k", "b", "kD", "d", "A"))
    x3 = rng.uniform(-math.pi, math.pi, size=n)
    on_t = [np.array([0.0, 0.0, s]) for s in x3]
    e_imp2 = _lie_table_error(imp, on_t, lambda x: ([0.0, A * math.cos(x[2]) - k],
                                                    [0.0, A * math.cos(x[2]) - k - kD * d]))
    e_imp3_reference = _lie_table_error(
        imp, on_t, lambda x: ([0.0, A * math.cos(x[2]) - k, -A * math.sin(x[2])],
                              [0.0, A * math.cos(x[2]) - k - kD * d, -A * math.sin(x[2])]))
    e_imp3_exact = _lie_table_error(
        imp, on_t,
        lambda x: ([0.0, A * math.cos(x[2]) - k, -b * (A * math.cos(x[2]) - k) - A * math.sin(x[2])],
                   [0.0, A * math.cos(x[2]) - k - kD * d,
                    -b * (A * math.cos(x[2]) - k - kD * d) - A * math.sin(x[2])]))
    imp0 = imp.with_params(b=0.0)
    e_imp3_undamped = _lie_table_error(
        imp0, on_t, lambda x: ([0.0, A * math.cos(x[2]) - k, -A * math.sin(x[2])],
                               [0.0, A * math.cos(x[2]) - k - kD * d, -A * math.sin(x[2])]))
    parts = {
        "example_b": e_exb,
        "cubic_3d": e_cub,
        "impact_second": e_imp2,
        "impact_third_reference": e_imp3_reference,
    }
    return CheckResult("C1", "Lie-engine exactness", all(v <= LIE_RTOL for v in parts.values()), {
        **{f"max_rel_err_{k_}": v for k_, v in parts.items()},
        "max_rel_err_impact_third_with_damping": e_imp3_exact,
        "max_rel_err_impact_third_undamped": e_imp3_undamped,
        "tolerance": LIE_RTOL,
    })


def check_tangential_field(rng, n=100):
    cub = build_model("cubic-3d")
    s = np.concatenate([rng.uniform(-3.0, -0.05, n // 2), rng.uniform(1.05, 4.0, n - n // 2)])
    pts_c = [np.array([0.0, 0.0, v]) for v in s]
    ant = build_model("ant-colony")
    pts_a = sample_tangency(ant, n, rng, region=(RegionKind.VISVIS, RegionKind.INVINV), interval=(-5.0, 10.0),
                            seed=[24.0, 5.8, 0.0])
    worst = {}
    for name, sys, pts in (("cubic_3d", cub, pts_c), ("ant_colony", ant, pts_a)):
        w = 0.0
        for x in pts:
            fT = second_order_sliding_field(sys, x)[0]
            ft = tangential_field_carvalho(sys, x)
            w = max(w, float(np.linalg.norm(ft - fT)) / (1.0 + float(np.linalg.norm(fT))))
        worst[name] = w
    return CheckResult("C2", "tangential field equals f^T", all(v <= 1e-12 for v in worst.values()),
                       {"max_scaled_diff": worst, "tolerance": 1e-12})


def check_cubic_asymptotics():
    cub = build_model("cubic-3d")
    fit = fit_asymptotics(cub, [0.0, 0.0, -1.0])
    c_ref = 2.0 / 3.0 * -0.325
    rb = abs(fit.beta_hat - 3.0) / 3.0
    rc = abs(fit.c_hat - c_ref) / abs(c_ref)
    ratios = list(fit.tau_ratios) + list(fit.P_ratios)
    ok_ratios = bool(ratios) and all(3.0 <= r <= 5.0 for r in ratios)
    return CheckResult("C3", "return-map coefficients at (0,0,-1)", rb <= 0.01 and rc <= 0.05 and ok_ratios, {
        "beta_hat": fit.beta_hat, "beta_rel_dev": rb,
        "c_hat": fit.c_hat, "c_ref": c_ref, "c_rel_dev": rc,
        "tau_residual_ratios": fit.tau_ratios, "P_residual_ratios": fit.P_ratios,
    })


def random_planar_params(rng):
    """Planar-quadratic coefficients obeying the second-order and invisible-fold constraints."""
    a2 = rng.uniform(0.5, 2.0)
    a5 = rng.uniform(-1.0, 1.0)
    vals = {}
    for s in "LR":
        for i in range(6):
            vals[f"a{i}{s}"] = rng.uniform(-1.0, 1.0)
            vals[f"b{i}{s}"] = rng.uniform(-1.0, 1.0)
        vals[f"a0{s}"] = 0.0
        vals[f"a2{s}"] = a2
        vals[f"a5{s}"] = a5
        # L^2 H at the origin, a2 b0, is positive on the left and negative on the right
        vals[f"b0{s}"] = rng.uniform(0.5, 2.0) * (1.0 if s == "L" else -1.0)
    return {k: vals[k] for k in PLANAR_NAMES}


def planar_sigma(p, side):
    return p[f"a1{side}"] / p[f"b0{side}"] + p[f"b2{side}"] / p[f"b0{side}"] - p[f"a5{side}"] / p[f"a2{side}"]


def planar_r2_coefficient(sys, rs=None, n_fit=4):
    """Intercept of ``(P(r) - r) / r^2`` over the ``n_fit`` smallest radii."""
    rs = 1e-2 * 0.5 ** np.arange(8) if rs is None else np.asarray(rs)
    vals = []
    for r in sorted(rs)[:n_fit]:
        s = full_return(sys, [0.0, r])
        vals.append(((s.P[1] - r) / r ** 2, r))
    y = np.array([v for v, _ in vals])
    u = np.array([r for _, r in vals])
    A = np.vstack([np.ones_like(u), u]).T
    return float(np.linalg.lstsq(A, y, rcond=None)[0][0])


def check_planar_identity(rng, n=50, min_gap=0.1):
    base = build_model("planar-quadratic")
    worst_id, worst_coef, used = 0.0, 0.0, 0
    for _ in range(n):
        while True:
            p = random_planar_params(rng)
            gap = planar_sigma(p, "L") - planar_sigma(p, "R")
            if abs(gap) >= min_gap:
                break
        sys = base.with_params(**p)
        lam = lambda_value(sys, [0.0, 0.0])
        worst_id = max(worst_id, abs(lam * p["a2L"] - gap))
        c = planar_r2_coefficient(sys)
        worst_coef = max(worst_coef, abs(c - 2.0 * gap / 3.0) / abs(2.0 * gap / 3.0))
        used += 1
    return CheckResult("C4", "planar Lambda identity and r^2 coefficient", worst_id <= 1e-10 and worst_coef <= 0.05, {
        "systems": used, "max_identity_err": worst_id, "max_r2_rel_dev": worst_coef, "min_sigma_gap": min_gap,
    })


def check_impact_geometry(rng, n=100):
    imp = build_model("impact-osc")
    bs = find_region_boundaries(imp, [0.0, 0.0, 0.7], (0.0, math.pi / 2))
    got = {b.kind: b.parameter for b in bs}
    want = {BoundaryKind.CL: math.acos(5 / 9), BoundaryKind.CR: math.acos(8 / 9), BoundaryKind.CHI: math.acos(13 / 18)}
    errs = {k.value: abs(got.get(k, math.inf) - v) for k, v in want.items()}
    chi = got.get(BoundaryKind.CHI, math.nan)
    chart = TangencyChart(imp, [0.0, 0.0, 0.7], 2)
    mismatches_located = 0
    mismatches_reference = 0
    for s in rng.uniform(want[BoundaryKind.CR], want[BoundaryKind.CL], n):
        lam = lambda_value(imp, chart.point(float(s)))
        if (lam < 0.0) != (s > chi):
            mismatches_located += 1
        if (lam < 0.0) != (s > want[BoundaryKind.CHI]):
            mismatches_reference += 1
    passed = all(e <= 1e-9 for e in errs.values()) and mismatches_located == 0
    return CheckResult("C5", "impact oscillator region boundaries", passed, {
        "located": {k.value: v for k, v in got.items()},
        "expected": {k.value: v for k, v in want.items()},
        "abs_err": errs,
        "lambda_sign_mismatches_vs_located_chi": mismatches_located,
        "lambda_sign_mismatches_vs_reference_chi": mismatches_reference,
        "samples": n,
    })


def spiral_crossings(traj):
    """``V`` at successive crossings from ``L`` to ``R``."""
    return [e.nu for e in traj.events if e.kind is EventKind.CROSS and e.nu > 0.0]


def check_no_zeno(x0=(0.0, 1e-2, -1.0), t_end=200.0, tols=(1e-3, 1e-4, 1e-5)):
    cub = build_model("cubic-3d")
    times = []
    last = None
    for tol in tols:
        tr = integrate(cub, np.array(x0), t_end, IntegrateOptions(v_converge=tol, record=False))
        conv = tr.events_of(EventKind.T_CONVERGENCE)
        times.append(conv[0].t if conv else math.nan)
        last = tr
    increasing = all(math.isfinite(t) for t in times) and all(a < b for a, b in zip(times, times[1:]))
    V = np.array(spiral_crossings(last))
    bound_ok, a_hat, first_violation = False, math.nan, None
    if V.size >= 6:
        a_hat = float(max((V[j] - V[j + 1]) / V[j] ** 2 for j in range(5)))
        j = np.arange(V.size)
        bad = np.nonzero(V < V[0] / (1.0 + 2.0 * a_hat * V[0] * j))[0]
        bound_ok = bad.size == 0
        first_violation = int(bad[0]) if bad.size else None
    ends = [e.kind.value for e in last.events[-3:]]
    return CheckResult("C6", "no Zeno convergence to T", increasing and bound_ok, {
        "x0": list(x0), "v_converge": list(tols), "time_to_threshold": times,
        "revolutions": int(V.size), "a_hat": a_hat, "V_bound_holds": bound_ok,
        "first_bound_violation": first_violation, "final_events": ends,
    })


def check_consistency(deltas=None, window=2.0):
    cub = build_model("cubic-3d")
    deltas = 1e-3 * 0.5 ** np.arange(5) if deltas is None else deltas
    y = np.array([0.0, 0.0, -1.0])
    xi = solve_ivp(lambda t, z: second_order_sliding_field(cub, z, check=False)[0], (0.0, window), y,
                   rtol=1e-12, atol=1e-14, dense_output=True)
    ratios = []
    for d in deltas:
        tr = integrate(cub, np.array([0.0, d, -1.0]), window)
        r = max(float(np.linalg.norm(x - xi.sol(t))) for t, x, _ in tr.samples())
        ratios.append(r / d)
    ok = all(r <= 2.0 * ratios[0] for r in ratios)
    return CheckResult("C7", "spiral stays within M delta of f^T flow", ok, {
        "deltas": list(deltas), "max_dist_over_delta": ratios,
    })


def fuller_closed_form(C=FULLER_C):
    r = 1.0 - 4.0 * C / (2.0 * C + 1.0)
    per_rev = (1.0 + math.sqrt(r)) ** 2
    total = (2.0 * C + 1.0) / (4.0 * C) * per_rev
    return r, per_rev, total


def check_fuller(stop_norm=1e-8):
    ful = build_model("fuller")
    C = ful.param("C")
    r, per_rev, total = fuller_closed_form(C)
    opts = IntegrateOptions(stop_norm=stop_norm, guard_tol=1e-15, record=False)
    tr = integrate(ful, np.array([-C, 1.0]), 10.0, opts)
    sw = [e for e in tr.events if e.kind is EventKind.CROSS]
    # one revolution spans two switches; zeta is |x2| on the starting branch
    zeta = [1.0] + [abs(e.x[1]) for e in sw[1::2]]
    ratio_err = max(abs(zeta[j + 1] / zeta[j] - r) for j in range(min(len(zeta) - 1, 3)))
    rev_err = abs(sw[1].t - per_rev) if len(sw) > 1 else math.inf
    end = tr.events[-1]
    reached = end.kind is EventKind.HORIZON and "stop_norm" in end.note
    t_err = abs(end.t - total) if reached else math.inf
    return CheckResult("C8", "Fuller switching and total time", ratio_err <= 1e-6 and rev_err <= 1e-6 and t_err <= 1e-4, {
        "ratio": r, "ratio_err": ratio_err, "per_rev_time": per_rev, "per_rev_err": rev_err,
        "total_time_closed_form": total, "total_time_simulated": end.t, "total_time_err": t_err,
        "switches": len(sw),
    })


def check_equilibria():
    exb = build_model("example-b")
    pes = find_pseudo_equilibria(exb, [[0.0, 1.5], [0.0, 3.0]], Order.FIRST)
    ok_b = (len(pes) == 1 and np.linalg.norm(pes[0].point - [0.0, 2.0]) <= 1e-8
            and abs(pes[0].jacobian[0, 0] + 0.25) <= 1e-8 and pes[0].verdict.value == "Unstable")
    ant = build_model("ant-colony")
    chart = TangencyChart(ant, np.array([24.0, 5.8, 0.0]), 2)
    seeds = [chart.point(float(s)) for s in np.linspace(-10.0, 40.0, 11)]
    pa = find_pseudo_equilibria(ant, seeds, Order.SECOND)
    visvis = [q for q in pa if q.region is RegionKind.VISVIS]
    ok_a = len(visvis) == 1 and visvis[0].verdict.value == "Unstable"
    return CheckResult("C9", "pseudo-equilibria and their stability", ok_b and ok_a, {
        "example_b": [q.to_dict() for q in pes],
        "example_b_jacobian": [float(pes[0].jacobian[0, 0])] if pes else [],
        "ant_colony": [q.to_dict() for q in pa],
    })


CHECKS = {
    "C1": lambda rng: check_lie_exactness(rng),
    "C2": lambda rng: check_tangential_field(rng),
    "C3": lambda rng: check_cubic_asymptotics(),
    "C4": lambda rng: check_planar_identity(rng),
    "C5": lambda rng: check_impact_geometry(rng),
    "C6": lambda rng: check_no_zeno(),
    "C7": lambda rng: check_consistency(),
    "C8": lambda rng: check_fuller(),
    "C9": lambda rng: check_equilibria(),
}


def run_checks(seed=0, only=None):
    """Run the numeric checks ``C1``..``C9`` with per-check generators seeded from ``seed``."""
    results = []
    for i, (cid, fn) in enumerate(CHECKS.items()):
        if only and cid not in only:
            continue
        rng = np.random.default_rng([seed, i])
        results.append(fn(rng))
    return results


def report(results, seed):
    return {"seed": int(seed), "passed": all(r.passed for r in results),
            "checks": [r.to_dict() for r in results]}


def check_determinism(seed=0, only=None, first=None):
    """``C10``: a second run with the same seed reproduces the report exactly."""
    first = report(run_checks(seed, only), seed) if first is None else first
    again = report(run_checks(seed, only), seed)
    ids = [c["id"] for c in first["checks"]]
    return CheckResult("C10", "deterministic reports", first == again, {"checks_compared": ids})


def verify(seed=0, only=None):
    """Full report: ``C1``..``C9`` plus the determinism check ``C10``."""
    want_c10 = only is None or "C10" in only
    only = None if only is None else [c for c in only if c != "C10"] or None
    results = run_checks(seed, only)
    if want_c10:
        results.append(check_determinism(seed, only, first=report(results, seed)))
    return report(results, seed)
