import math

import numpy as np
import pytest

from filippov import RegionKind, Side, build_model, fit_asymptotics, full_return, half_return, lambda_value
from filippov.errors import InsufficientDataError, RegionError
from filippov.retmap import default_grid, sigma_point
from filippov.surface import BoundaryKind, find_region_boundaries, sample_tangency
from filippov.verify import planar_sigma, planar_r2_coefficient, random_planar_params


def test_right_half_map_time(cubic):
    nu = 1e-4
    y, t = half_return(cubic, Side.R, [0.0, nu, -1.0])
    # L^2_R H = -1 at (0, 0, -1)
    assert abs(t / (2.0 * nu) - 1.0) <= 1e-3
    assert abs(cubic.H(y)) <= 1e-12


def test_right_half_map_quadratic_coefficient(cubic):
    # V at return = -nu + (2/3) L^3_R / (L^2_R)^2 nu^2 with L^3_R = 1/5
    nus = default_grid()
    vals = []
    for nu in nus:
        y, _ = half_return(cubic, Side.R, [0.0, nu, -1.0])
        vals.append((cubic.V(y) + nu) / nu ** 2)
    small = np.array(vals[-4:])
    u = nus[-4:]
    intercept = np.polyfit(u, small, 1)[1]
    assert intercept == pytest.approx(2.0 / 15.0, rel=0.05)


@pytest.mark.parametrize("side,nu", [(Side.R, -1e-3), (Side.L, 1e-3)])
def test_half_map_wrong_half_plane(cubic, side, nu):
    with pytest.raises(RegionError):
        half_return(cubic, side, [0.0, nu, -1.0])


def test_sigma_point_hits_level(cubic):
    x = sigma_point(cubic, [0.3, 0.2, -1.0], 2e-3)
    assert abs(cubic.H(x)) <= 1e-14
    assert cubic.V(x) == pytest.approx(2e-3, abs=1e-14)


def test_full_return_sample_invariants(cubic):
    x = sigma_point(cubic, [0.0, 0.0, -1.0], 1e-3)
    s = full_return(cubic, x)
    assert abs(cubic.H(s.P)) <= 1e-10
    assert abs(cubic.H(s.PR)) <= 1e-10
    assert s.tau == s.tauR + s.tauL
    assert s.V_return == cubic.V(s.P)
    assert s.tau / s.nu == pytest.approx(3.0, rel=0.01)


def test_cubic_fit(cubic):
    fit = fit_asymptotics(cubic, [0.0, 0.0, -1.0])
    assert fit.beta_pred == pytest.approx(3.0)
    assert fit.c_pred == pytest.approx(-0.21666666666666667)
    assert fit.beta_rel_dev <= 0.01
    assert fit.c_rel_dev <= 0.05
    for r in fit.tau_ratios + fit.P_ratios:
        assert 3.0 <= r <= 5.0
    assert not fit.dropped


def test_fit_rejects_visible_base(cubic):
    with pytest.raises(RegionError):
        fit_asymptotics(cubic, [0.0, 0.0, 2.0])


def test_fit_needs_three_returns(cubic):
    # the right orbit escapes for these large amplitudes far above the fold
    with pytest.raises(InsufficientDataError):
        fit_asymptotics(cubic, [0.0, 0.0, -0.05], nus=[50.0, 40.0, 30.0])


def test_planar_coefficient(rng):
    base = build_model("planar-quadratic")
    gap = 0.0
    while abs(gap) < 0.1:
        p = random_planar_params(rng)
        gap = planar_sigma(p, "L") - planar_sigma(p, "R")
    sys_ = base.with_params(**p)
    assert lambda_value(sys_, [0.0, 0.0]) * p["a2L"] == pytest.approx(gap, abs=1e-10)
    assert planar_r2_coefficient(sys_) == pytest.approx(2.0 * gap / 3.0, rel=0.05)


def test_impact_fit_vanishes_at_chi(impact):
    marks = find_region_boundaries(impact, [0.0, 0.0, 0.0], (0.3, 1.2))
    chi = next(b.parameter for b in marks if b.kind is BoundaryKind.CHI)
    off = fit_asymptotics(impact, [0.0, 0.0, 0.6])
    at = fit_asymptotics(impact, [0.0, 0.0, chi])
    assert off.c_hat == pytest.approx(off.c_pred, rel=0.05)
    assert abs(at.c_hat) <= 1e-3 * abs(off.c_hat)


@pytest.mark.parametrize("mid,interval,seed", [
    ("cubic-3d", (-3.0, -0.05), [0.0, 0.0, -1.0]),
    ("impact-osc", (0.48, 0.98), [0.0, 0.0, 0.7]),
])
def test_sign_law(mid, interval, seed, rng):
    sys_ = build_model(mid)
    pts = sample_tangency(sys_, 20, rng, region=(RegionKind.INVINV,), interval=interval, seed=seed)
    assert len(pts) == 20
    for x in pts:
        lam = lambda_value(sys_, x)
        s = full_return(sys_, sigma_point(sys_, x, 1e-4))
        assert math.copysign(1.0, s.V_return - s.nu) == math.copysign(1.0, lam)
