import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import exit_system
from filippov import EventKind, IntegrateOptions, Mode, Order, find_pseudo_equilibria, integrate, integrate_slideT
from filippov.geometry import on_T, project_T
from filippov.integrate import RepellingChoice

SIGMA_EVENTS = (EventKind.CROSS, EventKind.SLIDE_START, EventKind.REPELLING)


def sigma_events(sys, tr):
    return [e for e in tr.events if e.kind in SIGMA_EVENTS]


def check_structure(sys, tr, gap_tol=1e-9):
    ts = [e.t for e in tr.events]
    assert ts == sorted(ts)
    for e in sigma_events(sys, tr):
        assert abs(sys.H(e.x)) <= 1e-10 * (1.0 + np.linalg.norm(e.x))
    projected = {round(e.t, 12) for e in tr.events_of(EventKind.T_CONVERGENCE)}
    for a, b in zip(tr.segments, tr.segments[1:]):
        if round(b.t0, 12) in projected:
            continue
        assert b.t0 == pytest.approx(a.t1, abs=1e-12)
        assert np.linalg.norm(np.asarray(a.xs[-1]) - np.asarray(b.xs[0])) <= gap_tol
    for seg in tr.segments:
        if seg.mode not in (Mode.FLOW_L, Mode.FLOW_R):
            continue
        want = -1.0 if seg.mode is Mode.FLOW_L else 1.0
        for x in seg.xs[1:-1]:
            h = sys.H(x)
            assert want * h > -1e-10 * (1.0 + np.linalg.norm(x))


def test_example_b_cross_then_slide(example_b):
    tr = integrate(example_b, [0.1, 0.5], 5.0)
    assert tr.modes() == [Mode.FLOW_R, Mode.FLOW_L, Mode.SLIDE_SIGMA]
    kinds = [e.kind for e in tr.events]
    assert kinds == [EventKind.CROSS, EventKind.SLIDE_START, EventKind.HORIZON]
    # right flow: x2 = 0.5 + t, x1 = 0.1 + t^2 - t
    assert tr.events[0].t == pytest.approx((1.0 - math.sqrt(0.6)) / 2.0, abs=1e-10)
    check_structure(example_b, tr)


def test_example_b_spiral_start_stays_left(example_b):
    # from (-1, 3) the left orbit meets the surface only once x2 < 0
    tr = integrate(example_b, [-1.0, 3.0], 10.0)
    first = sigma_events(example_b, tr)[0]
    assert tr.modes()[0] is Mode.FLOW_L
    assert first.t == pytest.approx(6.3166, abs=1e-3)
    check_structure(example_b, tr)


def test_slide_exit_into_right_flow():
    sys_ = exit_system()
    tr = integrate(sys_, [-0.5, 0.0], 2.0)
    assert tr.modes() == [Mode.FLOW_L, Mode.SLIDE_SIGMA, Mode.FLOW_R]
    start, exit_, end = tr.events
    assert start.kind is EventKind.SLIDE_START and start.t == pytest.approx(0.5, abs=1e-12)
    assert exit_.kind is EventKind.SLIDE_EXIT and exit_.t == pytest.approx(1.0, abs=1e-9)
    assert exit_.x[1] == pytest.approx(1.0, abs=1e-9)
    assert end.kind is EventKind.HORIZON
    # right flow from (0, 1): x2 = 1 + u, x1 = u^2 / 2
    np.testing.assert_allclose(tr.final_state, [0.5, 2.0], atol=1e-8)
    for seg in tr.segments:
        if seg.mode is Mode.SLIDE_SIGMA:
            for x in seg.xs:
                assert abs(x[0]) <= 1e-12
    check_structure(sys_, tr)


def test_cubic_slide_T_exit_time(cubic):
    tr = integrate_slideT(cubic, [0.0, 0.0, -1.0], 20.0)
    (ev,) = tr.events
    assert ev.kind is EventKind.T_EXIT
    # on T: x3' = (0.2 - 0.7 x3) / (1 - 2 x3)
    t_exact, _ = quad(lambda z: (1.0 - 2.0 * z) / (0.2 - 0.7 * z), -1.0, 0.0, epsabs=1e-13)
    assert ev.t == pytest.approx(t_exact, abs=1e-7)
    assert ev.x == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)
    assert "exit=R" in ev.note
    seg = tr.segments[0]
    assert seg.mode is Mode.SLIDE_T
    for x in seg.xs:
        assert on_T(cubic, x, tol=1e-7)
    x3 = np.array([x[2] for x in seg.xs])
    assert np.all(np.diff(x3) > 0)


@pytest.mark.parametrize("x3,boundary,t_exit", [
    (0.6, "cL exit=L", math.acos(5.0 / 9.0) - 0.6),
    (-0.6, "cR exit=R", -math.acos(8.0 / 9.0) + 0.6),
])
def test_impact_slide_T_unit_speed(impact, x3, boundary, t_exit):
    tr = integrate_slideT(impact, [0.0, 0.0, x3], 10.0)
    (ev,) = tr.events
    assert ev.kind is EventKind.T_EXIT
    assert ev.note == boundary
    assert ev.t == pytest.approx(t_exit, abs=1e-9)
    ts = np.array(tr.segments[0].ts)
    xs = np.array(tr.segments[0].xs)
    np.testing.assert_allclose(xs[:, 2] - x3, ts, atol=1e-9)


def test_slide_T_rejects_fold_free_region(cubic):
    # x3 = 0.5 lies between the two boundaries: VisInv, no second-order sliding
    tr = integrate_slideT(cubic, [0.0, 0.0, 0.5], 1.0)
    assert tr.events[-1].kind is EventKind.STEP_FAILURE


def test_ant_slide_T_leaves_pseudo_equilibrium(ant):
    (pe,) = find_pseudo_equilibria(ant, [[24.0, 5.8, 0.0]], order=Order.SECOND)
    y0 = project_T(ant, pe.point + np.array([0.0, 0.0, 0.05]))
    tr = integrate_slideT(ant, y0, 20.0)
    xs = np.array(tr.segments[0].xs)
    d = np.linalg.norm(xs - pe.point, axis=1)
    # unstable eigenvalue about 0.089
    assert d[-1] > 4.0 * d[0]


def test_cubic_spiral_ejects(cubic):
    tr = integrate(cubic, [0.0, 1e-2, -1.0], 200.0)
    crossings = tr.events_of(EventKind.CROSS)
    assert len(crossings) > 20
    x3 = [e.x[2] for e in crossings]
    assert x3[-1] > x3[0]
    (ej,) = tr.events_of(EventKind.EJECTION)
    assert tr.final_state[0] > 0.0
    check_structure(cubic, tr)


def test_fuller_geometric_switching(fuller):
    C = fuller.param_dict["C"]
    tr = integrate(fuller, [-C, 1.0], 10.0, IntegrateOptions(stop_norm=1e-8, guard_tol=1e-15))
    r = 1.0 - 4.0 * C / (2.0 * C + 1.0)
    total = (2.0 * C + 1.0) / (4.0 * C) * (1.0 + math.sqrt(r)) ** 2
    assert tr.final_time == pytest.approx(total, abs=1e-4)
    assert np.linalg.norm(tr.final_state) <= 1e-7
    sw = tr.events_of(EventKind.CROSS)
    zeta = [abs(e.x[1]) for e in sw[1::2]]
    for a, b in zip(zeta, zeta[1:]):
        assert b / a == pytest.approx(r, abs=1e-6)


@pytest.mark.parametrize("choice,final", [("stop", [0.0, 2.5]), ("left", [-2.0, 1.5]), ("right", [4.0, 3.5])])
def test_repelling_policy(example_b, choice, final):
    # (0, 2.5) is on the repelling part x2 > 1 of example-b's switching line
    tr = integrate(example_b, [0.0, 2.5], 1.0, IntegrateOptions(repelling_choice=choice))
    assert tr.events[0].kind is EventKind.REPELLING
    if choice == "stop":
        assert len(tr.events) == 1
    else:
        assert tr.events[-1].kind is EventKind.HORIZON
    np.testing.assert_allclose(tr.final_state, final, atol=1e-9)


def test_jit_and_pure_agree(cubic):
    a = integrate(cubic, [0.0, 1e-2, -1.0], 20.0, IntegrateOptions(jit=True))
    b = integrate(cubic, [0.0, 1e-2, -1.0], 20.0, IntegrateOptions(jit=False))
    assert [e.kind for e in a.events] == [e.kind for e in b.events]
    np.testing.assert_allclose([e.t for e in a.events], [e.t for e in b.events], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a.final_state, b.final_state, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("kw", [dict(rtol=0.0), dict(atol=-1.0), dict(v_converge=0.0), dict(guard_tol=-1e-8),
                                dict(repelling_choice="up")])
def test_option_validation(kw):
    with pytest.raises(ValueError):
        IntegrateOptions(**kw)


def test_horizon_must_be_positive(cubic):
    with pytest.raises(ValueError):
        integrate(cubic, [0.0, 0.0, -1.0], 0.0)


def test_repelling_choice_values():
    assert {c.value for c in RepellingChoice} == {"left", "right", "stop"}
