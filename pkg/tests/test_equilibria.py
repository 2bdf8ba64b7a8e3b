import numpy as np
import pytest

from conftest import lambda_system
from filippov import Order, PiecewiseSystem, RegionKind, SurfaceKind, Verdict, find_pseudo_equilibria
from filippov.equilibria import Admissibility, classify_stability, restricted_jacobian
from filippov.geometry import constraint_matrix, grad_H, tangent_basis
from filippov.sliding import second_order_sliding_field, sliding_field


# Attracting sliding on x1 = 0 with f^S = (0, -x2 + x3, -x2 - 2 x3): a stable focus.
def _focus_fL(x, p):
    return (1.0 + 0.0 * x[0], -x[1] + x[2], -x[1] - 2.0 * x[2])


def _focus_fR(x, p):
    return (-1.0 + 0.0 * x[0], -x[1] + x[2], -x[1] - 2.0 * x[2])


def _x1(x, p):
    return x[0]


def focus_system():
    return PiecewiseSystem("focus-test", 3, _focus_fL, _focus_fR, _x1, (), np.array([]), second_order=False)


def test_example_b_pseudo_equilibrium(example_b):
    (pe,) = find_pseudo_equilibria(example_b, [[0.0, 1.5], [0.0, 3.0], [0.0, 2.2]])
    np.testing.assert_allclose(pe.point, [0.0, 2.0], atol=1e-10)
    assert pe.order is Order.FIRST
    assert pe.admissibility is Admissibility.ADMISSIBLE
    assert pe.region is SurfaceKind.REPELLING_SLIDING
    assert pe.jacobian.shape == (1, 1)
    assert pe.jacobian[0, 0] == pytest.approx(-0.25, abs=1e-8)
    assert pe.verdict is Verdict.UNSTABLE
    assert np.linalg.norm(sliding_field(example_b, pe.point)[0]) <= 1e-10


def test_ant_unique_second_order_equilibrium(ant):
    seeds = [[24.0, 5.8, z] for z in np.linspace(-10.0, 40.0, 11)]
    (pe,) = find_pseudo_equilibria(ant, seeds, order=Order.SECOND)
    assert pe.region is RegionKind.VISVIS
    assert pe.admissibility is Admissibility.ADMISSIBLE
    assert pe.verdict is Verdict.UNSTABLE
    assert pe.jacobian.shape == (1, 1)
    assert pe.eigenvalues[0].real > 0.0
    assert np.linalg.norm(second_order_sliding_field(ant, pe.point, check=False)[0]) <= 1e-10
    np.testing.assert_allclose(pe.point, [24.8996, 3.51406, 1.58635], atol=1e-4)


def test_impact_has_no_second_order_equilibrium(impact):
    seeds = [[0.0, 0.0, z] for z in np.linspace(-0.9, 0.9, 7)]
    assert find_pseudo_equilibria(impact, seeds, order=Order.SECOND) == []


@pytest.mark.parametrize("mu,verdict", [(0.5, Verdict.UNSTABLE), (-0.5, Verdict.ASYMPTOTICALLY_STABLE),
                                        (0.0, Verdict.INCONCLUSIVE)])
def test_verdict_follows_lambda_sign(mu, verdict):
    sys_ = lambda_system(mu)
    (pe,) = find_pseudo_equilibria(sys_, [[0.01, 0.02, 0.3]], order=Order.SECOND)
    np.testing.assert_allclose(pe.point, 0.0, atol=1e-12)
    assert pe.region is RegionKind.INVINV
    assert pe.lam == pytest.approx(mu, abs=1e-12)
    assert pe.eigenvalues[0].real == pytest.approx(-1.0, abs=1e-8)
    assert pe.verdict is verdict


def test_positive_eigenvalue_overrides_attraction():
    pe = find_pseudo_equilibria(lambda_system(-0.5), [[0.0, 0.0, 0.1]], order=Order.SECOND)[0]
    pe.eigenvalues = np.array([0.3 + 0.0j])
    assert classify_stability(None, pe) is Verdict.UNSTABLE
    pe.eigenvalues = np.array([0.0 + 1.0j])
    assert classify_stability(None, pe) is Verdict.INCONCLUSIVE


def test_stable_focus_on_sigma():
    sys_ = focus_system()
    (pe,) = find_pseudo_equilibria(sys_, [[0.0, 0.4, -0.3]])
    np.testing.assert_allclose(pe.point, 0.0, atol=1e-12)
    assert pe.region is SurfaceKind.ATTRACTING_SLIDING
    assert pe.verdict is Verdict.ASYMPTOTICALLY_STABLE
    np.testing.assert_allclose(sorted(pe.eigenvalues.real), [-1.5, -1.5], atol=1e-8)


@pytest.mark.parametrize("angle", [0.3, 1.1, 2.5])
def test_chart_rotation_invariance(angle):
    sys_ = focus_system()
    x = np.zeros(3)
    Q = tangent_basis(grad_H(sys_, x))
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    e0 = np.sort_complex(np.linalg.eigvals(restricted_jacobian(sys_, x, Order.FIRST, basis=Q)))
    e1 = np.sort_complex(np.linalg.eigvals(restricted_jacobian(sys_, x, Order.FIRST, basis=Q @ R)))
    np.testing.assert_allclose(e1, e0, atol=1e-8)


def test_chart_sign_flip_on_T(ant):
    (pe,) = find_pseudo_equilibria(ant, [[24.0, 5.8, 0.0]], order=Order.SECOND)
    Q = tangent_basis(constraint_matrix(ant, pe.point))
    a = restricted_jacobian(ant, pe.point, Order.SECOND, basis=Q)
    b = restricted_jacobian(ant, pe.point, Order.SECOND, basis=-Q)
    assert b[0, 0] == pytest.approx(a[0, 0], abs=1e-8)


def test_divergent_seed_is_skipped(example_b):
    # f^S is undefined where both Lie derivatives coincide (x2 = 2/3 on example-b)
    found = find_pseudo_equilibria(example_b, [[0.0, 2.0 / 3.0], [0.0, 2.5]])
    assert len(found) == 1


def test_to_dict(example_b):
    (pe,) = find_pseudo_equilibria(example_b, [[0.0, 1.5]])
    d = pe.to_dict()
    assert d["order"] == "First" and d["verdict"] == "Unstable" and d["region"] == "RepellingSliding"
    assert d["lambda"] is None
