import numpy as np
import pytest
from hypothesis import settings

from filippov.system import PiecewiseSystem, build_model

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")


# Second-order system with an invisible-invisible x3-axis: Lambda = mu and
# f^T = (0, 0, -x3) on T, so the origin is a pseudo-equilibrium with
# restricted jacobian -1 whose stability is decided by the sign of mu.
def _lam_fL(x, p):
    return (x[1], 1.0 + p[0] * x[1], -x[2])


def _lam_fR(x, p):
    return (x[1], -1.0 + 0.0 * x[1], -x[2])


# Attracting sliding on x1 = 0 for x2 < 1 that ends where f^R turns tangent.
def _exit_fL(x, p):
    return (1.0 + 0.0 * x[0], 1.0 + 0.0 * x[0])


def _exit_fR(x, p):
    return (x[1] - 1.0, 1.0 + 0.0 * x[0])


def _x1(x, p):
    return x[0]


def lambda_system(mu):
    return PiecewiseSystem("lambda-test", 3, _lam_fL, _lam_fR, _x1, ("mu",), np.array([mu]), second_order=True)


def exit_system():
    return PiecewiseSystem("exit-test", 2, _exit_fL, _exit_fR, _x1, (), np.array([]), second_order=False)


@pytest.fixture(scope="session")
def example_b():
    return build_model("example-b")


@pytest.fixture(scope="session")
def cubic():
    return build_model("cubic-3d")


@pytest.fixture(scope="session")
def impact():
    return build_model("impact-osc")


@pytest.fixture(scope="session")
def ant():
    return build_model("ant-colony")


@pytest.fixture(scope="session")
def planar():
    return build_model("planar-quadratic")


@pytest.fixture(scope="session")
def fuller():
    return build_model("fuller")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
