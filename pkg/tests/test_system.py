import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from filippov.errors import SamplingError, UnknownModelError, UnknownParameterError
from filippov.geometry import fd_gradient
from filippov.system import FULLER_C, ModelId, Side, build_model, check_second_order, model_ids, sample_sigma
from filippov.verify import random_planar_params


def test_registry_lists_six_models():
    assert model_ids() == ["example-b", "cubic-3d", "impact-osc", "ant-colony", "planar-quadratic", "fuller"]
    for mid in model_ids():
        sys_ = build_model(mid)
        x = sys_.center + 0.1
        assert len(sys_.fL(x)) == sys_.dim == len(sys_.fR(x))
        assert math.isfinite(sys_.H(x))


def test_example_b_fields(example_b):
    x = np.array([0.3, 0.7])
    assert np.allclose(example_b.fL(x), [-0.7, -1.0])
    assert np.allclose(example_b.fR(x), [2 * 0.7 - 2, 1.0])
    assert example_b.H(x) == 0.3


def test_paper_default_parameters(impact, ant, fuller):
    assert impact.param_dict == {"k": 5.0, "b": 0.5, "kD": 10.0, "d": 0.3, "A": 9.0}
    assert ant.param("N") == 200 and ant.param("Theta") == 30 and ant.param("alpha_sa") == 0.01
    assert fuller.param("C") == pytest.approx(0.4446, abs=5e-5)
    assert FULLER_C == math.sqrt((math.sqrt(33) - 1) / 24)


def test_overrides_and_errors(cubic):
    assert build_model("cubic-3d", {"rate_R": 0.3}).param("rate_R") == 0.3
    assert cubic.with_params(rate_L=1.0).param("rate_L") == 1.0
    assert build_model(ModelId.FULLER).name == "fuller"
    with pytest.raises(UnknownModelError):
        build_model("no-such-model")
    with pytest.raises(UnknownParameterError):
        build_model("cubic-3d", {"k": 1.0})
    with pytest.raises(UnknownParameterError):
        cubic.param("k")


def test_lie_examples(example_b, cubic, impact):
    assert np.allclose(example_b.lie(Side.L, [0.0, 1.0], 2), [0.0, -1.0, 1.0])
    for x3 in (-2.0, -0.3, 0.4, 3.0):
        assert np.allclose(cubic.lie(Side.R, [0.0, 0.0, x3], 3), [0.0, 0.0, x3, 0.2], rtol=1e-12, atol=1e-14)
    assert impact.lie(Side.L, [0.0, 0.0, 0.0], 2)[2] == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("mid,expected", [
    ("example-b", False), ("cubic-3d", True), ("impact-osc", True), ("ant-colony", True), ("planar-quadratic", True),
])
def test_check_second_order(mid, expected):
    res = check_second_order(build_model(mid), n_samples=200, seed=1)
    assert res.passed is expected
    assert res.n_samples == 200


@given(seed=st.integers(0, 2 ** 31 - 1))
def test_random_constrained_planar_is_second_order(seed):
    p = random_planar_params(np.random.default_rng(seed))
    assert check_second_order(build_model("planar-quadratic", p), n_samples=30, seed=seed).passed


def test_sampling_budget_exhaustion(cubic):
    with pytest.raises(SamplingError):
        sample_sigma(cubic, 50, np.random.default_rng(0), budget=20)


def test_sigma_samples_lie_on_surface(ant, rng):
    pts = sample_sigma(ant, 40, rng)
    assert max(abs(ant.H(x)) for x in pts) <= 1e-12 * 100


@pytest.mark.parametrize("mid", ["cubic-3d", "impact-osc", "ant-colony", "planar-quadratic"])
def test_lie_recurrence_against_finite_differences(mid, rng):
    sys_ = build_model(mid)
    for _ in range(10):
        x = sys_.center + sys_.scale * rng.uniform(-0.5, 0.5, sys_.dim)
        for side in Side:
            lie = sys_.lie(side, x, 3)
            f = sys_.field(side, x)
            for m in (1, 2, 3):
                g = fd_gradient(lambda z: sys_.lie(side, z, m - 1)[m - 1], x)
                assert float(g @ f) == pytest.approx(lie[m], rel=1e-6, abs=1e-6 * (1 + abs(lie[m])))


def test_swapped_exchanges_fields(cubic):
    sw = cubic.swapped()
    x = np.array([0.1, 0.2, 0.3])
    assert np.array_equal(sw.fL(x), cubic.fR(x)) and np.array_equal(sw.fR(x), cubic.fL(x))
    assert sw.H(x) == cubic.H(x)


def test_jit_flag_from_environment():
    code = "from filippov._jit import JIT_ENABLED; print(JIT_ENABLED)"
    out = subprocess.run([sys.executable, "-c", code], env={**os.environ, "FILIPPOV_JIT": "0"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
