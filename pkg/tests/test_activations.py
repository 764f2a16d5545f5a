import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import qmc

from tslab import _accel
from tslab.activations import (
    ActivationSpec,
    DomainError,
    Hyperparams,
    Kind,
    activation_deriv,
    activation_eval,
    baseline_deriv,
    baseline_eval,
    deriv_map,
    eval_deriv_map,
    eval_map,
    tanhsoft1_deriv,
    tanhsoft1_eval,
    tanhsoft2_deriv,
    tanhsoft2_eval,
    tanhsoft_deriv,
    tanhsoft_eval,
)
from tslab.activations import _kernels, _vectorized

from .oracles import central_diff, oracle_value, params_for

ALL_KINDS = list(Kind)

# 50-digit reference values (mpmath, dps=50)
TANH_06E = 0.92619946668280483652742224307921517919065499186607
TWO_TANH_1 = 1.5231883119115297762389165652095871808255371945159
TS1_087_AT_1 = 0.92108777477767525464189921599845658294084643252211
TS2_AT_MINUS_2 = -0.16204633847764397349801676229570164027533599402507
ELISH_AT_MINUS_1 = -0.17000340156854791990215774619486658382389958863812
TANH_06 = 0.53704956699803528586182530492689670598284198771923


def spec_for(kind, u=(0.3, 0.6, 0.25, 0.7)):
    return ActivationSpec(kind, params_for(kind, u))


class TestTanhsoftFamily:
    def test_zero_function(self):
        h = Hyperparams(0, 0, 1, 1)
        for x in (-50.0, -1.0, 0.0, 0.3, 7.0, 700.0):
            assert tanhsoft_eval(h, x) == 0.0
            assert tanhsoft_deriv(h, x) == 0.0

    def test_switch_off_at_origin(self):
        assert tanhsoft_eval(Hyperparams(0, 0.6, 1, 0), 0.0) == 0.0

    def test_value_at_one(self):
        assert tanhsoft_eval(Hyperparams(0, 0.6, 1, 0), 1.0) == pytest.approx(TANH_06E, rel=1e-15)

    def test_linear_degenerate(self):
        assert tanhsoft_eval(Hyperparams(0, 1, 0, 0), 2.0) == pytest.approx(TWO_TANH_1, rel=1e-15)

    def test_deriv_at_origin(self):
        assert tanhsoft_deriv(Hyperparams(0, 0.6, 1, 0), 0.0) == pytest.approx(TANH_06, rel=1e-15)

    def test_deriv_matches_central_difference(self):
        h = Hyperparams(0, 0.6, 1, 0)
        step = 1e-6
        fd = (tanhsoft_eval(h, 0.5 + step) - tanhsoft_eval(h, 0.5 - step)) / (2 * step)
        assert tanhsoft_deriv(h, 0.5) == pytest.approx(fd, rel=1e-7)

    def test_switch_off_factor_is_literal_x(self):
        # ln(e^x) must not round-trip through exp/log
        for x in (1e-300, 0.1, 123.456, 650.0):
            h = Hyperparams(0.0, 1.0, 0.0, 0.0)
            assert tanhsoft_eval(h, x) == math.tanh(1.0) * x

    def test_nan_is_domain_error(self):
        with pytest.raises(DomainError):
            tanhsoft_eval(Hyperparams(0, 0.6, 1, 0), float("nan"))
        with pytest.raises(DomainError):
            tanhsoft_deriv(Hyperparams(0, 0.6, 1, 0), float("nan"))

    def test_overflow_regime_product_rule(self):
        # beta*e^(gamma*x) overflows; sech^2 must kill the product instead of inf*0
        h = Hyperparams(1.0, 1.5, 3.9, 1.0)
        for x in (200.0, 700.0, 1e5, 1e300):
            assert tanhsoft_deriv(h, x) == 1.0
            assert tanhsoft_eval(h, x) == pytest.approx(x, rel=1e-15)


class TestSubfamilies:
    def test_tanhsoft1(self):
        assert tanhsoft1_eval(0.87, 0.0) == 0.0
        assert tanhsoft1_eval(0.87, 1.0) == pytest.approx(TS1_087_AT_1, rel=1e-15)
        for x in (-3.0, 0.0, 2.5, 600.0):
            assert tanhsoft1_eval(0.0, x) == 0.0

    def test_tanhsoft1_is_family_member(self):
        for gamma in (0.5, 1.0, 3.0):
            h = Hyperparams(0.87, 0.0, gamma, 1.0)
            for x in np.linspace(-8, 8, 33):
                assert tanhsoft1_eval(0.87, x) == tanhsoft_eval(h, x)
                assert tanhsoft1_deriv(0.87, x) == tanhsoft_deriv(h, x)

    def test_tanhsoft2(self):
        assert tanhsoft2_eval(0.0, 1.0, 3.0) == 0.0
        assert tanhsoft2_eval(0.6, 1.0, 100.0) == 100.0
        assert tanhsoft2_eval(0.6, 1.0, -2.0) == pytest.approx(TS2_AT_MINUS_2, rel=1e-15)

    def test_tanhsoft2_large_x(self):
        assert tanhsoft2_deriv(0.6, 1.0, 50.0) == 1.0
        assert tanhsoft2_eval(0.6, 1.0, 50.0) == 50.0

    def test_tanhsoft2_is_family_member(self):
        h = Hyperparams(0.0, 0.6, 1.0, 0.0)
        for x in np.linspace(-8, 8, 33):
            assert tanhsoft2_eval(0.6, 1.0, x) == tanhsoft_eval(h, x)
            assert tanhsoft2_deriv(0.6, 1.0, x) == tanhsoft_deriv(h, x)

    def test_bounded_below(self):
        # |tanh| <= 1 and softplus <= ln 2 on x <= 0
        xs = np.linspace(-60, 60, 24001)
        for alpha in (0.1, 0.87, 2.0, 3.0):
            assert eval_map(ActivationSpec.tanhsoft1(alpha), xs).min() >= -math.log(2)
        # |x| * beta * e^(gamma x) peaks at x = -1/gamma
        for beta, gamma in ((0.6, 1.0), (1.0, 2.0), (1.9, 0.3)):
            lower = -beta / (gamma * math.e)
            assert eval_map(ActivationSpec.tanhsoft2(beta, gamma), xs).min() >= lower

    @pytest.mark.parametrize("spec", [ActivationSpec.tanhsoft1(0.87), ActivationSpec.tanhsoft2(0.6, 1)])
    def test_unbounded_above(self, spec):
        for x in (1e3, 1e6):
            assert activation_eval(spec, x) / x == pytest.approx(1.0, rel=1e-12)


class TestBaselines:
    def test_relu(self):
        relu = ActivationSpec(Kind.RELU)
        assert baseline_eval(relu, -1.0) == 0.0
        assert baseline_eval(relu, 2.0) == 2.0

    def test_swish_at_origin(self):
        swish = ActivationSpec(Kind.SWISH)
        assert baseline_eval(swish, 0.0) == 0.0
        assert baseline_deriv(swish, 0.0) == 0.5
        fd = (baseline_eval(swish, 1e-6) - baseline_eval(swish, -1e-6)) / 2e-6
        assert fd == pytest.approx(0.5, rel=1e-9)

    def test_elish_negative_branch(self):
        assert baseline_eval(ActivationSpec(Kind.ELISH), -1.0) == pytest.approx(ELISH_AT_MINUS_1, rel=1e-15)

    @pytest.mark.parametrize("kind", [Kind.RELU, Kind.LEAKY_RELU, Kind.PRELU])
    def test_kink_uses_right_derivative(self, kind):
        assert baseline_deriv(spec_for(kind), 0.0) == 1.0
        assert baseline_deriv(spec_for(kind), -0.0) == 1.0

    def test_leaky_relu_slope(self):
        lrelu = ActivationSpec(Kind.LEAKY_RELU)
        assert lrelu.params == (0.01,)
        assert baseline_eval(lrelu, -3.0) == -0.03
        assert baseline_deriv(lrelu, -3.0) == 0.01

    def test_sigmoid_never_overflows(self):
        sig = ActivationSpec(Kind.SIGMOID)
        with np.errstate(all="raise"):
            assert baseline_eval(sig, -800.0) == 0.0
            assert baseline_eval(sig, 800.0) == 1.0

    def test_softplus_positive_branch(self):
        sp = ActivationSpec(Kind.SOFTPLUS)
        assert baseline_eval(sp, 40.0) == 40.0 + math.log1p(math.exp(-40.0))
        assert baseline_eval(sp, 750.0) == 750.0


class TestMaps:
    def test_relu_map(self):
        out = eval_map(ActivationSpec(Kind.RELU), np.array([-1.0, 0.0, 2.0]))
        np.testing.assert_array_equal(out, [0.0, 0.0, 2.0])

    def test_tanhsoft2_map_origin(self):
        np.testing.assert_array_equal(eval_map(ActivationSpec.tanhsoft2(0.6, 1), np.array([0.0])), [0.0])

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("dtype", [np.float64, np.float32])
    def test_map_is_scalar_loop(self, kind, dtype):
        rng = np.random.default_rng(int(kind))
        t = (rng.standard_normal((3, 4)) * 5).astype(dtype)
        spec = spec_for(kind)
        values = eval_map(spec, t)
        derivs = deriv_map(spec, t)
        both = eval_deriv_map(spec, t)
        assert values.shape == derivs.shape == t.shape
        assert values.dtype == dtype
        expected_v = np.array([activation_eval(spec, x) for x in t.ravel()], dtype=dtype).reshape(t.shape)
        expected_d = np.array([activation_deriv(spec, x) for x in t.ravel()], dtype=dtype).reshape(t.shape)
        np.testing.assert_array_equal(values, expected_v)
        np.testing.assert_array_equal(derivs, expected_d)
        np.testing.assert_array_equal(both[0], expected_v)
        np.testing.assert_array_equal(both[1], expected_d)

    def test_map_rejects_nan(self):
        with pytest.raises(DomainError):
            eval_map(ActivationSpec(Kind.RELU), np.array([1.0, np.nan]))

    def test_non_contiguous_input(self):
        t = np.arange(24, dtype=np.float64).reshape(4, 6)[:, ::2] - 10
        spec = ActivationSpec.tanhsoft2(0.6, 1)
        np.testing.assert_array_equal(eval_map(spec, t), eval_map(spec, t.copy()))

    def test_integer_input_promoted(self):
        out = eval_map(ActivationSpec(Kind.RELU), np.array([-2, 3]))
        assert out.dtype == np.float64


def _sobol(n, seed):
    return qmc.Sobol(d=5, scramble=True, seed=seed).random(n)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_gradient_consistency(kind):
    pts = _sobol(1024, int(kind))[:1000]
    worst = 0.0
    # group by parameter draw: 25 parameter settings x 40 abscissae
    for group in np.array_split(np.arange(1000), 25):
        spec = ActivationSpec(kind, params_for(kind, pts[group[0], :4]))
        x = -20.0 + 40.0 * pts[group, 4]
        if spec.has_kink:
            x = x[np.abs(x) > 1e-4]
        d = deriv_map(spec, x)
        fd = central_diff(lambda z: eval_map(spec, z), x)
        worst = max(worst, float(np.max(np.abs(d - fd) / np.maximum(1.0, np.abs(d)))))
    assert worst <= 1e-5


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_oracle_equivalence_sample(kind):
    rng = np.random.default_rng(100 + int(kind))
    for _ in range(20):
        spec = ActivationSpec(kind, params_for(kind, rng.random(4)))
        x = float(rng.uniform(-30, 30))
        ref = oracle_value(spec, x)
        assert abs(activation_eval(spec, x) - ref) <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_stable_at_extremes(kind):
    spec = spec_for(kind, (0.9, 0.99, 0.99, 0.9))
    xs = np.array([-1e308, -1e10, -745.0, -700.0, -1e-300, 0.0, 1e-300, 700.0, 745.0, 1e10, 1e300])
    with np.errstate(all="raise"):
        assert np.all(np.isfinite(eval_map(spec, xs)))
        assert np.all(np.isfinite(deriv_map(spec, xs)))
    for x in xs:
        assert math.isfinite(activation_eval(spec, x))
        assert math.isfinite(activation_deriv(spec, x))


@settings(max_examples=300, deadline=None)
@given(
    kind=st.sampled_from(ALL_KINDS),
    u=st.tuples(*[st.floats(0, 1)] * 4),
    x=st.floats(min_value=-1e300, max_value=1e300, allow_nan=False),
)
def test_finite_everywhere(kind, u, x):
    spec = ActivationSpec(kind, params_for(kind, u))
    assert math.isfinite(activation_eval(spec, x))
    assert math.isfinite(activation_deriv(spec, x))


@pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not installed")
@pytest.mark.parametrize("kind", ALL_KINDS)
def test_numba_and_numpy_paths_agree(kind):
    rng = np.random.default_rng(7 + int(kind))
    xs = np.concatenate([rng.uniform(-30, 30, 500), [-700.0, -1e-9, 0.0, 1e-9, 700.0]])
    spec = spec_for(kind, rng.random(4))
    args = spec.kernel_args()
    v_nb = np.empty_like(xs)
    d_nb = np.empty_like(xs)
    _kernels.value_deriv_array(*args, xs, v_nb, d_nb)
    v_np = _vectorized.value(*args, xs)
    d_np = _vectorized.deriv(*args, xs)
    np.testing.assert_allclose(v_np, v_nb, rtol=1e-14, atol=1e-300)
    np.testing.assert_allclose(d_np, d_nb, rtol=1e-13, atol=1e-300)
