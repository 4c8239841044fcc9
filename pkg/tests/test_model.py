from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdde_euler.errors import ConfigurationError
from sdde_euler.model import (AffineHistory, DelaySpec, InitialSegment, SDDEProblem,
                              TestProblemParams, build_test_problem,
                              evaluate_initial, kappa, signed_pow, table1_params,
                              validate_delays)


@pytest.mark.parametrize("n,t0,t,expected", [
    (4, 0.0, 0.3, 0.25),
    (512, 0.0, 1.0, 1.0),
    (2, 1.0, 1.75, 1.5),
])
def test_kappa_examples(n, t0, t, expected):
    assert kappa(n, t0, t) == expected


def test_kappa_rejects_t_before_t0():
    with pytest.raises(ValueError):
        kappa(4, 1.0, 0.5)


rationals = st.fractions(min_value=-50, max_value=50, max_denominator=10 ** 6)


@settings(max_examples=500, deadline=None)
@given(n=st.integers(1, 10 ** 6), t0=rationals, dt=st.fractions(0, 100, max_denominator=10 ** 6))
def test_kappa_exact_properties(n, t0, dt):
    t = t0 + dt
    k = kappa(n, t0, t)
    assert isinstance(k, Fraction)
    assert 0 <= t - k < Fraction(1, n)
    assert kappa(n, t0, k) == k
    assert ((k - t0) * n).denominator == 1


@settings(max_examples=500, deadline=None)
@given(n=st.integers(1, 10 ** 6),
       t0=st.floats(-1e3, 1e3, allow_nan=False),
       dt=st.floats(0, 1e3, allow_nan=False))
def test_kappa_float_sandwich(n, t0, dt):
    t = t0 + dt
    if t < t0:
        return
    k = kappa(n, t0, t)
    assert k <= t
    # one rounding of the exact grid point, so the gap may exceed 1/n by an ulp
    assert t - k < 1.0 / n + 4 * np.spacing(max(abs(t), abs(k), 1.0))


@settings(max_examples=300, deadline=None)
@given(log_n=st.integers(0, 20), j0=st.integers(-2 ** 20, 2 ** 20),
       t=st.floats(0, 1e4, allow_nan=False))
def test_kappa_float_idempotent_on_dyadic_grids(log_n, j0, t):
    n = 2 ** log_n
    t0 = j0 / 2.0 ** 10
    t = t0 + t
    k = kappa(n, t0, t)
    assert kappa(n, t0, k) == k


def test_kappa_bulk_random():
    # 1e5 random (n, t0, t) triples, checked in exact arithmetic
    rng = np.random.default_rng(2024)
    ns = rng.integers(1, 4096, size=100_000)
    t0s = rng.integers(-10 ** 6, 10 ** 6, size=100_000)
    dts = rng.integers(0, 10 ** 7, size=100_000)
    den = 1024
    for n, a, d in zip(ns.tolist(), t0s.tolist(), dts.tolist()):
        t0 = Fraction(a, den)
        t = t0 + Fraction(d, den)
        k = kappa(n, t0, t)
        assert 0 <= t - k < Fraction(1, n)
        assert kappa(n, t0, k) == k


@pytest.mark.parametrize("z,l,expected", [(4.0, 0.5, 2.0), (-4.0, 0.5, -2.0),
                                          (-3.5, 1.0, -3.5), (0.0, 0.5, 0.0)])
def test_signed_pow_examples(z, l, expected):
    assert signed_pow(z, l) == expected


@given(z=st.floats(-1e6, 1e6), l=st.floats(0.05, 4.0))
def test_signed_pow_odd(z, l):
    assert signed_pow(-z, l) == -signed_pow(z, l)
    assert signed_pow(z, 1.0) == z


@given(z=st.floats(-1e3, 1e3), dz=st.floats(0, 1e3), l=st.floats(0.05, 4.0))
def test_signed_pow_monotone(z, dz, l):
    assert signed_pow(z + dz, l) >= signed_pow(z, l)


def test_evaluate_initial():
    seg = InitialSegment(1.0, AffineHistory(1.0, 1.0))
    assert evaluate_initial(seg, -1.0)[0] == 0.0
    assert evaluate_initial(seg, 0.0)[0] == 1.0
    with pytest.raises(ValueError):
        evaluate_initial(seg, 0.5)
    with pytest.raises(ValueError):
        evaluate_initial(seg, -1.5)


def _problem(delays, tau=1.0, T=2.0):
    return SDDEProblem(1, 1, lambda t, y, x: 0 * x, lambda t, y, x: 0 * x[..., None],
                       delays, InitialSegment(tau, AffineHistory(0.0, 1.0)), T, tau)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 64])
def test_validate_constant_lag(n):
    assert validate_delays(_problem([DelaySpec("constant_lag", lag=1.0)]), n).ok


def test_validate_floor_delay():
    report = validate_delays(_problem([DelaySpec("piecewise_floor")]), 8)
    assert report.ok


def test_validate_rejects_identity_delay():
    report = validate_delays(_problem([DelaySpec("custom", func=lambda t: t)]), 2)
    assert not report.ok
    v = report.violation
    assert (v.delay, v.t, v.value, v.bound) == (0, 0.5, 0.5, 0.0)


def test_validate_rejects_below_history():
    report = validate_delays(_problem([DelaySpec("constant_lag", lag=1.5)]), 4)
    assert report.violation.reason == "lower"


def test_validate_rejects_decreasing():
    report = validate_delays(
        _problem([DelaySpec("custom", func=lambda t: -t / 2)]), 4)
    assert report.violation.reason == "monotone"


def test_validate_flags_second_period():
    report = validate_delays(
        _problem([DelaySpec("piecewise_floor", period=0.5)]), 4)
    assert report.violation.reason == "period"


@settings(max_examples=40, deadline=None)
@given(tau=st.sampled_from([0.25, 0.5, 1.0, 1.5, 3.0, 0.1]), N=st.integers(1, 4),
       n=st.integers(1, 16))
def test_both_named_delay_kinds_accepted(tau, N, n):
    prob = _problem([DelaySpec("constant_lag", lag=tau), DelaySpec("piecewise_floor")],
                    tau=tau, T=N * tau)
    assert validate_delays(prob, n).ok


def test_horizon_must_be_multiple_of_period():
    with pytest.raises(ConfigurationError):
        _problem([DelaySpec("constant_lag", lag=1.0)], tau=1.0, T=1.5)


def test_delay_spec_validation():
    with pytest.raises(ConfigurationError):
        DelaySpec("constant_lag", lag=0.0)
    with pytest.raises(ConfigurationError):
        DelaySpec("weird")


def test_table1_drift():
    prob = build_test_problem(table1_params())
    y = np.ones((1, 1))
    x = np.ones(1)
    assert prob.drift(0.0, y, x)[0] == -4.0
    assert prob.diffusion(0.0, y, x).shape == (1, 1)
    assert prob.horizon == 2.0 and prob.dim_state == prob.dim_noise == 1
    assert validate_delays(prob, 16).ok


def test_zero_noise_coefficients():
    prob = build_test_problem(TestProblemParams(beta1=0, beta2=0, beta3=0))
    x = np.linspace(-3, 3, 7)[:, None]
    y = x[:, None, :]
    assert np.all(prob.diffusion(0.3, y, x) == 0)


def test_gbm_coefficients():
    prob = build_test_problem(TestProblemParams(a=0, b=0, beta1=0, beta2=1, beta3=0))
    x = np.array([[2.0], [-1.5]])
    y = np.array([[[7.0]], [[3.0]]])
    assert np.all(prob.drift(0.0, y, x) == 0)
    assert np.array_equal(prob.diffusion(0.0, y, x)[..., 0], x)


def test_build_rejects_bad_params():
    for kw in ({"tau": 0.0}, {"l1": 0.0}, {"l2": -1.0}):
        with pytest.raises(ConfigurationError):
            build_test_problem(TestProblemParams(**kw))


def test_unit_powers_give_lipschitz_coefficients():
    prob = build_test_problem(table1_params(1.0, 1.0))
    rng = np.random.default_rng(0)
    x1, x2, y1, y2 = rng.uniform(-10, 10, size=(4, 5000))

    def ratio(f):
        a = f(0.0, y1[:, None, None], x1[:, None])
        b = f(0.0, y2[:, None, None], x2[:, None])
        return np.abs(a - b).reshape(5000, -1).max(axis=1) / (
            np.abs(x1 - x2) + np.abs(y1 - y2))

    # |a| + |b| and |b2| + |b3| bound the ratios
    assert ratio(prob.drift).max() <= 8.0 + 1e-9
    assert ratio(prob.diffusion).max() <= 1.0 + 1e-9


def test_condition_tags():
    assert {"C4", "C5"} <= set(build_test_problem(table1_params(1, 1)).condition_tags)
    assert "C4" not in build_test_problem(table1_params(0.5, 0.5)).condition_tags
