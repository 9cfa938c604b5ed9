import math
from dataclasses import replace

import numpy as np
import pytest

from drem import (DremEstimatorState, ElreGradientEstimatorState, GradientEstimatorState,
                  Integrator, MixedRegression, closed_form_drem_error, step_drem,
                  step_elre_gradient, step_gradient)
from drem.scenario import EstimatorSpec, builtin_scenario, simulate_scenario

INTEG = Integrator(method="rk4", dt=1e-3)


class TestGradient:
    def test_zero_regressor_freezes(self):
        state = GradientEstimatorState(theta_hat=np.array([0.3, -0.7]), gamma=2.0)
        out = step_gradient(state, np.zeros(2), 1.5, INTEG)
        assert np.array_equal(out.theta_hat, state.theta_hat)
        assert out.t == pytest.approx(1e-3)

    def test_equilibrium_is_fixed_point(self):
        theta = np.array([1.0, 2.0])
        phi = np.array([0.5, -1.2])
        state = GradientEstimatorState(theta_hat=theta, gamma=3.0)
        out = step_gradient(state, phi, float(phi @ theta), INTEG)
        assert np.array_equal(out.theta_hat, theta)

    def test_scalar_exponential_decay(self):
        # q=1, phi = 1, gamma = 1, theta = 0: theta_hat(t) = e^{-t}
        state = GradientEstimatorState(theta_hat=np.array([1.0]), gamma=1.0)
        phi = np.array([1.0])
        for _ in range(1000):
            state = step_gradient(state, phi, 0.0, INTEG)
        assert abs(state.theta_hat[0] - math.exp(-1.0)) < 1e-6

    def test_gain_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            GradientEstimatorState(theta_hat=np.zeros(2), gamma=0.0)


class TestElreGradient:
    def test_zero_extension_freezes(self):
        state = ElreGradientEstimatorState(theta_hat=np.array([0.1, 0.2]), gamma=1.0)
        out = step_elre_gradient(state, np.zeros((3, 2)), np.zeros(3), INTEG)
        assert np.array_equal(out.theta_hat, state.theta_hat)

    def test_zero_residual_freezes(self):
        rng = np.random.default_rng(0)
        Phi = rng.uniform(-1, 1, size=(3, 2))
        state = ElreGradientEstimatorState(theta_hat=np.array([0.4, -0.6]), gamma=2.0)
        out = step_elre_gradient(state, Phi, Phi @ state.theta_hat, INTEG)
        assert np.array_equal(out.theta_hat, state.theta_hat)

    def test_orthonormal_extension_decay(self):
        # Phi^T Phi = I and gamma = 1: error decays as e^{-t}
        theta = np.array([0.8, -1.5])
        Phi = np.vstack([np.eye(2), np.zeros((1, 2))])
        Y = Phi @ theta
        state = ElreGradientEstimatorState(theta_hat=np.zeros(2), gamma=1.0)
        for _ in range(1000):
            state = step_elre_gradient(state, Phi, Y, INTEG)
        err = np.abs(state.theta_hat - theta)
        expected = np.abs(theta) * math.exp(-1.0)
        np.testing.assert_allclose(err, expected, rtol=1e-6)


class TestDrem:
    def test_zero_delta_freezes(self):
        state = DremEstimatorState(theta_hat=np.array([0.5, 0.5]), gammas=np.array([1.0, 2.0]))
        mixed = MixedRegression(delta=0.0, y_mixed=np.array([3.0, -3.0]))
        out = step_drem(state, mixed, INTEG)
        assert np.array_equal(out.theta_hat, state.theta_hat)
        assert np.array_equal(out.integral_of_delta_sq, np.zeros(2))

    def test_consistent_mixed_sample_freezes(self):
        state = DremEstimatorState(theta_hat=np.array([0.5, -1.0]), gammas=np.array([1.0, 1.0]))
        mixed = MixedRegression(delta=0.7, y_mixed=0.7 * state.theta_hat)
        out = step_drem(state, mixed, INTEG)
        assert np.array_equal(out.theta_hat, state.theta_hat)

    def test_constant_delta_closed_form(self):
        d, g = 0.8, 3.0
        theta = np.array([2.0])
        state = DremEstimatorState(theta_hat=np.zeros(1), gammas=np.array([g]))
        mixed = MixedRegression(delta=d, y_mixed=d * theta)
        for _ in range(1000):
            state = step_drem(state, mixed, INTEG)
        err = abs(state.theta_hat[0] - theta[0])
        assert err == pytest.approx(2.0 * math.exp(-g * d * d), rel=1e-6)
        # held-input accumulation is exact: integral = d^2 * t
        np.testing.assert_allclose(state.integral_of_delta_sq, d * d * 1.0, rtol=1e-12)

    def test_accumulator_non_decreasing(self):
        rng = np.random.default_rng(1)
        state = DremEstimatorState(theta_hat=np.zeros(2), gammas=np.array([1.0, 1.0]))
        prev = state.integral_of_delta_sq.copy()
        for _ in range(50):
            d = float(rng.uniform(-1, 1))
            mixed = MixedRegression(delta=d, y_mixed=rng.uniform(-1, 1, 2))
            state = step_drem(state, mixed, INTEG)
            assert np.all(state.integral_of_delta_sq >= prev)
            prev = state.integral_of_delta_sq.copy()

    def test_nonfinite_mixed_rejected(self):
        state = DremEstimatorState(theta_hat=np.zeros(2), gammas=np.array([1.0, 1.0]))
        mixed = MixedRegression(delta=float("nan"), y_mixed=np.zeros(2))
        with pytest.raises(ValueError, match="finite"):
            step_drem(state, mixed, INTEG)


class TestClosedForm:
    def test_no_excitation(self):
        assert closed_form_drem_error(1.0, 1.0, 0.0) == 1.0

    def test_algebraic_identity(self):
        assert closed_form_drem_error(2.0, 3.0, math.log(2.0) / 3.0) == pytest.approx(1.0, rel=1e-15)

    def test_infinite_integral(self):
        assert closed_form_drem_error(-1.0, 0.5, float("inf")) == 0.0

    def test_negative_integral_rejected(self):
        with pytest.raises(ValueError):
            closed_form_drem_error(1.0, 1.0, -0.1)


def test_gradient_error_norm_monotone():
    scenario = builtin_scenario("fig1_pe")
    scenario = replace(
        scenario,
        estimators=(EstimatorSpec(kind="gradient", gains=np.array([2.0])),),
        grid=type(scenario.grid)(0.0, 10.0, 1e-3),
    )
    res = simulate_scenario(scenario)
    err = np.linalg.norm(res.estimates[0][1] - scenario.theta_true, axis=1)
    assert np.all(np.diff(err) <= 1e-9)


def test_drem_per_channel_monotone(fig1_result):
    spec, traj = fig1_result.estimates[0]
    err = np.abs(traj - fig1_result.scenario.theta_true)
    for i in range(err.shape[1]):
        assert np.all(np.diff(err[:, i]) <= 1e-9)


def test_drem_channels_decoupled():
    base = builtin_scenario("fig1_pe")
    grid = type(base.grid)(0.0, 2.0, 1e-3)

    def run(gains):
        sc = replace(base, estimators=(EstimatorSpec(kind="drem", gains=np.array(gains)),),
                     grid=grid)
        return simulate_scenario(sc).estimates[0][1]

    a = run([2.0, 2.0])
    b = run([2.0, 0.3])  # perturb channel 2's gain only
    assert np.array_equal(a[:, 0], b[:, 0])
    assert not np.array_equal(a[:, 1], b[:, 1])


def test_no_convergence_once_excitation_dies(fig3_result):
    # the squared-trace energy is finite, so the errors stall above zero
    res = fig3_result
    assert np.isfinite(res.delta_sq_integral()[-1])
    spec, traj = res.estimates[0]
    final_err = np.abs(traj[-1] - res.scenario.theta_true)
    assert np.all(final_err >= 0.01)


def test_simulated_drem_matches_closed_form(fig1_result):
    res = fig1_result
    integral = res.delta_sq_integral()
    spec, traj = res.estimates[0]
    theta = res.scenario.theta_true
    for i in range(2):
        e0 = abs(theta[i])
        oracle = np.array([closed_form_drem_error(e0, spec.gains[i], v) for v in integral])
        sim = np.abs(traj[:, i] - theta[i])
        mask = oracle >= 1e-4 * e0
        rel = np.abs(sim[mask] - oracle[mask]) / oracle[mask]
        assert rel.max() <= 1e-4
