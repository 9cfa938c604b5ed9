"""Online parameter estimators: gradient on the raw regression, gradient on the
extended regression, and the decoupled scalar estimators driven by the mixed
regression.

Each step function holds its measured inputs constant over one integration
step (the caller supplies one sample per step), advances the estimate with the
chosen one-step method, and returns a new state.  The scalar mixed-regression
estimator additionally accumulates the running integral of delta^2; under the
held-input convention the increment delta^2 * dt is exact for that step.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import IntegrationDivergedError
from .integrate import Integrator, advance
from .mixing import MixedRegression

__all__ = [
    "GradientEstimatorState",
    "ElreGradientEstimatorState",
    "DremEstimatorState",
    "step_gradient",
    "step_elre_gradient",
    "step_drem",
    "closed_form_drem_error",
]


def _check_gain(gamma):
    if np.any(np.asarray(gamma) <= 0.0) or not np.all(np.isfinite(gamma)):
        raise ValueError("adaptation gains must be positive and finite")


@dataclass(frozen=True)
class GradientEstimatorState:
    """Estimate driven by d theta_hat/dt = gamma phi (y - phi . theta_hat)."""

    theta_hat: np.ndarray
    gamma: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta_hat", np.asarray(self.theta_hat, dtype=float))
        _check_gain(self.gamma)
        if not np.all(np.isfinite(self.theta_hat)):
            raise ValueError("theta_hat must be finite")


@dataclass(frozen=True)
class ElreGradientEstimatorState:
    """Estimate driven by d theta_hat/dt = gamma Phi^T (Y - Phi theta_hat)."""

    theta_hat: np.ndarray
    gamma: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta_hat", np.asarray(self.theta_hat, dtype=float))
        _check_gain(self.gamma)
        if not np.all(np.isfinite(self.theta_hat)):
            raise ValueError("theta_hat must be finite")


@dataclass(frozen=True)
class DremEstimatorState:
    """Per-channel scalar estimates driven by the mixed regression.

    integral_of_delta_sq tracks int_0^t delta^2 ds, duplicated per channel so
    each channel's closed-form error exp(-gamma_i * integral) reads off one
    vector.  It is non-decreasing in t.
    """

    theta_hat: np.ndarray
    gammas: np.ndarray
    t: float = 0.0
    integral_of_delta_sq: np.ndarray | None = None

    def __post_init__(self):
        th = np.asarray(self.theta_hat, dtype=float)
        g = np.asarray(self.gammas, dtype=float)
        object.__setattr__(self, "theta_hat", th)
        object.__setattr__(self, "gammas", g)
        if g.shape != th.shape:
            raise ValueError("gammas and theta_hat must have matching shapes")
        _check_gain(g)
        if not np.all(np.isfinite(th)):
            raise ValueError("theta_hat must be finite")
        acc = self.integral_of_delta_sq
        acc = np.zeros_like(th) if acc is None else np.asarray(acc, dtype=float)
        if acc.shape != th.shape or np.any(acc < 0.0):
            raise ValueError("integral_of_delta_sq must be a nonnegative vector of length q")
        object.__setattr__(self, "integral_of_delta_sq", acc)


def _finite_or_raise(theta_hat: np.ndarray, t: float):
    if not np.all(np.isfinite(theta_hat)):
        raise IntegrationDivergedError(t, float("nan"))


def step_gradient(state: GradientEstimatorState, phi_t, y_t: float,
                  integ: Integrator) -> GradientEstimatorState:
    """One step of the raw-regression gradient estimator."""
    phi_t = np.asarray(phi_t, dtype=float)
    if phi_t.shape != state.theta_hat.shape:
        raise ValueError(f"phi has shape {phi_t.shape}, expected {state.theta_hat.shape}")
    g = state.gamma

    def f(_t, th):
        return g * phi_t * (y_t - phi_t @ th)

    th = advance(f, state.t, state.theta_hat, integ)
    _finite_or_raise(th, state.t + integ.dt)
    return replace(state, theta_hat=th, t=state.t + integ.dt)


def step_elre_gradient(state: ElreGradientEstimatorState, Phi_t, Y_t,
                       integ: Integrator) -> ElreGradientEstimatorState:
    """One step of the extended-regression gradient estimator."""
    Phi_t = np.asarray(Phi_t, dtype=float)
    Y_t = np.asarray(Y_t, dtype=float)
    if Phi_t.ndim != 2 or Phi_t.shape[1] != state.theta_hat.size or Y_t.shape != (Phi_t.shape[0],):
        raise ValueError(
            f"inconsistent shapes: Phi {Phi_t.shape}, Y {Y_t.shape}, "
            f"theta_hat {state.theta_hat.shape}"
        )
    g = state.gamma

    def f(_t, th):
        return g * (Phi_t.T @ (Y_t - Phi_t @ th))

    th = advance(f, state.t, state.theta_hat, integ)
    _finite_or_raise(th, state.t + integ.dt)
    return replace(state, theta_hat=th, t=state.t + integ.dt)


def step_drem(state: DremEstimatorState, mixed: MixedRegression,
              integ: Integrator) -> DremEstimatorState:
    """One step of the q decoupled scalar estimators.

    Channel i follows d theta_hat_i/dt = gamma_i delta (y_mixed_i - delta
    theta_hat_i); a zero delta freezes every channel.
    """
    if not np.isfinite(mixed.delta) or not np.all(np.isfinite(mixed.y_mixed)):
        raise ValueError("mixed regression sample must be finite")
    ym = np.asarray(mixed.y_mixed, dtype=float)
    if ym.shape != state.theta_hat.shape:
        raise ValueError(f"y_mixed has shape {ym.shape}, expected {state.theta_hat.shape}")
    d = mixed.delta
    g = state.gammas

    def f(_t, th):
        return g * d * (ym - d * th)

    th = advance(f, state.t, state.theta_hat, integ)
    _finite_or_raise(th, state.t + integ.dt)
    acc = state.integral_of_delta_sq + d * d * integ.dt
    return replace(state, theta_hat=th, t=state.t + integ.dt, integral_of_delta_sq=acc)


def closed_form_drem_error(e0: float, gamma_i: float, delta_sq_integral: float) -> float:
    """Analytic per-channel error magnitude |e0| * exp(-gamma_i * int delta^2).

    This is the exact solution of the decoupled error dynamics and serves as
    the oracle for simulated trajectories.  An infinite integral returns 0.
    """
    if delta_sq_integral < 0.0:
        raise ValueError("delta_sq_integral must be nonnegative")
    return abs(e0) * float(np.exp(-gamma_i * delta_sq_integral))
