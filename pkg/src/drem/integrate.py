"""Fixed-step one-step integration methods (classical RK4 and explicit Euler)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["Integrator", "advance"]

_METHODS = ("rk4", "euler")


@dataclass(frozen=True)
class Integrator:
    """One-step method and its fixed step size."""

    method: str = "rk4"
    dt: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "method", self.method.lower())
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {_METHODS}")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")


def advance(f: Callable[[float, np.ndarray], np.ndarray], t: float, x: np.ndarray,
            integ: Integrator) -> np.ndarray:
    """Advance x from t to t + integ.dt with the chosen one-step method."""
    dt = integ.dt
    if integ.method == "euler":
        return x + dt * f(t, x)
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, x + (0.5 * dt) * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
