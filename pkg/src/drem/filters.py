"""Extended-regression generation by filtering the raw regression through filter banks.

Two constructions are provided:

* a bank of first-order low-pass filters with unit DC gain and pairwise
  distinct poles, applied to y and to each regressor component, producing a
  tall extended regressor (one row per filter), and
* the time-varying construction that integrates the outer product of the
  regressor with itself through a single first-order lag, producing a square
  extended regressor.

With zero initial conditions both constructions satisfy Y(t) = Phi(t) theta
identically, which is the property the mixing step builds on.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IntegrationDivergedError
from .integrate import Integrator, advance
from .signals import RegressorSignal, TimeGrid

__all__ = [
    "LtiFilterBank",
    "KreisselmeierFilter",
    "ExtendedRegressorState",
    "ElreTrajectory",
    "step_lti",
    "step_kre",
    "run_elre",
    "zero_state",
]

# poles closer than this (relative to the largest pole) behave like a
# repeated pole numerically and are rejected
POLE_SEPARATION_RTOL = 1e-9


@dataclass(frozen=True)
class LtiFilterBank:
    """Bank of first-order unit-DC-gain filters with positive, distinct poles."""

    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        object.__setattr__(self, "lambdas", lam)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a non-empty 1-D vector")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
            raise ValueError("all poles must be positive and finite")
        if lam.size > 1:
            sep = np.abs(lam[:, None] - lam[None, :])
            np.fill_diagonal(sep, np.inf)
            if sep.min() / lam.max() < POLE_SEPARATION_RTOL:
                raise ValueError(
                    f"poles must be pairwise distinct (relative separation "
                    f">= {POLE_SEPARATION_RTOL:g}); got {lam.tolist()}"
                )

    @property
    def ell(self) -> int:
        return self.lambdas.size


@dataclass(frozen=True)
class KreisselmeierFilter:
    """Single-pole lag applied to the regressor outer product."""

    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0.0:
            raise ValueError("alpha must be positive and finite")


@dataclass(frozen=True)
class ExtendedRegressorState:
    """Filter-bank state at time t: extended regressor Phi and extended output Y."""

    Phi: np.ndarray
    Y: np.ndarray
    t: float

    def __post_init__(self):
        phi = np.asarray(self.Phi, dtype=float)
        y = np.asarray(self.Y, dtype=float)
        object.__setattr__(self, "Phi", phi)
        object.__setattr__(self, "Y", y)
        if phi.ndim != 2 or y.ndim != 1 or y.size != phi.shape[0]:
            raise ValueError("Phi must be (l, q) with Y of length l")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
            raise ValueError("state entries must be finite")


def zero_state(elre, q: int, t: float = 0.0) -> ExtendedRegressorState:
    """All-zero initial state for the given extension (tall for a bank, square otherwise)."""
    rows = elre.ell if isinstance(elre, LtiFilterBank) else q
    return ExtendedRegressorState(Phi=np.zeros((rows, q)), Y=np.zeros(rows), t=t)


def _pack(state: ExtendedRegressorState) -> np.ndarray:
    return np.concatenate([state.Phi.ravel(), state.Y])


def _unpack(x: np.ndarray, rows: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    return x[: rows * q].reshape(rows, q), x[rows * q:]


def lti_rhs(bank: LtiFilterBank, sig: RegressorSignal, theta: np.ndarray):
    """Right-hand side of the bank dynamics on the packed state [Phi, Y].

    Each row follows dPhi_ij/dt = -lambda_i (Phi_ij - phi_j(t)) and
    dY_i/dt = -lambda_i (Y_i - y(t)).
    """
    lam = bank.lambdas
    lam_col = lam[:, None]
    l, q = bank.ell, sig.dim
    theta = np.asarray(theta, dtype=float)

    def f(t, x):
        phi = sig.eval_scalar(t)
        y = phi @ theta
        Phi, Y = _unpack(x, l, q)
        out = np.empty_like(x)
        out[: l * q] = (lam_col * (phi - Phi)).ravel()
        out[l * q:] = lam * (y - Y)
        return out

    return f


def kre_rhs(filt: KreisselmeierFilter, sig: RegressorSignal, theta: np.ndarray):
    """Right-hand side dPhi/dt = -alpha Phi + phi phi^T, dY/dt = -alpha Y + phi y."""
    a = filt.alpha
    q = sig.dim
    theta = np.asarray(theta, dtype=float)

    def f(t, x):
        phi = sig.eval_scalar(t)
        y = phi @ theta
        Phi, Y = _unpack(x, q, q)
        out = np.empty_like(x)
        out[: q * q] = (np.outer(phi, phi) - a * Phi).ravel()
        out[q * q:] = phi * y - a * Y
        return out

    return f


def _step(rhs, state: ExtendedRegressorState, integ: Integrator) -> ExtendedRegressorState:
    rows, q = state.Phi.shape
    x = advance(rhs, state.t, _pack(state), integ)
    if not np.all(np.isfinite(x)):
        raise IntegrationDivergedError(state.t + integ.dt, float(np.linalg.norm(_pack(state))))
    Phi, Y = _unpack(x, rows, q)
    return ExtendedRegressorState(Phi=Phi, Y=Y, t=state.t + integ.dt)


def step_lti(bank: LtiFilterBank, state: ExtendedRegressorState, sig: RegressorSignal,
             theta, integ: Integrator) -> ExtendedRegressorState:
    """Advance the tall extended regressor by one step."""
    if state.Phi.shape != (bank.ell, sig.dim):
        raise ValueError(f"state Phi has shape {state.Phi.shape}, expected {(bank.ell, sig.dim)}")
    return _step(lti_rhs(bank, sig, theta), state, integ)


def step_kre(filt: KreisselmeierFilter, state: ExtendedRegressorState, sig: RegressorSignal,
             theta, integ: Integrator) -> ExtendedRegressorState:
    """Advance the square extended regressor by one step."""
    q = sig.dim
    if state.Phi.shape != (q, q):
        raise ValueError(f"state Phi has shape {state.Phi.shape}, expected {(q, q)}")
    return _step(kre_rhs(filt, sig, theta), state, integ)


@dataclass
class ElreTrajectory:
    """Sampled extension trajectory on a uniform grid."""

    t: np.ndarray      # (N,)
    Phi: np.ndarray    # (N, rows, q)
    Y: np.ndarray      # (N, rows)

    def write_csv(self, path) -> int:
        """Write ``t,Phi_11,...,Phi_lq,Y_1,...,Y_l`` rows, returning the row count."""
        path = Path(path)
        n, rows, q = self.Phi.shape
        header = ["t"]
        header += [f"Phi_{i + 1}{j + 1}" for i in range(rows) for j in range(q)]
        header += [f"Y_{i + 1}" for i in range(rows)]
        with path.open("w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for k in range(n):
                vals = [self.t[k], *self.Phi[k].ravel(), *self.Y[k]]
                fh.write(",".join(repr(float(v)) for v in vals) + "\n")
        return n


def run_elre(sig: RegressorSignal, theta, elre, grid: TimeGrid, method: str = "rk4",
             initial_state: ExtendedRegressorState | None = None) -> ElreTrajectory:
    """Integrate the chosen extension over the grid and return the sampled trajectory.

    Initial conditions default to zero, for which Y(t) = Phi(t) theta holds on
    every grid point up to integration error.  A nonzero initial state is
    accepted but the identity then only holds asymptotically, so a warning is
    emitted.
    """
    theta = np.asarray(theta, dtype=float)
    q = sig.dim
    if theta.shape != (q,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({q},)")
    if isinstance(elre, LtiFilterBank):
        rhs = lti_rhs(elre, sig, theta)
        rows = elre.ell
    elif isinstance(elre, KreisselmeierFilter):
        rhs = kre_rhs(elre, sig, theta)
        rows = q
    else:
        raise TypeError(f"unsupported extension {type(elre).__name__}")

    if initial_state is None:
        x = np.zeros(rows * q + rows)
    else:
        if initial_state.Phi.shape != (rows, q):
            raise ValueError("initial state shape does not match the extension")
        if np.any(initial_state.Phi) or np.any(initial_state.Y):
            warnings.warn(
                "nonzero filter initial conditions: Y = Phi theta holds only "
                "asymptotically, not on the transient",
                stacklevel=2,
            )
        x = _pack(initial_state)

    integ = Integrator(method=method, dt=grid.dt)
    n = grid.n_steps
    ts = grid.times()
    Phi_tr = np.empty((n + 1, rows, q))
    Y_tr = np.empty((n + 1, rows))
    Phi_tr[0], Y_tr[0] = _unpack(x, rows, q)
    for k in range(n):
        x = advance(rhs, ts[k], x, integ)
        # NaN/inf propagate through the sum, so this is a cheap divergence probe
        if not math.isfinite(float(x.sum())):
            last = float(np.hypot(np.linalg.norm(Phi_tr[k]), np.linalg.norm(Y_tr[k])))
            raise IntegrationDivergedError(ts[k + 1], last)
        Phi_tr[k + 1], Y_tr[k + 1] = _unpack(x, rows, q)
    return ElreTrajectory(t=ts, Phi=Phi_tr, Y=Y_tr)
