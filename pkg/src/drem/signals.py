"""Time-parameterized regressor signals and the scalar measurement they generate.

A regressor signal is a deterministic vector function phi(t) defined for
t >= 0.  The measurement associated with a parameter vector theta is the
inner product y(t) = phi(t) . theta.  Evaluation is pure: signals hold no
mutable state and are safe to share between threads.
"""
from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "RegressorSignal",
    "Sinusoidal",
    "Constant",
    "PiecewiseZeroed",
    "Tabulated",
    "TimeGrid",
    "eval_regressor",
    "eval_measurement",
    "load_tabulated_csv",
]


class RegressorSignal(ABC):
    """Vector signal phi(t) on t >= 0."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Number of regressor components q."""

    @abstractmethod
    def _eval_array(self, ts: np.ndarray) -> np.ndarray:
        """Evaluate at a 1-D array of times, returning shape (len(ts), q)."""

    def eval(self, t) -> np.ndarray:
        """Evaluate phi(t); scalar t gives shape (q,), array t gives (N, q)."""
        ts = np.asarray(t, dtype=float)
        scalar = ts.ndim == 0
        ts = np.atleast_1d(ts)
        if ts.size and ts.min() < 0.0:
            raise ValueError(f"signal evaluation requires t >= 0, got {ts.min()}")
        out = self._eval_array(ts)
        return out[0] if scalar else out

    def eval_scalar(self, t: float) -> np.ndarray:
        """Single-time evaluation; equals eval(t) but skips array plumbing.

        Simulation inner loops call this several times per step, so concrete
        signals override it with a direct formula.
        """
        return self.eval(t)

    def breakpoints(self, t0: float, t1: float) -> tuple[float, ...]:
        """Times strictly inside (t0, t1) where the signal switches branch.

        Quadrature routines split their integration ranges here so each
        piece is evaluated with a single smooth formula.
        """
        return ()

    def eval_branch(self, ts: np.ndarray, ref: float) -> np.ndarray:
        """Evaluate assuming every entry of ts lies in the smooth branch containing ref.

        Endpoints shared with a neighbouring branch are evaluated with this
        branch's formula (one-sided limit), which is what integrals need.
        """
        return self._eval_array(np.atleast_1d(np.asarray(ts, dtype=float)))


class Sinusoidal(RegressorSignal):
    """phi_i(t) = amplitudes[i] * sin(frequencies[i] * t + phases[i])."""

    def __init__(self, amplitudes, frequencies, phases):
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.phases = np.asarray(phases, dtype=float)
        if not (self.amplitudes.shape == self.frequencies.shape == self.phases.shape):
            raise ValueError("amplitudes, frequencies and phases must share one shape")
        if self.amplitudes.ndim != 1 or self.amplitudes.size == 0:
            raise ValueError("sinusoidal signal needs 1-D, non-empty parameter vectors")
        for name, arr in (("amplitudes", self.amplitudes),
                          ("frequencies", self.frequencies),
                          ("phases", self.phases)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def _eval_array(self, ts):
        return self.amplitudes * np.sin(np.outer(ts, self.frequencies) + self.phases)

    def eval_scalar(self, t):
        return self.amplitudes * np.sin(self.frequencies * t + self.phases)


class Constant(RegressorSignal):
    """phi(t) = value for all t."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=float)
        if self.value.ndim != 1 or self.value.size == 0:
            raise ValueError("constant signal needs a 1-D, non-empty value vector")
        if not np.all(np.isfinite(self.value)):
            raise ValueError("constant signal value must be finite")

    @property
    def dim(self) -> int:
        return self.value.size

    def _eval_array(self, ts):
        return np.broadcast_to(self.value, (ts.size, self.value.size)).copy()

    def eval_scalar(self, t):
        return self.value


class PiecewiseZeroed(RegressorSignal):
    """Wraps another signal; identical to it for t < cutoff_time, exactly zero after."""

    def __init__(self, inner: RegressorSignal, cutoff_time: float):
        if cutoff_time <= 0.0:
            raise ValueError("cutoff_time must be positive")
        self.inner = inner
        self.cutoff_time = float(cutoff_time)

    @property
    def dim(self) -> int:
        return self.inner.dim

    def _eval_array(self, ts):
        out = np.zeros((ts.size, self.dim))
        live = ts < self.cutoff_time
        if live.any():
            out[live] = self.inner._eval_array(ts[live])
        return out

    def eval_scalar(self, t):
        if t < self.cutoff_time:
            return self.inner.eval_scalar(t)
        return np.zeros(self.dim)

    def breakpoints(self, t0, t1):
        pts = [b for b in self.inner.breakpoints(t0, t1) if b < self.cutoff_time]
        if t0 < self.cutoff_time < t1:
            pts.append(self.cutoff_time)
        return tuple(sorted(pts))

    def eval_branch(self, ts, ref):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if ref < self.cutoff_time:
            return self.inner.eval_branch(ts, ref)
        return np.zeros((ts.size, self.dim))


class Tabulated(RegressorSignal):
    """Sampled signal with linear interpolation between strictly increasing times.

    Evaluation outside [times[0], times[-1]] is an error: the table is the
    only information available, so no extrapolation rule is assumed.
    """

    def __init__(self, times, samples):
        self.times = np.asarray(times, dtype=float)
        self.samples = np.asarray(samples, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("tabulated signal needs at least two sample times")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("tabulated times must be strictly increasing")
        if self.samples.ndim != 2 or self.samples.shape[0] != self.times.size or self.samples.shape[1] < 1:
            raise ValueError("samples must be a (len(times), q) matrix")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("tabulated samples must be finite")

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def _eval_array(self, ts):
        lo, hi = self.times[0], self.times[-1]
        # grid arithmetic may overshoot the table edge by rounding; tolerate
        # that and clip, but reject genuinely out-of-range requests
        tol = 1e-9 * max(1.0, abs(hi - lo))
        if ts.size and (ts.min() < lo - tol or ts.max() > hi + tol):
            raise ValueError(
                f"tabulated signal defined on [{lo}, {hi}], "
                f"asked for t in [{ts.min()}, {ts.max()}]"
            )
        ts = np.clip(ts, lo, hi)
        return np.column_stack(
            [np.interp(ts, self.times, self.samples[:, j]) for j in range(self.dim)]
        )

    def breakpoints(self, t0, t1):
        # interpolation kinks; splitting there makes panel integrands polynomial
        inside = (self.times > t0) & (self.times < t1)
        return tuple(self.times[inside])


def eval_regressor(sig: RegressorSignal, t) -> np.ndarray:
    """Evaluate phi(t) for the given signal."""
    return sig.eval(t)


def eval_measurement(sig: RegressorSignal, theta, t):
    """Measurement y(t) = phi(t) . theta (scalar t -> float, array t -> 1-D array)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (sig.dim,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({sig.dim},)")
    phi = sig.eval(t)
    out = phi @ theta
    return float(out) if phi.ndim == 1 else out


def load_tabulated_csv(path) -> Tabulated:
    """Load a tabulated signal from CSV with header ``t,phi1,...,phiq``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "t":
            raise ValueError(f"{path}: expected header starting with 't', got {header}")
        q = len(header) - 1
        if q < 1 or any(h.strip() != f"phi{j + 1}" for j, h in enumerate(header[1:])):
            raise ValueError(f"{path}: expected header t,phi1,...,phiq, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != q + 1:
                raise ValueError(f"{path}:{lineno}: expected {q + 1} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    data = np.asarray(rows, dtype=float)
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two samples")
    return Tabulated(times=data[:, 0], samples=data[:, 1:])


@dataclass(frozen=True)
class TimeGrid:
    """Uniform simulation grid: samples t0 + k*dt for k = 0..n_steps."""

    t0: float
    t_end: float
    dt: float

    def __post_init__(self):
        if self.t0 < 0.0:
            raise ValueError("t0 must be >= 0")
        if self.t_end <= self.t0:
            raise ValueError("t_end must exceed t0")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        span = self.t_end - self.t0
        n = round(span / self.dt)
        if n < 2:
            raise ValueError("grid must contain at least 2 steps")
        if abs(n * self.dt - span) > 1e-6 * span:
            raise ValueError(f"dt={self.dt} does not tile [{self.t0}, {self.t_end}]")

    @property
    def n_steps(self) -> int:
        return round((self.t_end - self.t0) / self.dt)

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)
