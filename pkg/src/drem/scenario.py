"""Declarative simulation scenarios: TOML parsing, co-simulation, trace export.

A scenario bundles one regressor, the true parameters, one extension family,
any number of estimators, a uniform time grid, and the excitation analyses to
run on the results.  Running a scenario co-simulates filters and estimators
in a single combined state vector (the mixed regression feeding the scalar
estimators is recomputed at every integrator stage), then writes CSV traces,
an excitation report, and a manifest enumerating every emitted file.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .errors import IntegrationDivergedError, ScenarioValidationError
from .excitation import ExcitationReport, analyze_delta_n, check_ie, check_pe, detect_generalized_pe
from .filters import ElreTrajectory, KreisselmeierFilter, LtiFilterBank
from .integrate import Integrator, advance
from .mixing import (determinant, gram_determinant, _raw_mix_square, _raw_mix_tall,
                     _row_subsets)
from .signals import (Constant, PiecewiseZeroed, RegressorSignal, Sinusoidal, Tabulated,
                      TimeGrid, load_tabulated_csv)

__all__ = [
    "EstimatorSpec",
    "AnalysisConfig",
    "OutputConfig",
    "Scenario",
    "FileRecord",
    "RunManifest",
    "SimulationResult",
    "parse_scenario",
    "scenario_from_dict",
    "simulate_scenario",
    "run_scenario",
    "reproduce",
    "builtin_scenario",
    "FIGURE_IDS",
]

ESTIMATOR_KINDS = ("gradient", "elre_gradient", "drem")
FIGURE_IDS = ("fig1", "fig2", "fig3", "fig4", "fig5")

# which built-in scenario backs each figure, and what gets plotted
_FIGURE_SOURCES = {
    "fig1": ("fig1_pe", "delta"),
    "fig2": ("fig1_pe", "errors"),
    "fig3": ("fig3_ie", "delta"),
    "fig4": ("fig3_ie", "errors"),
    "fig5": ("fig5_ie", "errors"),
}


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    gains: np.ndarray  # (q,) for drem, (1,) for the gradient estimators
    initial: np.ndarray | None = None  # theta_hat(0); zeros when omitted

    def label(self) -> str:
        return self.kind


@dataclass(frozen=True)
class AnalysisConfig:
    pe_window: float | None = None
    pe_stride: float | None = None
    ie_window: tuple[float, float] | None = None
    generalized_pe: bool = False
    gpe_step: float = 0.5
    quad_dt: float = 1e-3
    eig_floor: float = 1e-8
    positivity_floor: float = 0.0


@dataclass(frozen=True)
class OutputConfig:
    directory: Path
    stem: str


@dataclass(frozen=True)
class Scenario:
    name: str
    regressor: RegressorSignal
    theta_true: np.ndarray
    elre: LtiFilterBank | KreisselmeierFilter
    estimators: tuple[EstimatorSpec, ...]
    grid: TimeGrid
    analyses: AnalysisConfig
    outputs: OutputConfig

    @property
    def q(self) -> int:
        return self.theta_true.size

    def canonical_dict(self) -> dict:
        """Declarative content only, for hashing and provenance."""
        return {
            "name": self.name,
            "regressor": _signal_to_dict(self.regressor),
            "theta_true": self.theta_true.tolist(),
            "elre": ({"family": "lti", "lambdas": self.elre.lambdas.tolist()}
                     if isinstance(self.elre, LtiFilterBank)
                     else {"family": "kreisselmeier", "alpha": float(self.elre.alpha)}),
            "estimators": [
                {"kind": e.kind, "gains": e.gains.tolist(),
                 "initial": None if e.initial is None else e.initial.tolist()}
                for e in self.estimators
            ],
            "grid": {"t0": float(self.grid.t0), "t_end": float(self.grid.t_end),
                     "dt": float(self.grid.dt)},
            "analyses": {
                "pe_window": self.analyses.pe_window,
                "pe_stride": self.analyses.pe_stride,
                "ie_window": list(self.analyses.ie_window) if self.analyses.ie_window else None,
                "generalized_pe": self.analyses.generalized_pe,
                "gpe_step": self.analyses.gpe_step,
                "quad_dt": self.analyses.quad_dt,
                "eig_floor": self.analyses.eig_floor,
                "positivity_floor": self.analyses.positivity_floor,
            },
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _signal_to_dict(sig: RegressorSignal) -> dict:
    if isinstance(sig, Sinusoidal):
        return {"kind": "sinusoidal", "amplitudes": sig.amplitudes.tolist(),
                "frequencies": sig.frequencies.tolist(), "phases": sig.phases.tolist()}
    if isinstance(sig, Constant):
        return {"kind": "constant", "value": sig.value.tolist()}
    if isinstance(sig, PiecewiseZeroed):
        return {"kind": "piecewise_zeroed", "cutoff_time": sig.cutoff_time,
                "inner": _signal_to_dict(sig.inner)}
    if isinstance(sig, Tabulated):
        return {"kind": "tabulated", "times": sig.times.tolist(),
                "samples": sig.samples.tolist()}
    raise TypeError(f"unknown signal type {type(sig).__name__}")


def _build_signal(data, errors: list[str], prefix: str, base_dir: Path | None) -> RegressorSignal | None:
    if not isinstance(data, dict):
        errors.append(f"{prefix}: expected a table")
        return None
    kind = data.get("kind")
    try:
        if kind == "sinusoidal":
            return Sinusoidal(amplitudes=data["amplitudes"],
                              frequencies=data["frequencies"],
                              phases=data["phases"])
        if kind == "constant":
            return Constant(value=data["value"])
        if kind == "piecewise_zeroed":
            inner = _build_signal(data.get("inner"), errors, prefix + ".inner", base_dir)
            if inner is None:
                return None
            return PiecewiseZeroed(inner=inner, cutoff_time=data["cutoff_time"])
        if kind == "tabulated":
            if "csv" in data:
                csv_path = Path(data["csv"])
                if not csv_path.is_absolute() and base_dir is not None:
                    csv_path = base_dir / csv_path
                return load_tabulated_csv(csv_path)
            return Tabulated(times=data["times"], samples=data["samples"])
        errors.append(f"{prefix}.kind: unknown signal kind {kind!r}")
    except KeyError as exc:
        errors.append(f"{prefix}: missing field {exc.args[0]!r} for kind {kind!r}")
    except (ValueError, OSError) as exc:
        errors.append(f"{prefix}: {exc}")
    return None


def scenario_from_dict(data: dict, source: str = "<dict>",
                       base_dir: Path | None = None) -> Scenario:
    """Build and validate a Scenario, collecting every violation before raising."""
    errors: list[str] = []

    name = data.get("name")
    if not isinstance(name, str) or not name:
        errors.append("name: required non-empty string")
        name = "<unnamed>"

    sig = _build_signal(data.get("regressor"), errors, "regressor", base_dir)

    theta = None
    try:
        theta = np.asarray(data["parameters"]["theta_true"], dtype=float)
        if theta.ndim != 1 or theta.size == 0 or not np.all(np.isfinite(theta)):
            errors.append("parameters.theta_true: must be a non-empty finite vector")
            theta = None
    except (KeyError, TypeError, ValueError):
        errors.append("parameters.theta_true: required finite vector")

    if sig is not None and theta is not None and sig.dim != theta.size:
        errors.append(
            f"dimension mismatch: parameters.theta_true has length {theta.size} "
            f"but the regressor has dimension {sig.dim} "
            "(fields: parameters.theta_true, regressor)"
        )

    elre = None
    elre_data = data.get("elre")
    if not isinstance(elre_data, dict):
        errors.append("elre: required table with field 'family'")
    else:
        family = elre_data.get("family", "").lower()
        if family == "lti":
            try:
                elre = LtiFilterBank(lambdas=np.asarray(elre_data["lambdas"], dtype=float))
            except KeyError:
                errors.append("elre.lambdas: required for family 'lti'")
            except ValueError as exc:
                errors.append(f"elre.lambdas: {exc}")
            if elre is not None and theta is not None and elre.ell <= theta.size:
                errors.append(
                    f"elre.lambdas: tall extension needs more filters than parameters "
                    f"(got {elre.ell} filters for {theta.size} parameters)"
                )
        elif family == "kreisselmeier":
            try:
                elre = KreisselmeierFilter(alpha=float(elre_data["alpha"]))
            except KeyError:
                errors.append("elre.alpha: required for family 'kreisselmeier'")
            except ValueError as exc:
                errors.append(f"elre.alpha: {exc}")
        else:
            errors.append(f"elre.family: expected 'lti' or 'kreisselmeier', got {family!r}")

    estimators: list[EstimatorSpec] = []
    for idx, est in enumerate(data.get("estimators", []) or []):
        label = f"estimators[{idx}]"
        if not isinstance(est, dict):
            errors.append(f"{label}: expected a table")
            continue
        kind = est.get("kind")
        if kind not in ESTIMATOR_KINDS:
            errors.append(f"{label}.kind: expected one of {ESTIMATOR_KINDS}, got {kind!r}")
            continue
        try:
            gains = np.atleast_1d(np.asarray(est["gains"], dtype=float))
        except (KeyError, TypeError, ValueError):
            errors.append(f"{label}.gains: required positive gain(s)")
            continue
        if np.any(gains <= 0.0) or not np.all(np.isfinite(gains)):
            errors.append(f"{label}.gains: gains must be positive and finite")
            continue
        if kind == "drem":
            if theta is not None:
                if gains.size == 1:
                    gains = np.full(theta.size, gains[0])
                elif gains.size != theta.size:
                    errors.append(
                        f"{label}.gains: needs one gain per parameter "
                        f"({theta.size}), got {gains.size}"
                    )
                    continue
        elif gains.size != 1:
            errors.append(f"{label}.gains: {kind} takes a single gain, got {gains.size}")
            continue
        initial = None
        if "initial" in est:
            initial = np.atleast_1d(np.asarray(est["initial"], dtype=float))
            if (theta is not None and initial.shape != theta.shape) or not np.all(np.isfinite(initial)):
                errors.append(f"{label}.initial: must be a finite vector of length q")
                continue
        estimators.append(EstimatorSpec(kind=kind, gains=gains, initial=initial))

    grid = None
    grid_data = data.get("grid")
    if not isinstance(grid_data, dict):
        errors.append("grid: required table with t0, t_end, dt")
    else:
        try:
            grid = TimeGrid(t0=float(grid_data.get("t0", 0.0)),
                            t_end=float(grid_data["t_end"]),
                            dt=float(grid_data.get("dt", 1e-3)))
        except KeyError:
            errors.append("grid.t_end: required")
        except (TypeError, ValueError) as exc:
            errors.append(f"grid: {exc}")

    an = data.get("analyses", {}) or {}
    analyses = AnalysisConfig()
    if not isinstance(an, dict):
        errors.append("analyses: expected a table")
    else:
        try:
            ie_win = an.get("ie_window")
            if ie_win is not None:
                t0, tc = float(ie_win[0]), float(ie_win[1])
                if t0 < 0 or tc <= 0:
                    errors.append("analyses.ie_window: needs t0 >= 0 and tc > 0")
                ie_win = (t0, tc)
            analyses = AnalysisConfig(
                pe_window=float(an["pe_window"]) if "pe_window" in an else None,
                pe_stride=float(an["pe_stride"]) if "pe_stride" in an else None,
                ie_window=ie_win,
                generalized_pe=bool(an.get("generalized_pe", False)),
                gpe_step=float(an.get("gpe_step", 0.5)),
                quad_dt=float(an.get("quad_dt", 1e-3)),
                eig_floor=float(an.get("eig_floor", 1e-8)),
                positivity_floor=float(an.get("positivity_floor", 0.0)),
            )
            if analyses.pe_window is not None and analyses.pe_window <= 0:
                errors.append("analyses.pe_window: must be positive")
            if analyses.quad_dt <= 0:
                errors.append("analyses.quad_dt: must be positive")
            if analyses.positivity_floor < 0:
                errors.append("analyses.positivity_floor: must be >= 0")
        except (TypeError, ValueError, IndexError) as exc:
            errors.append(f"analyses: {exc}")

    out_data = data.get("outputs", {}) or {}
    directory = Path(out_data.get("directory", f"out/{name}"))
    stem = out_data.get("stem", name)
    if not isinstance(stem, str) or not stem:
        errors.append("outputs.stem: must be a non-empty string")
        stem = "run"

    if analyses.pe_window is not None and grid is not None and analyses.pe_window > grid.t_end - grid.t0:
        errors.append("analyses.pe_window: window exceeds the grid horizon")

    if errors:
        raise ScenarioValidationError(errors, source=source)
    return Scenario(name=name, regressor=sig, theta_true=theta, elre=elre,
                    estimators=tuple(estimators), grid=grid, analyses=analyses,
                    outputs=OutputConfig(directory=directory, stem=stem))


def parse_scenario(path) -> Scenario:
    """Parse and validate a scenario file, reporting all violations at once."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ScenarioValidationError([f"file not found: {path}"], source=str(path)) from None
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioValidationError([f"TOML parse error: {exc}"], source=str(path)) from None
    return scenario_from_dict(data, source=str(path), base_dir=path.parent)


def builtin_scenario(name: str) -> Scenario:
    """Load one of the packaged scenario files by stem name."""
    from importlib.resources import files

    res = files("drem").joinpath("builtin_scenarios", f"{name}.toml")
    data = tomllib.loads(res.read_text())
    return scenario_from_dict(data, source=f"builtin:{name}")


@dataclass
class SimulationResult:
    """In-memory co-simulation traces on the scenario grid."""

    scenario: Scenario
    times: np.ndarray                 # (N,)
    Phi: np.ndarray                   # (N, rows, q)
    Y: np.ndarray                     # (N, rows)
    delta: np.ndarray                 # (N,)
    estimates: list[tuple[EstimatorSpec, np.ndarray]]  # [(spec, (N, q))]

    def errors_for(self, index: int) -> np.ndarray:
        spec, traj = self.estimates[index]
        return traj - self.scenario.theta_true

    def delta_sq_integral(self) -> np.ndarray:
        """Trapezoid cumulative integral of delta^2 on the grid."""
        d2 = self.delta * self.delta
        inc = 0.5 * (d2[1:] + d2[:-1]) * np.diff(self.times)
        return np.concatenate(([0.0], np.cumsum(inc)))


def simulate_scenario(scenario: Scenario) -> SimulationResult:
    """Co-simulate filters and estimators in one combined state vector."""
    sig = scenario.regressor
    theta = scenario.theta_true
    q = scenario.q
    grid = scenario.grid
    is_tall = isinstance(scenario.elre, LtiFilterBank)
    rows = scenario.elre.ell if is_tall else q
    nf = rows * q + rows
    if is_tall:
        lam = scenario.elre.lambdas
        lam_col = lam[:, None]
        subsets = _row_subsets(rows, q)

        def mix_raw(Phi, Yv):
            return _raw_mix_tall(Phi, Yv, subsets)
    else:
        alpha = scenario.elre.alpha
        mix_raw = _raw_mix_square

    offsets = []
    pos = nf
    for est in scenario.estimators:
        offsets.append((pos, pos + q))
        pos += q
    n_state = pos
    any_drem = any(e.kind == "drem" for e in scenario.estimators)
    specs = scenario.estimators

    # fused right-hand side over the combined state [Phi, Y, estimator blocks];
    # the filter equations match lti_rhs/kre_rhs element for element
    def rhs(t, x):
        out = np.empty_like(x)
        phi = sig.eval_scalar(t)
        y = phi @ theta
        Phi = x[: rows * q].reshape(rows, q)
        Yv = x[rows * q: nf]
        if is_tall:
            out[: rows * q] = (lam_col * (phi - Phi)).ravel()
            out[rows * q: nf] = lam * (y - Yv)
        else:
            out[: rows * q] = (np.outer(phi, phi) - alpha * Phi).ravel()
            out[rows * q: nf] = phi * y - alpha * Yv
        if any_drem:
            delta, y_mixed = mix_raw(Phi, Yv)
        for (a, b), est in zip(offsets, specs):
            th = x[a:b]
            if est.kind == "gradient":
                out[a:b] = est.gains[0] * phi * (y - phi @ th)
            elif est.kind == "elre_gradient":
                out[a:b] = est.gains[0] * (Phi.T @ (Yv - Phi @ th))
            else:
                out[a:b] = est.gains * delta * (y_mixed - delta * th)
        return out

    integ = Integrator(method="rk4", dt=grid.dt)
    ts = grid.times()
    n = grid.n_steps
    x = np.zeros(n_state)  # filters always start at zero; estimates default to zero
    for (a, b), est in zip(offsets, specs):
        if est.initial is not None:
            x[a:b] = est.initial
    Phi_tr = np.empty((n + 1, rows, q))
    Y_tr = np.empty((n + 1, rows))
    est_tr = [np.empty((n + 1, q)) for _ in specs]
    Phi_tr[0] = 0.0
    Y_tr[0] = 0.0
    for tr, (a, b) in zip(est_tr, offsets):
        tr[0] = x[a:b]
    for k in range(n):
        x = advance(rhs, ts[k], x, integ)
        # NaN/inf propagate through the sum, so this is a cheap divergence probe
        if not math.isfinite(float(x.sum())):
            raise IntegrationDivergedError(
                ts[k + 1],
                float(np.hypot(np.linalg.norm(Phi_tr[k]), np.linalg.norm(Y_tr[k]))),
            )
        Phi_tr[k + 1] = x[: rows * q].reshape(rows, q)
        Y_tr[k + 1] = x[rows * q: nf]
        for tr, (a, b) in zip(est_tr, offsets):
            tr[k + 1] = x[a:b]

    delta_fn = gram_determinant if is_tall else determinant
    delta = np.empty(n + 1)
    for k in range(n + 1):
        delta[k] = delta_fn(Phi_tr[k])

    return SimulationResult(scenario=scenario, times=ts, Phi=Phi_tr, Y=Y_tr,
                            delta=delta, estimates=list(zip(specs, est_tr)))


def _grid_dict(grid: TimeGrid) -> dict:
    return {"t0": float(grid.t0), "t_end": float(grid.t_end), "dt": float(grid.dt)}


@dataclass(frozen=True)
class FileRecord:
    name: str
    rows: int


@dataclass
class RunManifest:
    """Provenance record for one scenario run."""

    scenario_name: str
    scenario_hash: str
    tool_version: str
    grid: dict
    wall_clock_s: float
    files: list[FileRecord] = field(default_factory=list)
    out_dir: Path | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_name,
            "scenario_hash": self.scenario_hash,
            "tool_version": self.tool_version,
            "grid": self.grid,
            "wall_clock_s": self.wall_clock_s,
            "files": [{"name": f.name, "rows": f.rows} for f in self.files],
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def _write_two_column(path, times, values, value_name: str) -> int:
    with Path(path).open("w", newline="\n") as fh:
        fh.write(f"t,{value_name}\n")
        for t, v in zip(times, values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")
    return len(times)


def _write_estimator_csv(path, times, traj, theta_true) -> int:
    q = traj.shape[1]
    err = traj - theta_true
    norm = np.linalg.norm(err, axis=1)
    header = (["t"] + [f"theta_hat_{i + 1}" for i in range(q)]
              + [f"error_{i + 1}" for i in range(q)] + ["error_norm"])
    with Path(path).open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(times)):
            vals = [times[k], *traj[k], *err[k], norm[k]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")
    return len(times)


def _estimator_labels(specs) -> list[str]:
    counts: dict[str, int] = {}
    labels = []
    for spec in specs:
        counts[spec.kind] = counts.get(spec.kind, 0) + 1
        n = counts[spec.kind]
        labels.append(spec.kind if n == 1 else f"{spec.kind}_{n}")
    return labels


def _build_report(result: SimulationResult) -> ExcitationReport:
    sc = result.scenario
    an = sc.analyses
    horizon = sc.grid.t_end
    pe = None
    # a horizon override may shrink the grid below the configured window;
    # the verdict is then undefined and the analysis is skipped
    if an.pe_window is not None and an.pe_window <= horizon:
        pe = check_pe(sc.regressor, an.pe_window, horizon, stride=an.pe_stride,
                      quad_dt=an.quad_dt, delta_floor=an.eig_floor)
    ie = None
    if an.ie_window is not None:
        ie = check_ie(sc.regressor, an.ie_window[0], an.ie_window[1],
                      quad_dt=an.quad_dt, mu_floor=an.eig_floor)
    gpe = None
    if an.generalized_pe:
        gpe = tuple(detect_generalized_pe(sc.regressor, horizon, step=an.gpe_step,
                                          quad_dt=an.quad_dt, floor=an.eig_floor))
    dn = analyze_delta_n(result.times, result.delta, an.positivity_floor)
    return ExcitationReport(pe=pe, ie=ie, generalized_pe=gpe, delta_n=dn)


def _write_run_outputs(result: SimulationResult, out_dir: Path) -> list[FileRecord]:
    scenario = result.scenario
    stem = scenario.outputs.stem
    report = _build_report(result)
    files: list[FileRecord] = []

    traj = ElreTrajectory(t=result.times, Phi=result.Phi, Y=result.Y)
    name = f"{stem}_trajectory.csv"
    files.append(FileRecord(name, traj.write_csv(out_dir / name)))

    delta_col = "delta_n" if isinstance(scenario.elre, LtiFilterBank) else "delta"
    name = f"{stem}_delta.csv"
    files.append(FileRecord(name, _write_two_column(out_dir / name, result.times,
                                                    result.delta, delta_col)))

    for label, (spec, est_traj) in zip(_estimator_labels(scenario.estimators), result.estimates):
        name = f"{stem}_{label}.csv"
        files.append(FileRecord(name, _write_estimator_csv(out_dir / name, result.times,
                                                           est_traj, scenario.theta_true)))

    name = f"{stem}_excitation.txt"
    files.append(FileRecord(name, report.write_text(out_dir / name)))
    name = f"{stem}_windows.csv"
    files.append(FileRecord(name, report.write_windows_csv(out_dir / name)))
    return files


def run_scenario(scenario: Scenario, out_dir=None) -> RunManifest:
    """Run the scenario and write all traces; returns the manifest (also written).

    Emitted files (stem S): S_trajectory.csv, S_delta.csv, one estimator CSV
    per estimator, S_excitation.txt, S_windows.csv, S_manifest.json.
    """
    t_begin = time.perf_counter()
    out_dir = Path(out_dir) if out_dir is not None else scenario.outputs.directory
    out_dir.mkdir(parents=True, exist_ok=True)

    result = simulate_scenario(scenario)
    files = _write_run_outputs(result, out_dir)

    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_hash=scenario.content_hash(),
        tool_version=__version__,
        grid=_grid_dict(scenario.grid),
        wall_clock_s=time.perf_counter() - t_begin,
        files=files,
        out_dir=out_dir,
    )
    manifest.write(out_dir / f"{scenario.outputs.stem}_manifest.json")
    return manifest


def _with_grid_overrides(scenario: Scenario, dt: float | None,
                         horizon: float | None) -> Scenario:
    if dt is None and horizon is None:
        return scenario
    g = scenario.grid
    new_grid = TimeGrid(t0=g.t0,
                        t_end=g.t0 + horizon if horizon is not None else g.t_end,
                        dt=dt if dt is not None else g.dt)
    return replace(scenario, grid=new_grid)


def reproduce(figure_id: str, out_dir=None, dt: float | None = None,
              horizon: float | None = None, plot_script: bool = False) -> RunManifest:
    """Run the built-in scenario behind one figure and emit plot-ready data files.

    Figures 1 and 3 plot the mixed-regressor trace; figures 2, 4 and 5 plot
    per-channel estimation errors.  Plot data files are two-column CSVs named
    <fig>_plot_*.csv; pass plot_script=True for a gnuplot script alongside.
    """
    if figure_id not in _FIGURE_SOURCES:
        raise ValueError(f"unknown figure {figure_id!r}; choose from {FIGURE_IDS}")
    source, plot_kind = _FIGURE_SOURCES[figure_id]
    scenario = builtin_scenario(source)
    scenario = replace(scenario, outputs=OutputConfig(
        directory=Path(out_dir) if out_dir is not None else Path("out") / figure_id,
        stem=figure_id,
    ))
    scenario = _with_grid_overrides(scenario, dt, horizon)

    t_begin = time.perf_counter()
    out = scenario.outputs.directory
    out.mkdir(parents=True, exist_ok=True)
    result = simulate_scenario(scenario)
    files = _write_run_outputs(result, out)

    plot_files: list[tuple[str, int]] = []
    if plot_kind == "delta":
        name = f"{figure_id}_plot_delta_n.csv"
        rows = _write_two_column(out / name, result.times, result.delta, "delta_n")
        plot_files.append((name, rows))
    else:
        spec_idx = next(i for i, (s, _) in enumerate(result.estimates) if s.kind == "drem")
        err = result.errors_for(spec_idx)
        for i in range(scenario.q):
            name = f"{figure_id}_plot_error_{i + 1}.csv"
            rows = _write_two_column(out / name, result.times, err[:, i], f"error_{i + 1}")
            plot_files.append((name, rows))
    if plot_script:
        name = f"{figure_id}.gnuplot"
        lines = ["set datafile separator ','", "set key autotitle columnhead"]
        plots = ", ".join(f"'{n}' using 1:2 with lines" for n, _ in plot_files)
        lines.append(f"plot {plots}")
        (out / name).write_text("\n".join(lines) + "\n")
        plot_files.append((name, len(lines)))

    files.extend(FileRecord(n, r) for n, r in plot_files)
    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_hash=scenario.content_hash(),
        tool_version=__version__,
        grid=_grid_dict(scenario.grid),
        wall_clock_s=time.perf_counter() - t_begin,
        files=files,
        out_dir=out,
    )
    manifest.write(out / f"{figure_id}_manifest.json")
    return manifest
