"""Command-line front end.

Verbs:
  run <scenario.toml>       run a scenario file and write its traces
  reproduce <fig1..fig5>    run a built-in scenario and emit plot data
  analyze <regressor.csv>   excitation analysis of a tabulated regressor
  sweep-poles               randomized pole sweep on the built-in burst regressor

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import IntegrationDivergedError, ScenarioValidationError
from .excitation import ExcitationReport, check_ie, check_pe, sweep_poles
from .scenario import (FIGURE_IDS, _with_grid_overrides, builtin_scenario, parse_scenario,
                       reproduce, run_scenario)
from .signals import TimeGrid, load_tabulated_csv

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drem", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file")
    run_p.add_argument("scenario", type=Path)
    run_p.add_argument("--dt", type=float, default=None, help="override grid dt")
    run_p.add_argument("--horizon", type=float, default=None, help="override horizon (t_end - t0)")
    run_p.add_argument("--out-dir", type=Path, default=None)

    rep_p = sub.add_parser("reproduce", help="run a built-in figure scenario")
    rep_p.add_argument("figure", choices=FIGURE_IDS)
    rep_p.add_argument("--dt", type=float, default=None)
    rep_p.add_argument("--horizon", type=float, default=None)
    rep_p.add_argument("--out-dir", type=Path, default=None)
    rep_p.add_argument("--plot-script", action="store_true",
                       help="also write a gnuplot script for the plot data")

    an_p = sub.add_parser("analyze", help="excitation analysis of a regressor CSV")
    an_p.add_argument("regressor", type=Path, help="CSV with header t,phi1,...,phiq")
    an_p.add_argument("--pe-window", type=float, default=None, metavar="T")
    an_p.add_argument("--ie-window", default=None, metavar="T0,TC")
    an_p.add_argument("--quad-dt", type=float, default=1e-3)
    an_p.add_argument("--out-dir", type=Path, default=Path("out/analyze"))
    an_p.add_argument("--stem", default=None, help="output file stem (default: input stem)")

    sw_p = sub.add_parser("sweep-poles", help="randomized pole sweep (burst regressor)")
    sw_p.add_argument("--trials", type=int, default=200)
    sw_p.add_argument("--seed", type=int, default=None)
    sw_p.add_argument("--dt", type=float, default=5e-3)
    sw_p.add_argument("--horizon", type=float, default=40.0)
    sw_p.add_argument("--pole-min", type=float, default=0.05)
    sw_p.add_argument("--pole-max", type=float, default=5.0)
    sw_p.add_argument("--out-dir", type=Path, default=Path("out/sweep"))
    return p


def _cmd_run(args) -> int:
    scenario = parse_scenario(args.scenario)
    scenario = _with_grid_overrides(scenario, args.dt, args.horizon)
    manifest = run_scenario(scenario, out_dir=args.out_dir)
    print(f"{scenario.name}: wrote {len(manifest.files)} files to {manifest.out_dir}")
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    manifest = reproduce(args.figure, out_dir=args.out_dir, dt=args.dt,
                         horizon=args.horizon, plot_script=args.plot_script)
    print(f"{args.figure}: wrote {len(manifest.files)} files to {manifest.out_dir}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    sig = load_tabulated_csv(args.regressor)
    horizon = float(sig.times[-1])
    pe = ie = None
    if args.pe_window is not None:
        pe = check_pe(sig, args.pe_window, horizon, quad_dt=args.quad_dt)
    if args.ie_window is not None:
        try:
            t0_s, tc_s = args.ie_window.split(",")
            t0, tc = float(t0_s), float(tc_s)
        except ValueError:
            raise ValueError(f"--ie-window expects 't0,tc', got {args.ie_window!r}") from None
        ie = check_ie(sig, t0, tc, quad_dt=args.quad_dt)
    if pe is None and ie is None:
        raise ValueError("nothing to analyze: pass --pe-window and/or --ie-window")
    report = ExcitationReport(pe=pe, ie=ie)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.stem or args.regressor.stem
    report.write_text(args.out_dir / f"{stem}_excitation.txt")
    report.write_windows_csv(args.out_dir / f"{stem}_windows.csv")
    sys.stdout.write(report.to_text())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = builtin_scenario("fig3_ie")
    grid = TimeGrid(t0=0.0, t_end=args.horizon, dt=args.dt)
    result = sweep_poles(scenario.regressor, n_trials=args.trials,
                         pole_range=(args.pole_min, args.pole_max),
                         seed=args.seed, grid=grid)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "sweep.csv"
    n_filters = result.lambdas.shape[1]
    with path.open("w", newline="\n") as fh:
        heads = ",".join(f"lambda_{i + 1}" for i in range(n_filters))
        fh.write(f"trial,{heads},detected,t_star\n")
        for k in range(result.n_trials):
            lams = ",".join(repr(float(v)) for v in result.lambdas[k])
            det = k not in result.failures
            tstar = repr(float(result.t_stars[k])) if det else "nan"
            fh.write(f"{k},{lams},{'true' if det else 'false'},{tstar}\n")
    print(f"detected onset in {result.n_detected}/{result.n_trials} trials "
          f"(fraction {result.fraction_detected:.3f}); details in {path}")
    for k in result.failures:
        print(f"  NO ONSET for poles {result.lambdas[k].tolist()} (trial {k})")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "reproduce": _cmd_reproduce,
        "analyze": _cmd_analyze,
        "sweep-poles": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except ScenarioValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IntegrationDivergedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
