"""Command-line entry points: ``simulate``, ``select``, and ``forecast``.

Options can come from flags, from an INI config file (one section per
command), or both; flags win.  The fully resolved option set is echoed into
the output directory for provenance.  Exit codes: 0 success, 1 runtime
failure, 2 validation failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys

import numpy as np

from .data import SeedSpec
from .forecasting import METHODS, load_panel_csv, report_to_csvs, roll
from .procedure import selection_frequencies
from .simulation import DesignSpec, run_monte_carlo, report_to_csv, report_to_json

OUTPUT_ENV = "FACTORKNOCKOFFS_OUTDIR"

_DESIGN_ALIASES = {"1": "d1", "2": "d2", "3": "d3", "4": "d4", "real": "real_x",
                   "d1": "d1", "d2": "d2", "d3": "d3", "d4": "d4",
                   "real_x": "real_x"}


class ValidationError(Exception):
    """Bad inputs or options; maps to exit code 2."""


def _default_outdir() -> str:
    return os.environ.get(OUTPUT_ENV, "fknockoffs_out")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factorknockoffs",
        description="FDR-controlled feature selection with factor-model "
                    "knockoffs: simulation bench, selection on data, and "
                    "rolling forecasts.",
    )
    parser.add_argument("--config", help="INI file with a section per command")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo design")
    sim.add_argument("--design", help="1|2|3|4|real (default 1)")
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--s", type=int)
    sim.add_argument("--A", type=float, dest="amplitude",
                     help="signal amplitude (default 4)")
    sim.add_argument("--c", type=float, help="response noise scale (default 0.2)")
    sim.add_argument("--r", type=int, help="number of factors (default 3; d3 forces 0)")
    sim.add_argument("--theta", type=float, help="design noise scale (default 1)")
    sim.add_argument("--rho", type=float, help="d3 column correlation (default 0)")
    sim.add_argument("--nu", type=int, dest="nu_df", help="d2 tail df (default 8)")
    sim.add_argument("--q", type=float, help="target FDR level (default 0.2)")
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--r-max", type=int, dest="r_max")
    sim.add_argument("--oracle-knockoffs", action="store_true", default=None)
    sim.add_argument("--x", help="design CSV for --design real (no response)")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--parallelism", type=int)

    sel = sub.add_parser("select", help="run the selection procedure on data")
    sel.add_argument("--x", help="covariate CSV")
    sel.add_argument("--y", help="response CSV (single column)")
    sel.add_argument("--q", type=float)
    sel.add_argument("--plus", action="store_true", default=None,
                     help="use the more conservative threshold")
    sel.add_argument("--statistic", choices=["lcd", "mda"])
    sel.add_argument("--draws", type=int, help="number of knockoff draws")
    sel.add_argument("--seed", type=int)
    sel.add_argument("--r-max", type=int, dest="r_max")
    sel.add_argument("--out", help="output directory")

    fc = sub.add_parser("forecast", help="rolling one-step-ahead bench")
    fc.add_argument("--panel", help="panel CSV (date column plus named series)")
    fc.add_argument("--target", help="name of the series to forecast")
    fc.add_argument("--window", type=int)
    fc.add_argument("--methods", help="comma list from: " + ",".join(METHODS))
    fc.add_argument("--draws", type=int)
    fc.add_argument("--q", type=float)
    fc.add_argument("--seed", type=int)
    fc.add_argument("--out", help="output directory")
    return parser


_DEFAULTS = {
    "simulate": {"design": "1", "n": 200, "p": 200, "s": 10, "amplitude": 4.0,
                 "c": 0.2, "r": None, "theta": 1.0, "rho": 0.0, "nu_df": 8,
                 "q": 0.2, "reps": 100, "seed": 0, "r_max": 8,
                 "oracle_knockoffs": False, "x": None, "out": None,
                 "parallelism": None},
    "select": {"x": None, "y": None, "q": 0.2, "plus": False,
               "statistic": "lcd", "draws": 1, "seed": 0, "r_max": 8,
               "out": None},
    "forecast": {"panel": None, "target": None, "window": 120,
                 "methods": "ar,far,lasso,ipad", "draws": 100, "q": 0.2,
                 "seed": 0, "out": None},
}

_TYPES = {"n": int, "p": int, "s": int, "r": int, "nu_df": int, "reps": int,
          "seed": int, "r_max": int, "draws": int, "window": int,
          "parallelism": int, "amplitude": float, "c": float, "theta": float,
          "rho": float, "q": float,
          "oracle_knockoffs": bool, "plus": bool}


def _resolve_options(args: argparse.Namespace) -> dict:
    """Merge defaults, config-file section, and flags (flags win)."""
    command = args.command
    options = dict(_DEFAULTS[command])
    if args.config:
        if not os.path.exists(args.config):
            raise ValidationError(f"config file not found: {args.config}")
        ini = configparser.ConfigParser()
        ini.read(args.config)
        if ini.has_section(command):
            for key, raw in ini.items(command):
                if key not in options:
                    raise ValidationError(f"unknown config key {key!r} in "
                                          f"[{command}]")
                kind = _TYPES.get(key)
                if kind is bool:
                    options[key] = ini.getboolean(command, key)
                elif kind is not None:
                    options[key] = kind(raw)
                else:
                    options[key] = raw
    for key in options:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    if options.get("out") is None:
        options["out"] = _default_outdir()
    return options


def _echo_config(command: str, options: dict, out_dir: str) -> None:
    ini = configparser.ConfigParser()
    ini[command] = {k: str(v) for k, v in sorted(options.items())
                    if v is not None}
    with open(os.path.join(out_dir, "resolved_config.ini"), "w") as fh:
        ini.write(fh)


def _load_xy(x_path, y_path):
    if not x_path or not os.path.exists(x_path):
        raise ValidationError(f"covariate file not found: {x_path}")
    if not y_path or not os.path.exists(y_path):
        raise ValidationError(f"response file not found: {y_path}")
    x = np.loadtxt(x_path, delimiter=",", ndmin=2)
    y = np.loadtxt(y_path, delimiter=",").ravel()
    if x.shape[0] != y.shape[0]:
        raise ValidationError("x and y row counts differ")
    if x.shape[0] < 4:
        raise ValidationError("need at least 4 observations")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValidationError("non-finite values in input data")
    return x, y


def _cmd_simulate(options: dict) -> int:
    design = _DESIGN_ALIASES.get(str(options["design"]).lower())
    if design is None:
        raise ValidationError(f"unknown design {options['design']!r}")
    dataset = None
    if design == "real_x":
        if not options["x"] or not os.path.exists(options["x"] or ""):
            raise ValidationError("--design real requires --x pointing at a CSV")
        raw = np.loadtxt(options["x"], delimiter=",", ndmin=2)
        from .data import Dataset

        # the CSV supplies only the design matrix; the response is simulated
        dataset = Dataset(raw, np.zeros(raw.shape[0]),
                          tuple(f"c{j}" for j in range(raw.shape[1])))
    r = options["r"]
    if r is None:
        r = 0 if design == "d3" else 3
    try:
        spec = DesignSpec(
            design=design, n=options["n"], p=options["p"], s=options["s"],
            amplitude=options["amplitude"], c=options["c"], r=r,
            theta=options["theta"], rho=options["rho"], nu_df=options["nu_df"],
            q=options["q"], reps=options["reps"],
            seed=SeedSpec(options["seed"]),
            oracle_knockoffs=options["oracle_knockoffs"],
            r_max=options["r_max"], dataset=dataset,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    out_dir = options["out"]
    os.makedirs(out_dir, exist_ok=True)
    _echo_config("simulate", options, out_dir)
    report = run_monte_carlo(spec, parallelism=options["parallelism"])
    report_to_csv(spec, report, os.path.join(out_dir, "report.csv"))
    report_to_json(spec, report, os.path.join(out_dir, "report.json"))
    print(f"fdr={report.fdr:.4f} power={report.power:.4f} "
          f"fdr_plus={report.fdr_plus:.4f} power_plus={report.power_plus:.4f} "
          f"r2={report.r2_mean:.4f} reps={report.reps_completed}")
    return 0


def _cmd_select(options: dict) -> int:
    if not 0 < options["q"] < 1:
        raise ValidationError("q must lie in (0, 1)")
    if options["draws"] < 1:
        raise ValidationError("draws must be positive")
    x, y = _load_xy(options["x"], options["y"])
    out_dir = options["out"]
    os.makedirs(out_dir, exist_ok=True)
    _echo_config("select", options, out_dir)
    try:
        result, freq = selection_frequencies(
            x, y, q=options["q"], seed=SeedSpec(options["seed"]),
            draws=options["draws"], plus=options["plus"],
            statistic=options["statistic"], r_max=options["r_max"],
            standardize=True,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    with open(os.path.join(out_dir, "selection.json"), "w") as fh:
        fh.write(result.to_json())
    if options["draws"] > 1:
        with open(os.path.join(out_dir, "selection_frequency.csv"), "w",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["column", "frequency"])
            for j, f in enumerate(freq):
                writer.writerow([j, format(f, ".17g")])
    print(f"selected {len(result.selected)} of {x.shape[1]} columns "
          f"(q={options['q']}, draws={options['draws']})")
    return 0


def _cmd_forecast(options: dict) -> int:
    if not options["panel"] or not os.path.exists(options["panel"]):
        raise ValidationError(f"panel file not found: {options['panel']}")
    if not options["target"]:
        raise ValidationError("--target is required")
    methods = tuple(m.strip() for m in options["methods"].split(",") if m.strip())
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}")
    try:
        panel = load_panel_csv(options["panel"], options["target"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if panel.values.shape[0] <= options["window"]:
        raise ValidationError("panel shorter than the rolling window")
    out_dir = options["out"]
    os.makedirs(out_dir, exist_ok=True)
    _echo_config("forecast", options, out_dir)
    report = roll(panel, window_size=options["window"], methods=methods,
                  seed=SeedSpec(options["seed"]), draws=options["draws"],
                  q=options["q"])
    report_to_csvs(report, panel, out_dir)
    payload = {
        "target": panel.target_name,
        "window": options["window"],
        "rmse": {m: report.rmse[m] for m in methods},
        "dm": {pair: {"statistic": res.statistic, "stars": res.stars}
               for pair, res in report.dm.items()},
    }
    with open(os.path.join(out_dir, "forecast.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True)
    print("  ".join(f"{m}={report.rmse[m]:.4f}" for m in methods))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        options = _resolve_options(args)
        if args.command == "simulate":
            return _cmd_simulate(options)
        if args.command == "select":
            return _cmd_select(options)
        return _cmd_forecast(options)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
