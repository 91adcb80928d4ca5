"""Command-line entry points.

Subcommands
-----------
stats      print the correlation moments (mu1, mu2) for OU noise parameters
simulate   simulate coloured truth paths and write t,x series
filter     run the full truth/observation/filter pipeline with metrics
fpe-check  validate stochastic equivalence (MC vs MC vs density PDE)
duffing    run one of the four built-in parameter presets

A single JSON config file feeds every subcommand; command-line flags
override config values.  All outputs are deterministic functions of the
configuration and the seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import pathlib
import sys

import numpy as np

from . import csvio
from .errors import ToolkitError
from .experiments import ExperimentConfig, config_from_dict, filter_series, preset, run_experiment, run_kernel
from .fpe import colour_limit_l1, equivalence_report
from .jets import Polynomial
from .noise import OUParams, ou_stats
from .equivalence import SystemModel

_FPE_DEFAULTS = {
    "gamma": -1.0,
    "g_offset": 2.0,
    "D": 0.03,
    "tau_cor": 0.005,
    "x0": 0.5,
    "t_end": 1.0,
    "n_paths": 20000,
    "n_cells": 200,
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(pathlib.Path(path).read_text())
    if not isinstance(data, dict):
        raise ToolkitError(f"config file {path} must hold a JSON object")
    return data


def _experiment_config(args, require_preset: bool = False) -> ExperimentConfig:
    data = _load_config(args.config)
    data.pop("fpe", None)
    set_id = getattr(args, "set", None)
    if set_id is not None:
        data["preset_id"] = set_id
    elif require_preset and "preset_id" not in data:
        raise ToolkitError("a preset id is required (--set or config preset_id)")
    for key in ("seed", "runs", "dt", "t_end", "mode"):
        value = getattr(args, key, None)
        if value is not None:
            data["n_runs" if key == "runs" else key] = value
    if not data:
        raise ToolkitError("no configuration given; pass --config or --set")
    return config_from_dict(data)


def _out_dir(args) -> pathlib.Path:
    out = pathlib.Path(args.out if args.out else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_stats(args) -> int:
    data = _load_config(args.config)
    if "D" in data and "tau_cor" in data:
        params = OUParams(D=float(data["D"]), tau_cor=float(data["tau_cor"]))
    else:
        cfg = _experiment_config(args)
        params = OUParams(D=cfg.D, tau_cor=cfg.tau_cor)
    stats = ou_stats(params)
    print(json.dumps({"D": params.D, "tau_cor": params.tau_cor, "mu1": stats.mu1, "mu2": stats.mu2}))
    return 0


def _cmd_simulate(args) -> int:
    cfg = _experiment_config(args)
    out = _out_dir(args)
    n_paths = cfg.n_runs
    raw = run_kernel(dataclasses.replace(cfg, n_runs=n_paths), n_traj_runs=n_paths)
    for r in range(n_paths):
        t, x = raw["trajectories"][r][:, 0], raw["trajectories"][r][:, 1]
        csvio.write_csv(out / f"path_{r:03d}.csv", ["t", "x"], [t, x])
    print(f"wrote {n_paths} truth path(s) to {out}")
    return 0


def _cmd_filter(args, require_preset: bool = False) -> int:
    cfg = _experiment_config(args, require_preset=require_preset)
    out = _out_dir(args)
    report = run_experiment(cfg, out_dir=out)
    series = filter_series(cfg)
    csvio.write_csv(
        out / "filter_series.csv",
        ["t", "x_true", "x_hat", "P", "dz"],
        [series["t"], series["x_true"], series["x_hat"], series["P"], series["dz"]],
    )
    print(
        json.dumps(
            {
                "rmse_filter": report.rmse_filter,
                "rmse_open_loop": report.rmse_open_loop,
                "mean_nees": report.mean_nees,
                "clamp_events": report.clamp_events,
                "n_wins": report.n_wins,
                "n_runs": report.n_runs,
            }
        )
    )
    return 0


def _cmd_duffing(args) -> int:
    return _cmd_filter(args, require_preset=True)


def _cmd_fpe_check(args) -> int:
    data = dict(_FPE_DEFAULTS)
    data.update(_load_config(args.config).get("fpe", {}))
    if args.seed is not None:
        data["seed"] = args.seed
    if args.t_end is not None:
        data["t_end"] = args.t_end
    out = _out_dir(args)

    g_off = float(data["g_offset"])
    model = SystemModel(
        f=Polynomial([0.0, -1.0, 0.0, float(data["gamma"])]),
        g=Polynomial([g_off, 1.0]),
    )
    report = equivalence_report(
        model,
        OUParams(D=float(data["D"]), tau_cor=float(data["tau_cor"])),
        x0=float(data["x0"]),
        t_end=float(data["t_end"]),
        n_paths=int(data["n_paths"]),
        n_cells=int(data["n_cells"]),
        seed=int(data.get("seed", 0)),
    )
    for name, grid in (("coloured", report.coloured), ("ito", report.ito), ("fpe", report.fpe)):
        csvio.write_csv(out / f"density_{name}.csv", ["x", "p"], [grid.centers(), grid.values])
    summary = {
        "l1_coloured_ito": report.l1_coloured_ito,
        "l1_coloured_fpe": report.l1_coloured_fpe,
        "l1_ito_fpe": report.l1_ito_fpe,
        "grid": list(report.grid),
        "params": {k: data[k] for k in sorted(data)},
    }
    (out / "fpe_check.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oufilter",
        description="Filtering toolkit for scalar systems driven by weakly coloured noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="FILE", help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None, metavar="N")
        p.add_argument("--out", metavar="DIR", help="output directory (default: cwd)")
        p.add_argument("--runs", type=int, default=None, metavar="N")
        p.add_argument("--dt", type=float, default=None, metavar="X")
        p.add_argument("--t-end", dest="t_end", type=float, default=None, metavar="X")
        p.add_argument("--mode", choices=("coloured", "classical", "closed-form"), default=None)

    for name, fn, extra in (
        ("stats", _cmd_stats, "print correlation moments mu1, mu2"),
        ("simulate", _cmd_simulate, "simulate coloured truth paths"),
        ("filter", _cmd_filter, "run the full filtering pipeline"),
        ("fpe-check", _cmd_fpe_check, "validate stochastic equivalence"),
        ("duffing", _cmd_duffing, "run a built-in parameter preset"),
    ):
        p = sub.add_parser(name, help=extra)
        add_common(p)
        p.set_defaults(func=fn)
        if name == "duffing":
            p.add_argument("--set", type=int, choices=(1, 2, 3, 4), required=True)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ToolkitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
