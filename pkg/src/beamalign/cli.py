"""Command-line front end.

Grammar::

    beamalign <subcommand> [ARG] [--config FILE] [--set key=value]...
              [--out DIR] [--seed S] [--trials T]

Subcommands: ``figure`` (reference presets fig2..fig7), ``sweep`` (custom budget
sweep), ``simulate`` (single budget), ``bounds`` (analytical bound sweep).
Configuration is a flat key-value mapping: defaults, then the --config file
(plain JSON object, or a manifest whose "config"/"run" entry is reused),
then each --set override, composed left to right.  Exit codes: 0 success,
1 configuration error, 2 infeasible experiment (every budget infeasible).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from . import _kernels as kernels
from .experiment import (
    STRATEGIES,
    SweepSpec,
    figure_preset,
    rows_to_csv,
    run_figure,
    run_strategies,
    write_manifest,
)
from .ldp import LevelGainProfile, bound_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2


class ConfigError(ValueError):
    pass


_CHANNEL_KEYS = ("channel", "snr_db", "k_factor_db", "mean_paths",
                 "aod_deg_lo", "aod_deg_hi", "aoa_deg_lo", "aoa_deg_hi")
_CODEBOOK_KEYS = ("synthesis", "num_tx", "num_rx")
_RUN_KEYS = ("trials", "seed")

ALLOWED_KEYS = {
    "figure": ("figure", "budgets") + _RUN_KEYS + ("snr_db",),
    "sweep": ("strategy", "budgets") + _RUN_KEYS + _CHANNEL_KEYS + _CODEBOOK_KEYS,
    "simulate": ("strategy", "n_tot") + _RUN_KEYS + _CHANNEL_KEYS + _CODEBOOK_KEYS,
    "bounds": ("snr_db", "level_pairs", "gain", "pilots", "tol"),
}

DEFAULTS = {
    "figure": {"trials": None, "seed": None, "snr_db": None, "budgets": None},
    "sweep": {
        "strategy": "hierarchical_equal", "budgets": [16, 64, 128, 256, 640, 1280],
        "trials": 10_000, "seed": 12345, "channel": "single_path",
        "snr_db": -15.0, "k_factor_db": None, "mean_paths": 1.8,
        "aod_deg_lo": -30.0, "aod_deg_hi": 30.0,
        "aoa_deg_lo": 0.0, "aoa_deg_hi": 360.0,
        "synthesis": "deactivation", "num_tx": 64, "num_rx": 4,
    },
    "bounds": {"snr_db": -15.0, "level_pairs": 8, "gain": 16.0,
               "pilots": "5:150:5", "tol": 1e-10},
}
DEFAULTS["simulate"] = {k: v for k, v in DEFAULTS["sweep"].items()
                        if k != "budgets"} | {"n_tot": 640}


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    # Accept a run manifest directly: reuse its echoed run configuration.
    if "run" in data and isinstance(data["run"], dict):
        data = data["run"]
    elif "config" in data and isinstance(data["config"], dict) and "meta" in data:
        data = data["config"]
    return data


def _compose_config(sub: str, args) -> dict:
    cfg = dict(DEFAULTS[sub])
    allowed = set(ALLOWED_KEYS[sub]) | set(DEFAULTS[sub])
    sources = []
    if args.config:
        sources.append(_load_config_file(args.config))
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        overrides[key.strip()] = _parse_value(raw)
    sources.append(overrides)
    for src in sources:
        for key, value in src.items():
            if key in ("subcommand", "out"):
                continue
            if key not in allowed:
                raise ConfigError(f"unknown override key {key!r} for {sub!r}")
            cfg[key] = value
    if getattr(args, "trials", None) is not None:
        cfg["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


def _parse_budgets(value):
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    try:
        budgets = sorted(int(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"budgets must be integers, got {value!r}") from exc
    if not budgets:
        raise ConfigError("budgets must be nonempty")
    return budgets


def _parse_pilots(value):
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) == 3:
            lo, hi, step = (int(p) for p in parts)
            out = list(range(lo, hi + 1, step))
        else:
            out = [int(p) for p in value.replace(",", " ").split()]
    else:
        out = [int(v) for v in value]
    if not out or min(out) < 1:
        raise ConfigError(f"pilot lengths must be positive integers, got {value!r}")
    return out


def _channel_config(cfg: dict) -> dict:
    tag = cfg["channel"]
    out = {"model": tag,
           "aod_deg": [cfg["aod_deg_lo"], cfg["aod_deg_hi"]],
           "aoa_deg": [cfg["aoa_deg_lo"], cfg["aoa_deg_hi"]]}
    if tag == "los_rician":
        out["k_factor_db"] = cfg["k_factor_db"] if cfg["k_factor_db"] is not None else 13.2
    elif tag == "nlos_multipath":
        out["k_factor_db"] = cfg["k_factor_db"] if cfg["k_factor_db"] is not None else 6.0
        out["mean_paths"] = cfg["mean_paths"]
    elif tag != "single_path":
        raise ConfigError(f"unknown channel {tag!r}")
    return out


def _codebook_config(cfg: dict) -> dict:
    synthesis = cfg["synthesis"]
    if synthesis not in ("ideal", "deactivation"):
        raise ConfigError(f"unknown synthesis {synthesis!r}")
    return {
        "num_tx": int(cfg["num_tx"]),
        "num_rx": int(cfg["num_rx"]),
        "tx_sector_sine": [-0.5, 0.5],
        "rx_sector_sine": [-1.0, 1.0],
        "tx_level_sizes": [2, 4, 8, 16, 32],
        "rx_level_sizes": [4],
        "synthesis": synthesis,
    }


def _write_outputs(out_dir, name, results, manifest):
    os.makedirs(out_dir, exist_ok=True)
    csv_files = []
    multi = len(results) > 1
    for strategy, rows in results.items():
        fname = f"{name}.{strategy}.csv" if multi else f"{name}.csv"
        path = os.path.join(out_dir, fname)
        with open(path, "w", newline="\n") as fh:
            fh.write(rows_to_csv(rows))
        csv_files.append(fname)
    manifest.setdefault("meta", {})["csv_files"] = csv_files
    write_manifest(os.path.join(out_dir, f"{name}.manifest.json"), manifest)
    return csv_files


def _all_infeasible(results) -> bool:
    return all(not row.feasible for rows in results.values() for row in rows)


def _cmd_figure(args) -> int:
    cfg = _compose_config("figure", args)
    fid = args.preset or cfg.get("figure")
    if not fid:
        raise ConfigError("figure requires a preset id (fig2..fig7)")
    try:
        preset = figure_preset(fid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    budgets = _parse_budgets(cfg["budgets"]) if cfg.get("budgets") else None
    results, manifest = run_figure(
        preset, trials=cfg.get("trials"), seed=cfg.get("seed"),
        snr_db=cfg.get("snr_db"), budgets=budgets)
    manifest["run"] = {"subcommand": "figure", "figure": preset.name,
                       "trials": manifest["config"]["trials"],
                       "seed": manifest["config"]["base_seed"],
                       "snr_db": manifest["config"]["snr_db"],
                       "budgets": manifest["config"]["budgets"]}
    files = _write_outputs(args.out, preset.name, results, manifest)
    print(f"wrote {', '.join(files)} and {preset.name}.manifest.json to {args.out}")
    if _all_infeasible(results):
        print("error: every budget is infeasible for every strategy", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _run_custom(name: str, cfg: dict, budgets, strategy: str, out_dir: str) -> int:
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    spec = SweepSpec(
        strategy=strategy,
        channel=_channel_config(cfg),
        codebook=_codebook_config(cfg),
        snr_db=float(cfg["snr_db"]),
        budgets=tuple(budgets),
        trials=int(cfg["trials"]),
        base_seed=int(cfg["seed"]),
    )
    start = time.time()
    results = run_strategies(spec, [strategy])
    manifest = {
        "run": {"subcommand": name, **{k: cfg[k] for k in sorted(cfg)}},
        "config": spec.to_config(),
        "meta": {"version": __version__, "backend": kernels.BACKEND,
                 "wall_time_s": round(time.time() - start, 3)},
    }
    _write_outputs(out_dir, name, results, manifest)
    rows = results[strategy]
    print(f"wrote {name}.csv and {name}.manifest.json to {out_dir}")
    if all(not r.feasible for r in rows):
        cb = spec.codebook
        if strategy == "exhaustive":
            pairs = cb["tx_level_sizes"][-1] * cb["rx_level_sizes"][-1]
        else:
            pairs = (cb["tx_level_sizes"][0] * cb["rx_level_sizes"][0]
                     + 2 * (len(cb["tx_level_sizes"]) - 1))
        print(f"error: infeasible experiment: every budget in {list(budgets)} is "
              f"below the {pairs} pilot symbols needed to scan each beam pair once",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _compose_config("sweep", args)
    return _run_custom("sweep", cfg, _parse_budgets(cfg["budgets"]),
                       cfg["strategy"], args.out)


def _cmd_simulate(args) -> int:
    cfg = _compose_config("simulate", args)
    try:
        n_tot = int(cfg["n_tot"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"n_tot must be an integer, got {cfg['n_tot']!r}") from exc
    return _run_custom("simulate", cfg, [n_tot], cfg["strategy"], args.out)


def _cmd_bounds(args) -> int:
    cfg = _compose_config("bounds", args)
    level_pairs = int(cfg["level_pairs"])
    if level_pairs < 2:
        raise ConfigError(f"level_pairs must be >= 2, got {level_pairs}")
    gain = float(cfg["gain"])
    power = 10.0 ** (float(cfg["snr_db"]) / 10.0)
    xi_opt = 2.0 * power * gain
    profile = LevelGainProfile.ideal(xi_opt, level_pairs)
    pilots = _parse_pilots(cfg["pilots"])
    reports = bound_sweep(profile, pilots, tol=float(cfg["tol"]))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "bounds.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("N,p_up,p_low,ldp_approx\n")
        for r in reports:
            fh.write(f"{r.pilots},{float(r.p_up)!r},{float(r.p_low)!r},"
                     f"{float(r.ldp_approx)!r}\n")
    manifest = {
        "run": {"subcommand": "bounds", **{k: cfg[k] for k in sorted(cfg)}},
        "meta": {"version": __version__, "rate_I1": reports[0].rate,
                 "csv_files": ["bounds.csv"]},
    }
    write_manifest(os.path.join(args.out, "bounds.manifest.json"), manifest)
    print(f"wrote bounds.csv and bounds.manifest.json to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamalign",
        description="Beam-alignment training experiments and analytical bounds.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file or a previous run manifest")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)

    p_fig = sub.add_parser("figure", help="run a reference figure preset")
    p_fig.add_argument("preset", nargs="?", help="one of fig2..fig7")
    common(p_fig)
    p_fig.set_defaults(func=_cmd_figure)

    p_sweep = sub.add_parser("sweep", help="run a custom budget sweep")
    common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_sim = sub.add_parser("simulate", help="run one strategy at one budget")
    common(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_bounds = sub.add_parser("bounds", help="misalignment bound sweep (no simulation)")
    common(p_bounds)
    p_bounds.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
