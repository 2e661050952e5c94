"""Command-line front end: config parsing, validation, experiment dispatch.

Usage:
    open-schwinger <experiment-or-figure> [--config file.yaml]
                   [--set key=value]... [--out DIR]

The experiment name is one of the keys below or a figure id (fig3 ... fig15),
which selects the experiment preset matching that figure's published
parameters.  OPEN_SCHWINGER_THREADS caps the worker count.  Exit codes:
0 success, 2 validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import lattice as lat
from .csvio import Manifest
from .environment import KINDS
from .experiments import EXPERIMENTS, run_experiment

BASE_CONFIG = {
    "params": {"n_sites": 4, "lattice_spacing": 1.0, "mass": 0.5,
               "coupling": 0.8, "flux_max": 1},
    "env": {"kind": "delta", "D0": 1.0, "sigma": 1.0, "beta": 0.1},
    "evolution": {"t_final": 10.0, "dt": 0.01, "snapshot_stride": 50},
    "options": {},
    "seed": 0,
    "n_jobs": None,
    "dense_cap": 5000,
    "iterative": False,
    "dump_basis": False,
}

# per-experiment defaults reproducing each figure's published parameters
PRESETS = {
    "spectrum": {
        "params": {"n_sites": 4},
        "options": {"correlators": [{"kind": "delta"},
                                    {"kind": "gaussian", "sigma": 1.0},
                                    {"kind": "constant"}]},
    },
    "gaps-vs-sigma": {
        "params": {"n_sites": 4},
        "options": {"sigma_grid": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0],
                    "include_delta": True, "include_constant": True},
    },
    "gaps-vs-N": {
        "options": {"n_values": [2, 3, 4, 5], "couplings": [0.8, 0.4, 0.1],
                    "include_free_fermion": True},
    },
    "entropy": {
        "params": {"n_sites": 4},
        "evolution": {"t_final": 40.0, "dt": 0.01},
        "options": {"correlators": [{"kind": "delta"},
                                    {"kind": "gaussian", "sigma": 0.1},
                                    {"kind": "gaussian", "sigma": 1.0},
                                    {"kind": "gaussian", "sigma": 100.0},
                                    {"kind": "constant"}],
                    "panels": ["full", "sectors"], "entropy_stride": 5},
    },
    "string-vacuum": {
        "params": {"n_sites": 6, "mass": 0.0, "coupling": 0.5},
        "evolution": {"t_final": 10.0, "dt": 0.01},
        "options": {"string": [4, 7]},
    },
    "string-medium": {
        "params": {"n_sites": 6, "mass": 0.0, "coupling": 0.5},
        "evolution": {"t_final": 6.0, "dt": 0.01},
        "options": {"string": [4, 7], "d0_values": [0.01, 0.15, 0.3]},
    },
    "tstar": {
        "params": {"n_sites": 6, "mass": 0.0, "coupling": 0.5},
        "evolution": {"t_final": 6.0, "dt": 0.01},
        "options": {"string": [4, 7], "d0_values": [0.01, 0.15, 0.3],
                    "t_max": 6.0, "report_links": [0, 1, 2, 3]},
    },
    "phase-diagram": {
        "params": {"n_sites": 6},
        "env": {"kind": "delta", "D0": 0.15},
        "evolution": {"t_final": 4.0, "dt": 0.01},
        "options": {"m_values": [0.0, 0.5, 1.0, 2.0, 3.0],
                    "e_values": [0.1, 0.5, 0.8, 1.4, 2.0],
                    "modes": ["vacuum", "medium"], "t1": 3.0, "t2": 4.0},
    },
    "dilation": {
        "params": {"n_sites": 2},
        "options": {"n_cyl_values": [1, 2, 3, 4], "t_final": 2.0,
                    "r_combos": [], "trotter_n_cyl": 4},
    },
    "trotter-closed": {
        "params": {"n_sites": 2},
        "options": {"r_values": [3, 5, 10], "t_max": 5.0, "n_points": 21},
    },
    "rates": {
        "params": {"n_sites": 4},
        "options": {"sigma_grid": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0],
                    "include_delta": True, "include_constant": True},
    },
}

FIGURES = {
    "fig3": ("spectrum", {}),
    "fig4": ("gaps-vs-sigma", {}),
    "fig5": ("gaps-vs-N", {}),
    "fig6": ("entropy", {}),
    "fig7": ("string-vacuum", {}),
    "fig8": ("string-medium", {}),
    "fig9": ("tstar", {}),
    "fig10": ("phase-diagram", {}),
    "fig11": ("string-medium",
              {"env": {"D0": 1.0},
               "options": {"param_sets": [[0.0, 0.5], [1.0, 2.0], [3.0, 0.8]]}}),
    "fig13": ("dilation", {}),
    "fig14": ("trotter-closed", {}),
    "fig15": ("dilation",
              {"options": {"n_cyl_values": [4],
                           "r_combos": [[1, 0], [0, 1], [1, 1], [4, 4]]}}),
}


def _deep_update(base, update):
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def _check_unknown_keys(config):
    errors = []
    known_top = set(BASE_CONFIG)
    for key in config:
        if key not in known_top:
            errors.append(f"unknown config key {key!r}")
    for section in ("params", "env", "evolution"):
        for key in config.get(section, {}):
            if key not in BASE_CONFIG[section]:
                errors.append(f"unknown config key {section}.{key!r}")
    return errors


def resolve_config(kind, *layers, overrides=None):
    """Base defaults + experiment preset, then any extra layers (figure
    overrides, config file), then dotted-path --set overrides."""
    cfg = copy.deepcopy(BASE_CONFIG)
    _deep_update(cfg, copy.deepcopy(PRESETS[kind]))
    for layer in layers:
        if layer:
            _deep_update(cfg, copy.deepcopy(layer))
    for dotted, value in (overrides or []):
        node = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return cfg


def validate(kind, config) -> list:
    """Range, consistency and resource checks; returns violations."""
    errors = _check_unknown_keys(config)
    p = config["params"]
    if p["n_sites"] < 1:
        errors.append("params.n_sites must be >= 1")
    if p["flux_max"] != 1:
        errors.append("params.flux_max must be 1")
    if p["lattice_spacing"] <= 0:
        errors.append("params.lattice_spacing must be positive")
    if p["mass"] < 0 or p["coupling"] < 0:
        errors.append("mass and coupling must be non-negative")
    env = config["env"]
    if env["kind"] not in KINDS:
        errors.append(f"env.kind must be one of {KINDS}")
    if env["D0"] < 0:
        errors.append("env.D0 must be non-negative")
    if env["sigma"] <= 0:
        errors.append("env.sigma must be positive")
    if env["beta"] <= 0:
        errors.append("env.beta must be positive")
    ev = config["evolution"]
    if ev["dt"] <= 0:
        errors.append("evolution.dt must be positive")
    if ev["t_final"] < ev["dt"]:
        errors.append("evolution.t_final must be at least one step")
    if errors:
        return errors

    n_f = 2 * p["n_sites"]
    opts = config["options"]
    for key in ("m_values", "e_values", "d0_values", "sigma_grid", "n_values"):
        if key in opts and len(opts[key]) == 0:
            errors.append(f"options.{key} is empty")
    links = opts.get("central_links")
    if links is not None and any(not 0 <= l < n_f - 1 for l in links):
        errors.append(f"options.central_links must lie within 0..{n_f - 2}")
    string = opts.get("string")
    if string and string[0] is not None:
        left, right = string
        if left % 2 != 0 or right % 2 != 1 or not 0 <= left < right < n_f:
            errors.append("options.string must be (even left, odd right) within the lattice")
    if kind in ("spectrum", "gaps-vs-sigma") and not config["iterative"]:
        dim = lat.enumerate_basis(lat.ModelParams(
            n_sites=p["n_sites"], lattice_spacing=p["lattice_spacing"],
            mass=p["mass"], coupling=p["coupling"])).dimension
        if dim**2 > config["dense_cap"]:
            errors.append(
                f"dense spectrum needs d^2 <= {config['dense_cap']} but d^2 = "
                f"{dim**2}; rerun with the iterative flag or a smaller lattice")
    return errors


def _parse_override(text):
    if "=" not in text:
        raise ValueError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        value = raw
    return key, value


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="open-schwinger",
        description="Exact numerics for the open lattice Schwinger model")
    parser.add_argument("experiment",
                        help="experiment kind (%s) or figure id (fig3..fig15)"
                        % ", ".join(sorted(EXPERIMENTS)))
    parser.add_argument("--config", type=Path, help="YAML config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="dotted-path config override")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (default: ./out)")
    args = parser.parse_args(argv)

    name = args.experiment
    figure_overrides = {}
    if name in FIGURES:
        name, figure_overrides = FIGURES[name]
    if name not in EXPERIMENTS:
        print(f"error: unknown experiment {args.experiment!r}", file=sys.stderr)
        return 2

    file_config = {}
    if args.config:
        file_config = yaml.safe_load(args.config.read_text()) or {}
    try:
        overrides = [_parse_override(text) for text in args.overrides]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    cfg = resolve_config(name, figure_overrides, file_config, overrides=overrides)

    if cfg.get("n_jobs") is None:
        cfg["n_jobs"] = os.cpu_count() or 1
    thread_cap = os.environ.get("OPEN_SCHWINGER_THREADS")
    if thread_cap:
        cfg["n_jobs"] = min(int(thread_cap), cfg["n_jobs"])

    violations = validate(name, cfg)
    if violations:
        for v in violations:
            print(f"invalid config: {v}", file=sys.stderr)
        return 2

    np.random.seed(cfg["seed"])
    args.out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(args.out, name, cfg)
    try:
        if cfg["dump_basis"]:
            from .csvio import write_csv
            from .experiments import model_params
            basis = lat.enumerate_basis(model_params(cfg))
            manifest.add(write_csv(args.out / "basis.csv",
                                   ("index", "occupation_bits", "flux_vector"),
                                   lat.basis_csv_rows(basis)))
        run_experiment(name, cfg, manifest)
    except (RuntimeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    manifest.write()
    print(f"wrote {len(manifest.files)} files + manifest.json to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
