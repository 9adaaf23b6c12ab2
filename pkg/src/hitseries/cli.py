"""Command-line front end.

Every subcommand reads an optional JSON config, applies flag overrides,
validates the result and writes one artifact (JSON or CSV) stamped with a
hash of the configuration and the seed.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .chaos import SpaceQuadrature, chaos_coefficients, duhamel_kernels, symmetrize
from .errors import ConfigError, HitSeriesError
from .grid import make_uniform_grid
from .hitting import DomainSpec, mc_hit_probability, partial_bridge_oracle
from .integrator import covariance_matrix, sample_paths
from .presets import fourier_rank, identity_preset, kernel_preset, partial_bridge
from .quantization import SeriesSettings, hitting_probability_series
from .validation import run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

DEFAULTS = {
    "grid": {"n_cells": 1024},
    "operator": {
        "preset": "identity",
        "beta": 0.5,
        "betas": [0.5, 0.3],
        "frequencies": [0, 1],
        "name": "cosine",
        "amplitude": -0.5,
    },
    "domain": {"b": 0.0, "x": 1.0},
    "mc": {"n_paths": 1_000_000, "seed": 0, "bridge_correction": True, "allow_biased_bridge": False},
    "series": {"N_max": 3, "L_trunc": 8.0, "time_grid": 64, "space_grid": 400, "check_convergence": True},
    "oracle": {"quad_order": 64},
    "sample": {"n_paths": 16},
    "output": {"format": "json", "path": None},
    "workers": None,
}
PRESETS = ("identity", "partial_bridge", "fourier_rank", "kernel_preset")
# fields that do not change the computed payload
UNHASHED = ("output", "workers")


def _merge(base: dict, update: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        path = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigError(f"unknown config field '{path}'")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config field '{path}' must be an object")
            out[key] = _merge(base[key], val, path)
        else:
            out[key] = val
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return _merge(DEFAULTS, doc)


def _need(cond: bool, field: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"config field '{field}': {msg}")


def _number(cfg: dict, section: str, key: str, kind=float):
    val = cfg[section][key]
    ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    if kind is int:
        ok = ok and float(val).is_integer()
    _need(ok, f"{section}.{key}", f"expected {'an integer' if kind is int else 'a number'}, got {val!r}")
    return kind(val)


def validate_config(cfg: dict) -> dict:
    """Type-check and normalize a merged config; raise ``ConfigError`` with the field name."""
    cfg = copy.deepcopy(cfg)
    cfg["grid"]["n_cells"] = _number(cfg, "grid", "n_cells", int)
    _need(cfg["grid"]["n_cells"] >= 2, "grid.n_cells", "must be >= 2")
    op = cfg["operator"]
    _need(op["preset"] in PRESETS, "operator.preset", f"must be one of {', '.join(PRESETS)}")
    op["beta"] = _number(cfg, "operator", "beta")
    _need(abs(op["beta"]) < 1, "operator.beta", "|beta| must be < 1")
    _need(isinstance(op["betas"], list), "operator.betas", "expected a list")
    _need(isinstance(op["frequencies"], list), "operator.frequencies", "expected a list")
    for b in op["betas"]:
        _need(isinstance(b, (int, float)) and abs(b) < 1, "operator.betas", "every |beta| must be < 1")
    for k in op["frequencies"]:
        _need(isinstance(k, int) and not isinstance(k, bool), "operator.frequencies", "expected integers")
    _need(len(op["betas"]) == len(op["frequencies"]), "operator.betas", "length must match operator.frequencies")
    op["betas"] = [float(b) for b in op["betas"]]
    op["amplitude"] = _number(cfg, "operator", "amplitude")
    _need(-1 < op["amplitude"] <= 0, "operator.amplitude", "must lie in (-1, 0] for a contraction")
    _need(op["name"] == "cosine", "operator.name", "only 'cosine' is available")
    cfg["domain"]["b"] = _number(cfg, "domain", "b")
    cfg["domain"]["x"] = _number(cfg, "domain", "x")
    _need(cfg["domain"]["x"] > cfg["domain"]["b"], "domain.x", "start point must satisfy x > b")
    cfg["mc"]["n_paths"] = _number(cfg, "mc", "n_paths", int)
    _need(cfg["mc"]["n_paths"] >= 100, "mc.n_paths", "must be >= 100")
    cfg["mc"]["seed"] = _number(cfg, "mc", "seed", int)
    _need(cfg["mc"]["seed"] >= 0, "mc.seed", "must be >= 0")
    for key in ("bridge_correction", "allow_biased_bridge"):
        _need(isinstance(cfg["mc"][key], bool), f"mc.{key}", "expected true or false")
    s = cfg["series"]
    s["N_max"] = _number(cfg, "series", "N_max", int)
    _need(0 <= s["N_max"] <= 4, "series.N_max", "must lie in 0..4")
    s["time_grid"] = _number(cfg, "series", "time_grid", int)
    _need(s["time_grid"] >= 2, "series.time_grid", "must be >= 2")
    s["space_grid"] = _number(cfg, "series", "space_grid", int)
    _need(s["space_grid"] >= 10, "series.space_grid", "must be >= 10")
    s["L_trunc"] = _number(cfg, "series", "L_trunc")
    _need(s["L_trunc"] >= 6, "series.L_trunc", "must be >= 6")
    _need(isinstance(s["check_convergence"], bool), "series.check_convergence", "expected true or false")
    cfg["oracle"]["quad_order"] = _number(cfg, "oracle", "quad_order", int)
    _need(cfg["oracle"]["quad_order"] >= 20, "oracle.quad_order", "must be >= 20")
    cfg["sample"]["n_paths"] = _number(cfg, "sample", "n_paths", int)
    _need(cfg["sample"]["n_paths"] >= 1, "sample.n_paths", "must be >= 1")
    _need(cfg["output"]["format"] in ("json", "csv"), "output.format", "must be 'json' or 'csv'")
    if cfg["workers"] is not None:
        w = cfg["workers"]
        _need(isinstance(w, int) and not isinstance(w, bool) and w >= 1, "workers", "must be a positive integer")
    return cfg


def config_hash(cfg: dict) -> str:
    payload = {k: v for k, v in cfg.items() if k not in UNHASHED}
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def build_preset(cfg: dict, n_cells: int | None = None):
    op = cfg["operator"]
    grid = make_uniform_grid(n_cells or cfg["grid"]["n_cells"])
    name = op["preset"]
    if name == "identity":
        return identity_preset(grid)
    if name == "partial_bridge":
        return partial_bridge(grid, op["beta"])
    if name == "fourier_rank":
        return fourier_rank(grid, op["betas"], op["frequencies"])
    return kernel_preset(grid, op["amplitude"], op["name"])


def series_settings(cfg: dict) -> SeriesSettings:
    s = cfg["series"]
    return SeriesSettings(s["N_max"], s["time_grid"], s["L_trunc"], s["space_grid"], s["check_convergence"])


# -- subcommands -------------------------------------------------------------


def cmd_covariance(cfg):
    model = build_preset(cfg).model()
    cov = covariance_matrix(model)
    t = model.grid.endpoints
    lines = ["s,t,value"]
    for i, s in enumerate(t):
        for j, u in enumerate(t):
            lines.append(f"{float(s)!r},{float(u)!r},{float(cov[i, j])!r}")
    return "csv", "\n".join(lines) + "\n"


def cmd_sample(cfg):
    model = build_preset(cfg).model()
    ens = sample_paths(model, cfg["sample"]["n_paths"], cfg["mc"]["seed"], cfg["workers"])
    return "csv", ens.to_csv()


def cmd_mc_hit(cfg):
    preset = build_preset(cfg)
    mc = cfg["mc"]
    est = mc_hit_probability(
        preset.model(),
        DomainSpec(cfg["domain"]["b"]),
        cfg["domain"]["x"],
        n_paths=mc["n_paths"],
        seed=mc["seed"],
        bridge_correction=mc["bridge_correction"],
        allow_biased_bridge=mc["allow_biased_bridge"],
        workers=cfg["workers"],
    )
    rec = est.record()
    rec["biased"] = est.details["biased"]
    rec["preset"] = preset.name
    return "json", rec


def _bridge_beta(cfg) -> float:
    name = cfg["operator"]["preset"]
    if name == "identity":
        return 0.0
    if name == "partial_bridge":
        return cfg["operator"]["beta"]
    raise ConfigError("config field 'operator.preset': oracle-hit needs identity or partial_bridge")


def cmd_oracle_hit(cfg):
    beta = _bridge_beta(cfg)
    est = partial_bridge_oracle(cfg["domain"]["x"] - cfg["domain"]["b"], beta, cfg["oracle"]["quad_order"])
    rec = est.record()
    rec.update({"beta": beta, "x": cfg["domain"]["x"], "b": cfg["domain"]["b"]})
    return "json", rec


def cmd_series_hit(cfg):
    preset = build_preset(cfg, n_cells=cfg["series"]["time_grid"])
    est = hitting_probability_series(
        cfg["domain"]["x"] - cfg["domain"]["b"], preset.betas, preset.basis, series_settings(cfg)
    )
    d = est.details
    rec = {
        "method": "series",
        "value": est.p_hat,
        "tail_bound": est.stderr,
        "tail_bound_kind": d["tail_bound_kind"],
        "declared_tolerance": max(est.stderr, 5e-3),
        "N_max": d["N_max"],
        "betas": d["betas"],
        "x": cfg["domain"]["x"],
        "b": cfg["domain"]["b"],
        "per_order": d["per_order"],
        "second_moment": d["second_moment"],
        "preset": preset.name,
    }
    if "convergence" in d:
        rec["convergence"] = d["convergence"]
    return "json", rec


def cmd_kernels(cfg):
    preset = build_preset(cfg, n_cells=cfg["series"]["time_grid"])
    s = series_settings(cfg)
    x = cfg["domain"]["x"] - cfg["domain"]["b"]
    grid = s.time_grid
    basis = tuple(preset.r.basis) if preset.r.rank else ()
    coeffs = chaos_coefficients(x, basis, s.n_max, grid, s.space)
    if cfg["output"]["format"] == "csv":
        return "csv", coeffs.to_csv()
    kernels = duhamel_kernels(x, s.n_max, grid, s.space)
    rec = {
        "x": cfg["domain"]["x"],
        "b": cfg["domain"]["b"],
        "n0": float(kernels[0].values),
        "N_max": s.n_max,
        "time_grid": s.time_cells,
        "kernel_sums": [float(symmetrize(k).values.sum()) * grid.width**k.order for k in kernels],
        "coefficients": {
            str(n): {";".join(map(str, r)): a for r, a in c.items()} for n, c in coeffs.orders.items()
        },
        "second_moment": coeffs.second_moment(),
    }
    return "json", rec


def cmd_validate(cfg):
    results = run_suite()
    rec = {"checks": results, "passed": all(r["passed"] for r in results)}
    return "json", rec


COMMANDS = {
    "covariance": cmd_covariance,
    "sample": cmd_sample,
    "mc-hit": cmd_mc_hit,
    "oracle-hit": cmd_oracle_hit,
    "series-hit": cmd_series_hit,
    "kernels": cmd_kernels,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hitseries", description="Hitting probabilities of Gaussian integrators.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--n-cells", type=int, dest="grid.n_cells")
    p.add_argument("--preset", choices=PRESETS, dest="operator.preset")
    p.add_argument("--beta", type=float, dest="operator.beta")
    p.add_argument("--betas", type=lambda s: [float(v) for v in s.split(",")], dest="operator.betas")
    p.add_argument("--frequencies", type=lambda s: [int(v) for v in s.split(",")], dest="operator.frequencies")
    p.add_argument("--amplitude", type=float, dest="operator.amplitude")
    p.add_argument("--x", type=float, dest="domain.x")
    p.add_argument("--b", type=float, dest="domain.b")
    p.add_argument("--n-paths", type=int, dest="mc.n_paths")
    p.add_argument("--seed", type=int, dest="mc.seed")
    p.add_argument("--bridge", action=argparse.BooleanOptionalAction, dest="mc.bridge_correction")
    p.add_argument("--allow-biased-bridge", action="store_const", const=True, dest="mc.allow_biased_bridge")
    p.add_argument("--n-max", type=int, dest="series.N_max")
    p.add_argument("--time-grid", type=int, dest="series.time_grid")
    p.add_argument("--space-grid", type=int, dest="series.space_grid")
    p.add_argument("--l-trunc", type=float, dest="series.L_trunc")
    p.add_argument("--quad-order", type=int, dest="oracle.quad_order")
    p.add_argument("--sample-paths", type=int, dest="sample.n_paths")
    p.add_argument("--format", choices=("json", "csv"), dest="output.format")
    p.add_argument("--output", "-o", dest="output.path")
    p.add_argument("--workers", type=int, dest="workers")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config)
    for key, val in vars(args).items():
        if val is None or key in ("command", "config"):
            continue
        if "." in key:
            section, field_ = key.split(".")
            cfg[section][field_] = val
        else:
            cfg[key] = val
    return validate_config(cfg)


def _emit(kind: str, payload, cfg: dict, command: str) -> None:
    meta = {"command": command, "config_hash": config_hash(cfg), "seed": cfg["mc"]["seed"]}
    path = cfg["output"]["path"]
    if kind == "json":
        text = json.dumps({**payload, **meta}, indent=2, sort_keys=True) + "\n"
    else:
        text = payload
    if path is None:
        sys.stdout.write(text)
        if kind == "csv":
            sys.stderr.write(json.dumps(meta, sort_keys=True) + "\n")
        return
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    if kind == "csv":
        Path(f"{path}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        kind, payload = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HitSeriesError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(kind, payload, cfg, args.command)
    if args.command == "validate" and not payload["passed"]:
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
