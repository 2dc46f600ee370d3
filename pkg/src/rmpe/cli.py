"""Command-line harness: seeded runs, parameter sweeps, audits, trace replay.

One JSON config file drives everything; there are no positional parameters
besides the config (or trace) path.  All randomness flows from a single master
seed, so equal configs produce identical output files apart from the recorded
wall times.  Exit codes: 0 success, 1 config error, 2 infeasible parameters,
3 audit counterexample, 4 replay divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np
import jsonschema

from . import __version__
from .audits import AUDITS
from .driver import (
    InfeasibleParams,
    RunParams,
    RunTrace,
    Variant,
    compute_params,
    run_rmpe,
)
from .measurement import SpectrumModel, generator, random_model, substream

CSV_COLUMNS = [
    "variant",
    "S",
    "beta",
    "omega",
    "delta",
    "epsilon",
    "rho",
    "seed",
    "success",
    "failure_reason",
    "T_max",
    "T_total",
    "steps",
    "wall_time_ms",
]

_VARIANTS = [v.value for v in Variant]

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "rmpe experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["variant", "model", "algorithm", "runs"],
    "properties": {
        "variant": {"enum": _VARIANTS},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["beta", "omega"],
            "oneOf": [{"required": ["spikes"]}, {"required": ["random"]}],
            "properties": {
                "beta": {"type": "number"},
                "omega": {"type": "number"},
                "delta": {"type": "number", "minimum": 0},
                "spikes": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["dominant"],
                    "properties": {
                        "dominant": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "array",
                                "items": {"type": "number"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                        "residual": {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "items": {"type": "number"},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                        },
                    },
                },
                "random": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["n_spikes"],
                    "properties": {
                        "n_spikes": {"type": "integer", "minimum": 1},
                        "residual_mode": {"enum": ["uniform", "clustered", "none"]},
                        "n_residual": {"type": "integer", "minimum": 0},
                        "cluster_scale": {"type": "number", "exclusiveMinimum": 0},
                        "model_seed": {"type": "integer"},
                    },
                },
            },
        },
        "algorithm": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epsilon", "rho"],
            "properties": {
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "rho": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "overrides": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "eta": {"type": "number"},
                        "k_max": {"type": "integer"},
                        "c_const": {"type": "number"},
                        "alpha": {"type": "number"},
                    },
                },
            },
        },
        "runs": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axes"],
            "properties": {
                "axes": {
                    "type": "object",
                    "additionalProperties": False,
                    "minProperties": 1,
                    "properties": {
                        "epsilon": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                        "omega": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                        "delta": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                        "n_spikes": {"type": "array", "minItems": 1, "items": {"type": "integer"}},
                    },
                }
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
}


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    """Parse and validate a config file; raises ConfigError on any violation."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc
    model = cfg["model"]
    if not 0.0 <= model["omega"] < model["beta"] <= 1.0:
        raise ConfigError(
            "model invariant violated: the residual mass bound and the dominant "
            "weight floor must satisfy 0 <= omega < beta <= 1, and in particular "
            f"omega < beta (got omega={model['omega']}, beta={model['beta']})"
        )
    if "spikes" in model:
        _explicit_model(cfg)  # raises ConfigError on inconsistent spike tables
    return cfg


def _explicit_model(cfg: dict) -> SpectrumModel:
    model = cfg["model"]
    try:
        return SpectrumModel(
            dominant=tuple(tuple(p) for p in model["spikes"]["dominant"]),
            residual=tuple(tuple(p) for p in model["spikes"].get("residual", [])),
            beta=model["beta"],
            omega=model["omega"],
            delta=model.get("delta", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid explicit spike table: {exc}") from exc


def _params_for(cfg: dict) -> RunParams:
    model = cfg["model"]
    alg = cfg["algorithm"]
    n_spikes = (
        len(model["spikes"]["dominant"]) if "spikes" in model else model["random"]["n_spikes"]
    )
    overrides = alg.get("overrides", {})
    return compute_params(
        cfg["variant"],
        alg["epsilon"],
        alg["rho"],
        n_spikes,
        model["beta"],
        model["omega"],
        model.get("delta", 0.0),
        eta_override=overrides.get("eta"),
        k_override=overrides.get("k_max"),
        c_override=overrides.get("c_const"),
        alpha_override=overrides.get("alpha"),
    )


def _run_seed(master_seed: int, *key: int) -> int:
    return int(substream(master_seed, *key).generate_state(1, np.uint64)[0])


def _model_for_run(cfg: dict, run_seed: int) -> SpectrumModel:
    model = cfg["model"]
    if "spikes" in model:
        return _explicit_model(cfg)
    rnd = model["random"]
    seed = rnd.get("model_seed", None)
    rng = generator(seed if seed is not None else run_seed, 0)
    return random_model(
        rnd["n_spikes"],
        model["beta"],
        model["omega"],
        model.get("delta", 0.0),
        rng,
        residual_mode=rnd.get("residual_mode", "uniform"),
        n_residual=rnd.get("n_residual", 4),
        cluster_scale=rnd.get("cluster_scale", 1e-3),
    )


def execute_run(
    cfg: dict, params: RunParams, master_seed: int, run_index: int, key: tuple = ()
):
    """One seeded run; returns the CSV row dict and the full trace."""
    run_seed = _run_seed(master_seed, *key, run_index)
    model = _model_for_run(cfg, run_seed)
    start = time.perf_counter()
    trace = run_rmpe(model, params, run_seed)
    wall_ms = (time.perf_counter() - start) * 1e3
    row = {
        "variant": params.variant.value,
        "S": params.n_spikes,
        "beta": params.beta,
        "omega": params.omega,
        "delta": params.delta,
        "epsilon": params.epsilon,
        "rho": params.rho,
        "seed": trace.seed,
        "success": int(trace.success),
        "failure_reason": trace.failure_reason or "",
        "T_max": repr(trace.t_max),
        "T_total": repr(trace.t_total),
        "steps": len(trace.steps),
        "wall_time_ms": f"{wall_ms:.3f}",
    }
    return row, trace


def _execute_packed(args):
    cfg, params_dict, master_seed, run_index, key = args
    params = RunParams.from_dict(params_dict)
    row, trace = execute_run(cfg, params, master_seed, run_index, tuple(key))
    return run_index, row, trace.to_dict()


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path: str, rows: list[dict], *, append: bool = False) -> None:
    """Write (or append to) a result CSV atomically with a stable header."""
    head = ",".join(CSV_COLUMNS)
    existing = ""
    if append and os.path.exists(path):
        with open(path) as fh:
            existing = fh.read()
        first = existing.splitlines()[0] if existing else ""
        if first != head:
            raise ConfigError(f"existing CSV {path} has a different header")
    body = "".join(
        ",".join(str(row[c]) for c in CSV_COLUMNS) + "\n" for row in rows
    )
    if existing:
        _atomic_write(path, existing + body)
    else:
        _atomic_write(path, head + "\n" + body)


def read_csv(path: str) -> list[dict]:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def _resolve_seed(cfg: dict, flag_seed: Optional[int]) -> int:
    if flag_seed is not None:
        return flag_seed
    if "seed" in cfg:
        return cfg["seed"]
    env = os.environ.get("RMPE_SEED")
    if env is not None:
        return int(env)
    return 0


def _resolve_out(cfg: dict, flag_out: Optional[str]) -> str:
    out = flag_out or cfg.get("output", {}).get("dir", "results")
    os.makedirs(out, exist_ok=True)
    return out


def _run_batch(cfg: dict, params: RunParams, master_seed: int, jobs: int, key: tuple = ()):
    """Execute cfg["runs"] seeded runs, in order, optionally across processes."""
    n = cfg["runs"]
    tasks = [(cfg, params.to_dict(), master_seed, i, key) for i in range(n)]
    results: list = [None] * n
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, row, trace in pool.map(_execute_packed, tasks):
                results[idx] = (row, trace)
    else:
        for task in tasks:
            idx, row, trace = _execute_packed(task)
            results[idx] = (row, trace)
    return results


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        params = _params_for(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleParams as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return 2
    master_seed = _resolve_seed(cfg, args.seed)
    out = _resolve_out(cfg, args.out)
    results = _run_batch(cfg, params, master_seed, args.jobs)
    rows = [row for row, _ in results]
    csv_path = os.path.join(out, "runs.csv")
    write_csv(csv_path, rows, append=args.append)
    if args.trace:
        for i, (_, trace) in enumerate(results):
            _atomic_write(
                os.path.join(out, f"trace_run{i:04d}.json"),
                json.dumps({"format_version": __version__, "trace": trace}, indent=1),
            )
    n_ok = sum(int(r["success"]) for r in rows)
    print(f"{len(rows)} runs ({n_ok} successful) -> {csv_path}")
    return 0


def _sweep_combos(cfg: dict):
    axes = cfg["sweep"]["axes"]
    names = sorted(axes)
    grids = [axes[n] for n in names]
    combos = [[]]
    for grid in grids:
        combos = [c + [v] for c in combos for v in grid]
    return names, [dict(zip(names, c)) for c in combos]


def _apply_combo(cfg: dict, combo: dict) -> dict:
    out = json.loads(json.dumps(cfg))  # deep copy
    out.pop("sweep", None)
    for axis, value in combo.items():
        if axis == "epsilon":
            out["algorithm"]["epsilon"] = value
        elif axis == "omega":
            out["model"]["omega"] = value
        elif axis == "delta":
            out["model"]["delta"] = value
        elif axis == "n_spikes":
            if "random" not in out["model"]:
                raise ConfigError("an n_spikes axis requires a random model block")
            out["model"]["random"]["n_spikes"] = value
    if ("omega" in combo or "delta" in combo or "n_spikes" in combo) and "spikes" in out[
        "model"
    ]:
        raise ConfigError("sweeping model axes requires a random model block")
    return out


def fit_loglog_slope(xs: list[float], ys: list[float]) -> tuple[float, float]:
    lx, ly = np.log(np.asarray(xs)), np.log(np.asarray(ys))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def summarize_sweep(rows: list[dict], axis_names: list[str]) -> list[dict]:
    """Log-log slope of mean T_total and T_max against each swept axis.

    The epsilon axis is regressed against 1/epsilon, other axes against their
    value, matching the scaling claims under test.
    """
    fits = []
    for axis in axis_names:
        col = {"epsilon": "epsilon", "omega": "omega", "delta": "delta", "n_spikes": "S"}[axis]
        values = sorted({float(r[col]) for r in rows})
        if len(values) < 2:
            continue
        for metric in ("T_total", "T_max"):
            xs, means = [], []
            for v in values:
                group = [float(r[metric]) for r in rows if float(r[col]) == v]
                xs.append(1.0 / v if axis == "epsilon" else v)
                means.append(sum(group) / len(group))
            slope, intercept = fit_loglog_slope(xs, means)
            fits.append(
                {
                    "axis": axis,
                    "regressor": "1/epsilon" if axis == "epsilon" else axis,
                    "metric": metric,
                    "slope": slope,
                    "intercept": intercept,
                    "points": sorted(zip(xs, means)),
                }
            )
    return fits


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
        if "sweep" not in cfg:
            raise ConfigError("sweep command requires a sweep block")
        names, combos = _sweep_combos(cfg)
        combo_cfgs = [_apply_combo(cfg, combo) for combo in combos]
        combo_params = [_params_for(c) for c in combo_cfgs]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleParams as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return 2
    master_seed = _resolve_seed(cfg, args.seed)
    out = _resolve_out(cfg, args.out)
    all_rows: list[dict] = []
    for combo_index, (ccfg, params) in enumerate(zip(combo_cfgs, combo_params)):
        results = _run_batch(ccfg, params, master_seed, args.jobs, key=(combo_index,))
        all_rows.extend(row for row, _ in results)
    csv_path = os.path.join(out, "sweep.csv")
    write_csv(csv_path, all_rows)
    fits = summarize_sweep(all_rows, names)
    summary_path = os.path.join(out, "sweep_summary.json")
    _atomic_write(summary_path, json.dumps({"axes": names, "fits": fits}, indent=1))
    print(f"{len(all_rows)} rows -> {csv_path}; {len(fits)} fits -> {summary_path}")
    return 0


def cmd_audit(args) -> int:
    if args.which not in AUDITS:
        print(f"unknown audit {args.which!r}; choose from {sorted(AUDITS)}", file=sys.stderr)
        return 1
    kwargs = {}
    if args.alpha_scale is not None:
        if args.which not in ("thm1", "cor1"):
            print("--alpha-scale applies only to thm1 and cor1", file=sys.stderr)
            return 1
        kwargs["alpha_scale"] = args.alpha_scale
    result = AUDITS[args.which](args.trials, args.seed if args.seed is not None else 0, **kwargs)
    print(
        f"audit {result.name}: {result.passes}/{result.trials} pass, "
        f"{result.failures} fail, {result.hypothesis_violations} outside hypothesis"
    )
    if not result.ok:
        out = _resolve_out({}, args.out)
        ce_path = os.path.join(out, f"audit_{args.which}_counterexamples.json")
        _atomic_write(ce_path, json.dumps(result.counterexamples, indent=1, default=str))
        print(f"counterexamples -> {ce_path}", file=sys.stderr)
        return 3
    return 0


def replay_trace(path: str) -> tuple[bool, str]:
    """Re-execute a recorded trace; returns (identical, message)."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != __version__:
        print(
            f"warning: trace format {payload.get('format_version')} != {__version__}; "
            "replaying best-effort",
            file=sys.stderr,
        )
    recorded = RunTrace.from_dict(payload["trace"])
    fresh = run_rmpe(recorded.model, recorded.params, recorded.seed)
    if len(fresh.steps) != len(recorded.steps):
        return False, f"step count {len(fresh.steps)} != recorded {len(recorded.steps)}"
    for new, old in zip(fresh.steps, recorded.steps):
        if new.to_dict() != old.to_dict():
            return False, f"divergence at step {old.index}"
    if fresh.to_dict() != recorded.to_dict():
        return False, "final trace fields diverge"
    return True, "identical"


def cmd_replay(args) -> int:
    try:
        same, msg = replay_trace(args.trace)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"cannot replay {args.trace}: {exc}", file=sys.stderr)
        return 1
    print(f"replay {args.trace}: {msg}")
    return 0 if same else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmpe",
        description="Multi-eigenphase estimation experiments on simulated measurement data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute seeded runs from a config")
    p_run.add_argument("config")
    p_run.add_argument("--trace", action="store_true", help="write one JSON trace per run")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--append", action="store_true", help="append to an existing CSV")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="cartesian parameter sweep with slope fits")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_audit = sub.add_parser("audit", help="randomized brute-force property audits")
    p_audit.add_argument("which", choices=sorted(AUDITS))
    p_audit.add_argument("--trials", type=int, default=1000)
    p_audit.add_argument("--seed", type=int, default=None)
    p_audit.add_argument("--alpha-scale", type=float, default=None)
    p_audit.add_argument("--out", default=None)
    p_audit.set_defaults(func=cmd_audit)

    p_replay = sub.add_parser("replay", help="re-execute a trace and check bit-identity")
    p_replay.add_argument("trace")
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
