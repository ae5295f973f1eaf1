"""Command-line harness: presets, config handling, artifacts and subcommands.

A run is fully described by one nested key/value config (JSON on disk) that
can be patched from the command line with flat dotted keys, e.g.
``--set controller.k_a=3``.  Every artifact embeds the resolved config and
seed; re-running the embedded config reproduces the trace byte for byte.

Subcommands: run, compare, sweep, plot, presets.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .control_dynamic import DynamicGains
from .control_kinematic import KinematicGains
from .estimation import NoiseConfig
from .metrics import compute_run_metrics
from .shunting import ShuntingParams
from .sim import (
    ActuatorLag,
    Circle,
    ControllerConfig,
    ControllerVariant,
    CustomPath,
    Scenario,
    SimTrace,
    SimulationError,
    StraightLine,
    TRACE_COLUMNS,
    TRACE_UNITS,
    VARIANT_NAMES,
    run,
)
from .vehicle import BodyVelocity, Pose, VehicleParams

__all__ = [
    "ConfigError",
    "UnknownPreset",
    "PRESETS",
    "preset",
    "preset_config",
    "default_config",
    "resolve_config",
    "run_from_config",
    "write_trace_csv",
    "read_trace_csv",
    "main",
]

TRACE_FORMAT = "uuvtrack-trace v1"
OUT_ENV_VAR = "UUVTRACK_OUT"
DEFAULT_OUT = "uuvtrack-runs"


class ConfigError(ValueError):
    """Unknown key, malformed value, or inconsistent combination in a config."""


class UnknownPreset(ConfigError):
    """Requested preset name does not exist."""


# --------------------------------------------------------------------------
# config schema

def default_config() -> dict:
    """Fully populated config with the stock vehicle, gains and scenario."""
    return {
        "seed": 0,
        "vehicle": {
            "m_u": 54.35, "m_v": 54.35, "m_r": 1.93,
            "d_u": 17.51, "d_v": 17.51, "d_r": 2.4,
            "q_u": 10.0, "q_v": 10.0, "q_r": 2.0,
        },
        "controller": {
            "variant": "bio_bs+bio_smc",
            "k_a": 2.0,
            "k_b": 1.0,
            "gamma": 1.0,
            "k_s": 1.0,
            "k_switch": [2.0, 2.0, 0.2],
            "sat_slope": 3.0,
            "sat_upper": [1.0, 1.0, 0.03],
            "sat_lower": [1.0, 1.0, 0.03],
            "kin_decay": [4.0, 4.0, 4.0],
            "kin_upper": [1.0, 1.0, 1.0],
            "kin_lower": [1.0, 1.0, 1.0],
            "bio_decay": [3.0, 3.0, 3.0],
            "bio_upper": [1.0, 1.0, 1.0],
            "bio_lower": [1.0, 1.0, 1.0],
            "feedforward": "corrected",
            "model_scale": 1.0,
        },
        "scenario": {
            "trajectory": {"kind": "straight", "x0": 3.0, "y0": 0.0,
                           "vx": 0.4, "vy": 0.4, "heading": math.pi / 4.0},
            "initial_pose": [0.0, 0.0, 0.0],
            "initial_vel": [0.0, 0.0, 0.0],
            "duration": 100.0,
            "dt": 0.01,
            "actuator_sigma": 0.5,
            "actuator_mode": "ramp",
            "noise": None,
            "estimator": False,
        },
    }


_NOISE_DEFAULTS = {
    "q_pos": [1e-5, 1e-5, 1e-6],
    "q_vel": [1e-3, 1e-3, 1e-4],
    "r_scale": 10.0,
    "as_stddev": False,
}

_TRAJECTORY_KEYS = {
    "straight": {"kind", "x0", "y0", "vx", "vy", "heading"},
    "circle": {"kind", "cx", "cy", "radius", "rate"},
    "custom": {"kind", "t", "x", "y", "psi"},
}

PRESETS = ("straight", "circle", "circle_noisy")

_PRESET_SUMMARIES = {
    "straight": "diagonal line at 0.57 m/s, fixed 45 deg heading, 100 s, noise off",
    "circle": "radius-5 circle about (0, 7) at 0.1 rad/s, 80 s, noise off",
    "circle_noisy": "circle preset with Gaussian noise and the state filters on",
}


def preset_config(name: str) -> dict:
    """Resolved config for a named preset."""
    cfg = default_config()
    if name == "straight":
        return cfg
    if name in ("circle", "circle_noisy"):
        cfg["scenario"]["trajectory"] = {
            "kind": "circle", "cx": 0.0, "cy": 7.0, "radius": 5.0, "rate": 0.1,
        }
        cfg["scenario"]["duration"] = 80.0
        if name == "circle_noisy":
            cfg["scenario"]["noise"] = copy.deepcopy(_NOISE_DEFAULTS)
            cfg["scenario"]["estimator"] = True
        return cfg
    raise UnknownPreset(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")


def preset(name: str) -> Scenario:
    """Scenario object for a named preset (stock controller variant)."""
    cfg = preset_config(name)
    return build_scenario(cfg["scenario"], cfg["controller"]["variant"], cfg["seed"])


# --------------------------------------------------------------------------
# validation and overrides

def _check_keys(section: dict, allowed, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key {path}.{key}" if path else
                              f"unknown config key {key}")


def validate_config(cfg: dict) -> None:
    """Reject unknown keys anywhere in the config."""
    template = default_config()
    _check_keys(cfg, template.keys(), "")
    _check_keys(cfg.get("vehicle", {}), template["vehicle"].keys(), "vehicle")
    _check_keys(cfg.get("controller", {}), template["controller"].keys(), "controller")
    scenario = cfg.get("scenario", {})
    _check_keys(scenario, template["scenario"].keys(), "scenario")
    traj = scenario.get("trajectory", {})
    kind = traj.get("kind")
    if kind not in _TRAJECTORY_KEYS:
        raise ConfigError(f"unknown trajectory kind {kind!r}")
    _check_keys(traj, _TRAJECTORY_KEYS[kind], "scenario.trajectory")
    noise = scenario.get("noise")
    if noise is not None:
        _check_keys(noise, set(_NOISE_DEFAULTS), "scenario.noise")


def _parse_set(expr: str) -> tuple[list[str], object]:
    key, sep, raw = expr.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {expr!r} must look like key.path=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings allowed, e.g. --set controller.variant=conv_bs+sign_smc
    return key.split("."), value


def apply_overrides(cfg: dict, sets: list[str]) -> None:
    """Apply flat dotted-key overrides in place."""
    for expr in sets:
        path, value = _parse_set(expr)
        node = cfg
        for part in path[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key {'.'.join(path)}")
            if node[part] is None and part == "noise":
                node[part] = copy.deepcopy(_NOISE_DEFAULTS)
            node = node[part]
        leaf = path[-1]
        if not isinstance(node, dict) or leaf not in node:
            # allow switching noise on/off and replacing the trajectory wholesale
            if isinstance(node, dict) and leaf in ("noise", "trajectory"):
                node[leaf] = value
                continue
            raise ConfigError(f"unknown config key {'.'.join(path)}")
        node[leaf] = value


def _deep_merge(base: dict, patch: dict, path: str = "") -> None:
    for key, value in patch.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _deep_merge(base[key], value, here)
        else:
            base[key] = value


def resolve_config(preset_name: str | None = None, config_file: str | None = None,
                   sets: list[str] | None = None, seed: int | None = None,
                   variant: str | None = None) -> dict:
    """Compose preset, config file, dotted overrides and flags into one config."""
    cfg = preset_config(preset_name) if preset_name else default_config()
    if config_file:
        with open(config_file) as fh:
            patch = json.load(fh)
        if "scenario" in patch and "trajectory" in patch.get("scenario", {}):
            cfg["scenario"]["trajectory"] = patch["scenario"].pop("trajectory")
        if "scenario" in patch and "noise" in patch.get("scenario", {}):
            cfg["scenario"]["noise"] = patch["scenario"].pop("noise")
        _deep_merge(cfg, patch)
    if sets:
        apply_overrides(cfg, sets)
    if variant is not None:
        cfg["controller"]["variant"] = variant
    if seed is not None:
        cfg["seed"] = seed
    validate_config(cfg)
    return cfg


# --------------------------------------------------------------------------
# config -> objects

def _triple(value, path: str) -> tuple[float, float, float]:
    try:
        a, b, c = (float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path} must be three numbers") from exc
    return (a, b, c)


def build_vehicle(cfg: dict) -> VehicleParams:
    try:
        return VehicleParams(**{k: float(v) for k, v in cfg.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad vehicle section: {exc}") from exc


def _channels(decay, upper, lower, path: str):
    a = _triple(decay, path + "_decay")
    b = _triple(upper, path + "_upper")
    d = _triple(lower, path + "_lower")
    try:
        return tuple(ShuntingParams(a[i], b[i], d[i]) for i in range(3))
    except ValueError as exc:
        raise ConfigError(f"bad {path} channels: {exc}") from exc


def build_controller(cfg: dict) -> ControllerConfig:
    try:
        gains = KinematicGains(k_a=float(cfg["k_a"]), k_b=float(cfg["k_b"]))
        dyn = DynamicGains(
            gamma=float(cfg["gamma"]),
            k_s=float(cfg["k_s"]),
            k_switch=_triple(cfg["k_switch"], "controller.k_switch"),
            sat_slope=float(cfg["sat_slope"]),
            sat_upper=_triple(cfg["sat_upper"], "controller.sat_upper"),
            sat_lower=_triple(cfg["sat_lower"], "controller.sat_lower"),
            bio_channels=_channels(cfg["bio_decay"], cfg["bio_upper"],
                                   cfg["bio_lower"], "controller.bio"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad controller section: {exc}") from exc
    model_scale = float(cfg["model_scale"])
    if not model_scale > 0.0:
        raise ConfigError("controller.model_scale must be strictly positive")
    return ControllerConfig(
        gains=gains,
        dyn=dyn,
        kin_channels=_channels(cfg["kin_decay"], cfg["kin_upper"],
                               cfg["kin_lower"], "controller.kin"),
        feedforward=str(cfg["feedforward"]),
        model_scale=model_scale,
    )


def build_trajectory(cfg: dict):
    kind = cfg.get("kind")
    try:
        if kind == "straight":
            return StraightLine(x0=float(cfg["x0"]), y0=float(cfg["y0"]),
                                vx=float(cfg["vx"]), vy=float(cfg["vy"]),
                                heading=float(cfg["heading"]))
        if kind == "circle":
            return Circle(cx=float(cfg["cx"]), cy=float(cfg["cy"]),
                          radius=float(cfg["radius"]), rate=float(cfg["rate"]))
        if kind == "custom":
            return CustomPath(t=tuple(float(v) for v in cfg["t"]),
                              x=tuple(float(v) for v in cfg["x"]),
                              y=tuple(float(v) for v in cfg["y"]),
                              psi=tuple(float(v) for v in cfg["psi"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad trajectory section: {exc}") from exc
    raise ConfigError(f"unknown trajectory kind {kind!r}")


def build_noise(cfg: dict | None, seed: int) -> NoiseConfig | None:
    if cfg is None:
        return None
    try:
        return NoiseConfig(
            q_pos=_triple(cfg["q_pos"], "scenario.noise.q_pos"),
            q_vel=_triple(cfg["q_vel"], "scenario.noise.q_vel"),
            r_scale=float(cfg["r_scale"]),
            seed=int(seed),
            as_stddev=bool(cfg["as_stddev"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad noise section: {exc}") from exc


def build_scenario(cfg: dict, variant_name: str, seed: int) -> Scenario:
    pose = _triple(cfg["initial_pose"], "scenario.initial_pose")
    vel = _triple(cfg["initial_vel"], "scenario.initial_vel")
    try:
        variant = ControllerVariant.parse(variant_name)
        return Scenario(
            trajectory=build_trajectory(cfg["trajectory"]),
            variant=variant,
            initial_pose=Pose(*pose),
            initial_vel=BodyVelocity(*vel),
            duration=float(cfg["duration"]),
            dt=float(cfg["dt"]),
            actuator=ActuatorLag(sigma=float(cfg["actuator_sigma"]),
                                 mode=str(cfg["actuator_mode"])),
            noise=build_noise(cfg["noise"], seed),
            use_estimator=bool(cfg["estimator"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad scenario section: {exc}") from exc


def run_from_config(config: dict):
    """Build everything from a resolved config and simulate.

    Returns (trace, controller_config); the trace carries the config as meta.
    """
    validate_config(config)
    params = build_vehicle(config["vehicle"])
    ctrl = build_controller(config["controller"])
    scenario = build_scenario(config["scenario"], config["controller"]["variant"],
                              config["seed"])
    trace = run(scenario, params, ctrl, meta=config)
    return trace, ctrl


# --------------------------------------------------------------------------
# artifacts

def _config_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def write_trace_csv(trace: SimTrace, config: dict, path: str) -> None:
    """Trace as CSV with the resolved config, seed and units in the header."""
    lines = [
        f"# {TRACE_FORMAT}",
        f"# config: {_config_json(config)}",
        f"# seed: {config['seed']}",
        f"# units: {','.join(TRACE_UNITS)}",
        ",".join(TRACE_COLUMNS),
    ]
    for row in trace.data:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path: str) -> tuple[SimTrace, dict]:
    """Parse a trace CSV back into arrays plus its embedded config."""
    config = None
    rows = []
    columns = None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("config:"):
                    config = json.loads(body[len("config:"):].strip())
                continue
            if columns is None:
                columns = tuple(line.split(","))
                if columns != TRACE_COLUMNS:
                    raise ConfigError(f"{path} does not match the v1 column set")
                continue
            rows.append([float(v) for v in line.split(",")])
    if config is None or columns is None:
        raise ConfigError(f"{path} is missing the trace header")
    data = np.array(rows, dtype=float)
    return SimTrace(data, dt=float(config["scenario"]["dt"]), meta=config), config


def write_metrics_json(metrics, config: dict, path: str) -> None:
    payload = {
        "config": config,
        "seed": config["seed"],
        "metrics": metrics.as_dict(),
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _out_dir(flag_value: str | None) -> str:
    return flag_value or os.environ.get(OUT_ENV_VAR) or DEFAULT_OUT


def _execute_run(config: dict, out_dir: str, svg: bool) -> dict:
    """Run one config and write its artifacts; returns the metrics dict."""
    os.makedirs(out_dir, exist_ok=True)
    trace, ctrl = run_from_config(config)
    metrics = compute_run_metrics(trace, ctrl)
    write_trace_csv(trace, config, os.path.join(out_dir, "trace.csv"))
    write_metrics_json(metrics, config, os.path.join(out_dir, "metrics.json"))
    if svg:
        from .plots import render_trace_svg

        render_trace_svg(trace, os.path.join(out_dir, "plot.svg"),
                         title=config["controller"]["variant"])
    return metrics.as_dict()


def _compare_worker(job: tuple[dict, str, bool]) -> tuple[str, dict]:
    config, out_dir, svg = job
    return config["controller"]["variant"], _execute_run(config, out_dir, svg)


# --------------------------------------------------------------------------
# subcommands

def _metrics_table(rows: list[tuple[str, dict]]) -> str:
    header = (f"{'variant':<22} {'chat_x':>10} {'chat_y':>10} {'chat_n':>10} "
              f"{'pos_rmse':>10} {'settle':>8} {'peak_jump':>10}")
    lines = [header, "-" * len(header)]
    for name, m in rows:
        cx, cy, cn = m["chattering"]
        settle = f"{m['settle_time']:.2f}" if math.isfinite(m["settle_time"]) else "never"
        lines.append(f"{name:<22} {cx:>10.4f} {cy:>10.4f} {cn:>10.4f} "
                     f"{m['pos_rmse']:>10.4f} {settle:>8} {m['peak_cmd_jump']:>10.4f}")
    return "\n".join(lines)


def _cmd_run(args) -> int:
    config = resolve_config(args.preset, args.config, args.set, args.seed,
                            args.controller)
    out_dir = _out_dir(args.out)
    metrics = _execute_run(config, out_dir, args.svg)
    print(_metrics_table([(config["controller"]["variant"], metrics)]))
    print(f"artifacts in {out_dir}")
    return 0


def _cmd_compare(args) -> int:
    if args.controllers == "all":
        names = list(VARIANT_NAMES)
    else:
        names = [n.strip() for n in args.controllers.split(",") if n.strip()]
    base = resolve_config(args.preset, args.config, args.set, args.seed, None)
    out_root = _out_dir(args.out)
    jobs = []
    for name in names:
        cfg = copy.deepcopy(base)
        cfg["controller"]["variant"] = name
        validate_config(cfg)
        jobs.append((cfg, os.path.join(out_root, name.replace("+", "_")), args.svg))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_compare_worker, jobs))
    else:
        results = [_compare_worker(job) for job in jobs]
    results.sort(key=lambda item: sum(item[1]["chattering"]) / 3.0)
    table = _metrics_table(results)
    print(table)
    payload = {"config": base, "runs": {name: m for name, m in results}}
    os.makedirs(out_root, exist_ok=True)
    with open(os.path.join(out_root, "compare.json"), "w", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"artifacts in {out_root}")
    return 0


def _cmd_sweep(args) -> int:
    try:
        values = json.loads(args.values)
        if not isinstance(values, list):
            values = [values]
    except json.JSONDecodeError:
        values = [json.loads(v) for v in args.values.split(",")]
    base = resolve_config(args.preset, args.config, args.set, args.seed,
                          args.controller)
    out_root = _out_dir(args.out)
    rows = []
    for value in values:
        cfg = copy.deepcopy(base)
        apply_overrides(cfg, [f"{args.param}={json.dumps(value)}"])
        validate_config(cfg)
        label = f"{args.param}={value}"
        out_dir = os.path.join(out_root, label.replace(".", "_").replace("=", "-"))
        rows.append((label, _execute_run(cfg, out_dir, args.svg)))
    print(_metrics_table(rows))
    os.makedirs(out_root, exist_ok=True)
    with open(os.path.join(out_root, "sweep.json"), "w", newline="\n") as fh:
        json.dump({"param": args.param, "runs": dict(rows)}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"artifacts in {out_root}")
    return 0


def _cmd_plot(args) -> int:
    from .plots import render_trace_svg

    trace, config = read_trace_csv(args.trace)
    out = args.out or os.path.splitext(args.trace)[0] + ".svg"
    render_trace_svg(trace, out, title=config["controller"]["variant"])
    print(f"wrote {out}")
    return 0


def _cmd_presets(_args) -> int:
    for name in PRESETS:
        print(f"{name:<14} {_PRESET_SUMMARIES[name]}")
    return 0


def _add_common(parser: argparse.ArgumentParser, with_controller: bool = True) -> None:
    parser.add_argument("--preset", choices=PRESETS, default=None,
                        help="scenario preset to start from")
    parser.add_argument("--config", default=None, help="JSON config file to merge")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-key override, repeatable")
    parser.add_argument("--seed", type=int, default=None, help="noise seed")
    parser.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_ENV_VAR} or ./{DEFAULT_OUT})")
    parser.add_argument("--svg", action="store_true", help="also render plot.svg")
    if with_controller:
        parser.add_argument("--controller", default=None, choices=VARIANT_NAMES,
                            help="controller variant")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uuvtrack",
        description="Trajectory-tracking control testbed for a planar underwater vehicle",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario and write artifacts")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="run several controller variants side by side")
    _add_common(p_cmp, with_controller=False)
    p_cmp.add_argument("--controllers", default="all",
                       help="comma-separated variant names, or 'all'")
    p_cmp.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes")
    p_cmp.set_defaults(func=_cmd_compare)

    p_sweep = sub.add_parser("sweep", help="repeat a run over values of one config key")
    _add_common(p_sweep)
    p_sweep.add_argument("--param", required=True, help="dotted config key to vary")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated or JSON list of values")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_plot = sub.add_parser("plot", help="render an SVG from an existing trace.csv")
    p_plot.add_argument("--trace", required=True, help="path to trace.csv")
    p_plot.add_argument("--out", default=None, help="output SVG path")
    p_plot.set_defaults(func=_cmd_plot)

    p_presets = sub.add_parser("presets", help="list scenario presets")
    p_presets.set_defaults(func=_cmd_presets)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
