"""Command-line front end.

Every command reads an optional JSON config (``--config``) and applies flag
overrides on top of it; flags win.  The resolved config is echoed into every
file written, so rerunning an identical config reproduces the files byte for
byte.  Individuals are numbered from 1 on the command line and in all files.

Config layout (all keys optional unless a command needs them)::

    {
      "preset": "fig6",
      "params": {"sigma_a": 1, "sigma_s": 0.5, "sigma_c": 0.5, "mu_s": 0.5,
                 "mu_c": 0.05, "r": 0.86, "tau": 0.8, "n": 2},
      "individuals": [{"alpha": 0.6, "x0": 0, "y0": 0}, 0.1],
      "ignore_threshold": [2],
      "sim": {"t_end": 50, "dt_max": 0.1, "event_tol": 1e-10,
              "sample_every": 0.1, "horizon_periods": 40},
      "mode": "both",
      "alpha_ranges": [[0, 1, 101], [0, 1, 101]],
      "alpha1_range": [0.3, 1, 50],
      "out": "results"
    }

Output directory: ``--out`` beats the ``PLANNED_BEHAVIOR_OUT`` environment
variable, which beats the config's ``out``; the default is ``./out``.

Files per command (inside the output directory):

    simulate   trajectory.csv (t, x_1..x_n, y_1..y_n), events.csv (individual, t),
               simulate.json
    classify   classify.json
    sweep      grid.csv, boundary_lin.csv, boundary_M0.csv (n = 2), sweep.json
    boundary   boundary_M0.csv, boundary_lin.csv, boundary.json
    minalpha   minalpha.json

CSV files start with one ``#`` line holding the resolved config as JSON.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Errors
are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from . import io as pio
from .analytic import (
    M_ZERO_TOL,
    action_bounds,
    b0_alpha2,
    classify_two,
    min_alpha1_bisect,
    min_alpha1_for_action_B0,
)
from .model import DomainError, GlobalParams, IndividualConfig, ParameterError, TwoBodyConstants
from .simulate import SimConfig, SimulationError, default_config, simulate, simulate_and_classify
from .sweep import (
    FIG6_PARAMS,
    AxisRange,
    SweepSpec,
    linear_boundary,
    run_sweep,
    trace_boundary_M0,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
OUT_ENV = "PLANNED_BEHAVIOR_OUT"

PRESETS = {"fig6": FIG6_PARAMS}
PARAM_KEYS = ("sigma_a", "sigma_s", "sigma_c", "mu_s", "mu_c", "r", "tau", "n")
SIM_KEYS = ("t_end", "dt_max", "event_tol", "sample_every", "horizon_periods")


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _report(EXIT_CONFIG, "UsageError", message, self.prog)
        sys.exit(EXIT_CONFIG)


def _report(code, kind, message, command=None, **extra):
    err = {"error": kind, "message": str(message), "exit_code": code}
    if command:
        err["command"] = command
    err.update(extra)
    sys.stderr.write(json.dumps(pio.jsonable(err), sort_keys=True) + "\n")


# --- config resolution -----------------------------------------------------

def _load(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _parse_assign(items, allowed, what):
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or key not in allowed:
            raise ConfigError(f"bad {what} override {item!r}; expected KEY=VALUE with KEY in "
                              f"{', '.join(allowed)}")
        try:
            out[key] = int(val) if key in ("n", "horizon_periods") else float(val)
        except ValueError as exc:
            raise ConfigError(f"{what} {key} needs a number, got {val!r}") from exc
    return out


def _range(r):
    try:
        lo, hi, steps = r
        if float(steps) != int(steps):
            raise ValueError
        return [float(lo), float(hi), int(steps)]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"a range must be [lo, hi, steps] with integer steps, got {r!r}") from exc


def resolve(args) -> dict:
    """Merge the JSON config with flag overrides into one plain dict."""
    cfg = _load(args.config)
    unknown = set(cfg) - {"preset", "params", "individuals", "ignore_threshold", "sim",
                          "mode", "alpha_ranges", "alpha1_range", "out"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    preset = args.preset or cfg.get("preset")
    params = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        params.update(PRESETS[preset].as_dict())
        params.pop("n")
    params.update(cfg.get("params") or {})
    params.update(_parse_assign(args.param, PARAM_KEYS, "param"))

    individuals = cfg.get("individuals")
    if getattr(args, "alphas", None) is not None:
        individuals = [{"alpha": a} for a in args.alphas]
    if individuals is not None:
        individuals = [ind if isinstance(ind, dict) else {"alpha": ind} for ind in individuals]
        if "n" not in params:
            params["n"] = len(individuals)

    sim = dict(cfg.get("sim") or {})
    sim.update(_parse_assign(args.sim, SIM_KEYS, "sim"))

    out = {"params": params, "sim": sim}
    if preset is not None:
        out["preset"] = preset
    if individuals is not None:
        out["individuals"] = individuals
    ignore = cfg.get("ignore_threshold")
    if getattr(args, "ignore_threshold", None):
        ignore = args.ignore_threshold
    if ignore:
        out["ignore_threshold"] = sorted(set(ignore))
    mode = getattr(args, "mode", None) or cfg.get("mode")
    if mode is not None:
        out["mode"] = mode
    ranges = cfg.get("alpha_ranges")
    if getattr(args, "range", None):
        ranges = args.range
    if ranges is not None:
        out["alpha_ranges"] = [_range(r) for r in ranges]
    a1r = cfg.get("alpha1_range")
    if getattr(args, "alpha1_range", None):
        a1r = args.alpha1_range
    if a1r is not None:
        out["alpha1_range"] = _range(a1r)
    out["_out"] = args.out or os.environ.get(OUT_ENV) or cfg.get("out") or "out"
    return out


def _params(cfg) -> GlobalParams:
    p = cfg["params"]
    missing = [k for k in PARAM_KEYS[:-1] if k not in p]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)} "
                          "(give them in the config, with --param KEY=VALUE, or use --preset)")
    extra = set(p) - set(PARAM_KEYS)
    if extra:
        raise ConfigError(f"unknown parameters: {sorted(extra)}")
    return GlobalParams(**{k: (int(v) if k == "n" else float(v)) for k, v in p.items()})


def _individuals(cfg, params) -> List[IndividualConfig]:
    inds = cfg.get("individuals")
    if inds is None:
        raise ConfigError("no individuals given (config 'individuals' or --alphas)")
    out = []
    for ind in inds:
        extra = set(ind) - {"alpha", "x0", "y0"}
        if extra or "alpha" not in ind:
            raise ConfigError(f"individual {ind!r} needs 'alpha' and at most 'x0', 'y0'")
        out.append(IndividualConfig(float(ind["alpha"]), float(ind.get("x0", 0.0)),
                                    float(ind.get("y0", 0.0))))
    if len(out) != params.n:
        raise ConfigError(f"{len(out)} individuals given but n = {params.n}")
    return out


def _sim_config(cfg, params, alphas, dense) -> SimConfig:
    sim = cfg["sim"]
    extra = set(sim) - set(SIM_KEYS)
    if extra:
        raise ConfigError(f"unknown sim keys: {sorted(extra)}")
    hp = int(sim.get("horizon_periods", 40))
    base = default_config(params, alphas, horizon_periods=hp)
    t_end = float(sim.get("t_end", base.t_end))
    dt_max = float(sim.get("dt_max", min(base.dt_max, t_end)))
    sample = sim.get("sample_every")
    if sample is None:
        sample = dt_max if dense else t_end
    return SimConfig(t_end=t_end, dt_max=dt_max,
                     event_tol=float(sim.get("event_tol", base.event_tol)),
                     sample_every=float(sample), horizon_periods=hp)


def _echo(cfg, command):
    echo = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return {"command": command, "config": echo, "version": __version__}


def _out_dir(cfg):
    try:
        return pio.ensure_dir(cfg["_out"])
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg['_out']!r}: {exc.strerror}") from exc


def _emit(obj):
    sys.stdout.write(pio.dumps(obj) + "\n")


# --- commands ---------------------------------------------------------------

def cmd_simulate(cfg) -> int:
    params = _params(cfg)
    inds = _individuals(cfg, params)
    alphas = [i.alpha for i in inds]
    sc = _sim_config(cfg, params, alphas, dense=True)
    ignore = cfg.get("ignore_threshold") or []
    for i in ignore:
        if not (isinstance(i, int) and 1 <= i <= params.n):
            raise ConfigError(f"ignore_threshold entry {i!r} is not an individual 1..{params.n}")
    traj = simulate(params, inds, sc, [i - 1 for i in ignore])
    echo = _echo(cfg, "simulate")
    out = _out_dir(cfg)
    pio.write_trajectory(os.path.join(out, "trajectory.csv"), traj, echo)
    pio.write_events(os.path.join(out, "events.csv"), traj, echo)
    counts = {str(i + 1): len(traj.event_times(i)) for i in range(params.n)}
    env = dict(echo)
    env["resolved_sim"] = sc.as_dict()
    env["event_counts"] = counts
    env["events"] = [{"individual": e.individual + 1, "t": e.t} for e in traj.events]
    env["trajectory"] = {"t": traj.t, "x": traj.x, "y": traj.y}
    pio.write_json(os.path.join(out, "simulate.json"), env)
    _emit({"event_counts": counts, "out": out})
    return EXIT_OK


def cmd_classify(cfg) -> int:
    params = _params(cfg)
    inds = _individuals(cfg, params)
    alphas = [i.alpha for i in inds]
    mode = cfg.get("mode") or ("analytic" if params.n == 2 else "simulated")
    if mode not in ("analytic", "simulated"):
        raise ConfigError(f"classify mode must be 'analytic' or 'simulated', got {mode!r}")
    result = {}
    if mode == "analytic":
        if params.n != 2:
            raise ConfigError(f"analytic classification covers exactly two individuals, "
                              f"got n = {params.n}; use --mode simulated")
        if any(i.x0 != 0.0 or i.y0 != 0.0 for i in inds):
            raise ConfigError("analytic classification assumes a start from rest; "
                              "use --mode simulated for other initial states")
        verdict = classify_two(params, *alphas)
        result.update(pio.jsonable(verdict))
        if verdict.M is not None and verdict.M > M_ZERO_TOL:
            lead, follow = sorted(alphas, reverse=True)
            result["bounds"] = pio.jsonable(action_bounds(params, lead, follow))
    else:
        sc = _sim_config(cfg, params, alphas, dense=False)
        verdict, traj = simulate_and_classify(params, inds, sc)
        result.update(pio.jsonable(verdict))
        result["event_counts"] = {str(i + 1): len(traj.event_times(i)) for i in range(params.n)}
        result["t_end"] = traj.t_end
        if verdict.note:
            result["note"] = verdict.note
    result["mode"] = mode
    env = _echo(cfg, "classify")
    env["result"] = result
    out = _out_dir(cfg)
    pio.write_json(os.path.join(out, "classify.json"), env)
    _emit(result)
    return EXIT_OK


def _boundary_files(out, b_lin, b_M0, echo):
    pio.write_csv(os.path.join(out, "boundary_lin.csv"), ["alpha1", "alpha2"], b_lin, echo)
    pio.write_csv(os.path.join(out, "boundary_M0.csv"), ["alpha1", "alpha2"], b_M0, echo)


def cmd_sweep(cfg, workers: int) -> int:
    params = _params(cfg)
    n = params.n
    ranges = cfg.get("alpha_ranges") or [[0.0, 1.0, 21]] * n
    axes = [AxisRange(*r) for r in ranges]
    mode = cfg.get("mode") or ("both" if n == 2 else "simulated")
    sim = cfg["sim"]
    extra = set(sim) - {"event_tol", "horizon_periods"}
    if extra:
        raise ConfigError(f"sweep cells size their own horizon; only event_tol and "
                          f"horizon_periods may be set, got {sorted(extra)}")
    sim_cfg = None
    if sim:
        hp = int(sim.get("horizon_periods", 40))
        et = float(sim.get("event_tol", 1e-10))
        sim_cfg = SimConfig(t_end=1.0, dt_max=max(10 * et, 1e-3), event_tol=et,
                            horizon_periods=hp)
    spec = SweepSpec(params, tuple(axes), mode, sim_cfg)
    res = run_sweep(spec, workers=workers)
    echo = _echo(cfg, "sweep")
    out = _out_dir(cfg)

    header = [f"alpha{k + 1}" for k in range(n)] + ["class", "actors"]
    header += ["M"] if n == 2 else []
    header += [f"margin{k + 1}" for k in range(n)]
    header += ["agreement", "near_boundary", "analytic_class"] if n == 2 else []
    tags = res.tags()
    rows = []
    for idx in np.ndindex(spec.shape):
        alphas = [res.axes[k][idx[k]] for k in range(n)]
        c = res.grid[idx]
        actors = " ".join(str(a + 1) for a in c.actors) if hasattr(c, "actors") else ""
        row = [*alphas, tags[idx], actors]
        if n == 2:
            row.append(res.M[idx])
        row += [params.sigma_a * a - params.sigma_s * params.mu_s for a in alphas]
        if n == 2:
            agree = None if res.agreement is None else bool(res.agreement[idx])
            near = None if res.near_boundary is None else bool(res.near_boundary[idx])
            row += [agree, near, res.analytic[idx].tag if res.analytic is not None else ""]
        rows.append(row)
    pio.write_csv(os.path.join(out, "grid.csv"), header, rows, echo)
    if n == 2:
        _boundary_files(out, res.boundary_lin, res.boundary_M0, echo)
    env = dict(echo)
    env["summary"] = res.summary()
    env["errors"] = [{"cell": [i + 1 for i in k], "message": v}
                     for k, v in sorted(res.errors.items())]
    pio.write_json(os.path.join(out, "sweep.json"), env)
    _emit(env["summary"])
    return EXIT_OK


def cmd_boundary(cfg) -> int:
    params = _params(cfg)
    if params.n != 2:
        raise ConfigError("the M = 0 boundary exists only for n = 2")
    ab = params.alpha_boundary
    if not ab < 1.0:
        raise DomainError("no attitude in (-1, 1) has a positive margin")
    a1r = cfg.get("alpha1_range")
    if a1r is None:
        rng = AxisRange(max(ab, -1.0), 1.0, 100)
    else:
        lo, hi, steps = rng = tuple(a1r)
        if steps < 1 or not -1.0 < lo <= hi < 1.0:
            raise ConfigError("alpha1_range must be [lo, hi, steps] inside (-1, 1)")
    pts = trace_boundary_M0(params, rng)
    b_lin = linear_boundary(params, max(-1.0, min(0.0, ab)))
    residual = max((abs(TwoBodyConstants.from_params(params, a1, a2).M) for a1, a2 in pts),
                   default=0.0)
    echo = _echo(cfg, "boundary")
    out = _out_dir(cfg)
    _boundary_files(out, b_lin, pts, echo)
    env = dict(echo)
    env["n_points"] = len(pts)
    env["max_abs_M"] = residual
    env["triple_point"] = [ab, ab]
    env["boundary_M0"] = pts
    env["boundary_lin"] = b_lin
    pio.write_json(os.path.join(out, "boundary.json"), env)
    _emit({"n_points": len(pts), "max_abs_M": residual, "triple_point": [ab, ab]})
    return EXIT_OK


def cmd_minalpha(cfg) -> int:
    params = _params(cfg)
    alpha2 = b0_alpha2(params)
    closed = min_alpha1_for_action_B0(params)
    bisect = min_alpha1_bisect(params, alpha2)
    result = {"alpha2": alpha2, "alpha1_closed_form": closed, "alpha1_bisection": bisect,
              "difference": closed - bisect}
    env = _echo(cfg, "minalpha")
    env["result"] = result
    out = _out_dir(cfg)
    pio.write_json(os.path.join(out, "minalpha.json"), env)
    _emit(result)
    return EXIT_OK


# --- argument parsing -------------------------------------------------------

def _default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", help=f"output directory (env {OUT_ENV}; "
                        "default ./out)")
    common.add_argument("--workers", type=int, default=None, metavar="N",
                        help="parallel workers for sweeps (default: available CPUs)")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; the dynamics are deterministic")
    common.add_argument("--preset", choices=sorted(PRESETS),
                        help="start from a named parameter set")
    common.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="override one global parameter (repeatable)")
    common.add_argument("--sim", action="append", metavar="KEY=VALUE",
                        help=f"override one simulation setting: {', '.join(SIM_KEYS)}")

    parser = _Parser(prog="planned-behavior", description=__doc__.split("\n\n")[0],
                     epilog=__doc__.split("\n\n", 1)[1],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", parents=[common], help="integrate the hybrid system")
    p.add_argument("--alphas", type=float, nargs="+", metavar="A")
    p.add_argument("--ignore-threshold", type=int, nargs="+", metavar="I",
                   help="individuals (1-based) that never act")

    p = sub.add_parser("classify", parents=[common], help="classify the regime")
    p.add_argument("--alphas", type=float, nargs="+", metavar="A")
    p.add_argument("--mode", choices=("analytic", "simulated"))

    p = sub.add_parser("sweep", parents=[common], help="classify a grid of attitudes")
    p.add_argument("--range", type=float, nargs=3, action="append", metavar=("LO", "HI", "STEPS"),
                   help="one per individual, in order")
    p.add_argument("--mode", choices=("analytic", "simulated", "both"))

    p = sub.add_parser("boundary", parents=[common], help="trace the M = 0 curve")
    p.add_argument("--alpha1-range", type=float, nargs=3, metavar=("LO", "HI", "STEPS"))

    sub.add_parser("minalpha", parents=[common],
                   help="smallest leader attitude that makes the follower act (B = 0 case)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        cfg = resolve(args)
        if command == "simulate":
            return cmd_simulate(cfg)
        if command == "classify":
            return cmd_classify(cfg)
        if command == "sweep":
            return cmd_sweep(cfg, args.workers or _default_workers())
        if command == "boundary":
            return cmd_boundary(cfg)
        return cmd_minalpha(cfg)
    except SimulationError as exc:
        _report(EXIT_NUMERIC, type(exc).__name__, exc, command, t_last=exc.t_last)
        return EXIT_NUMERIC
    except (FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        _report(EXIT_NUMERIC, type(exc).__name__, exc, command)
        return EXIT_NUMERIC
    except (ConfigError, ParameterError, DomainError, TypeError, ValueError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        _report(EXIT_CONFIG, type(exc).__name__, exc, command)
        return EXIT_CONFIG
    except OSError as exc:
        _report(EXIT_CONFIG, type(exc).__name__, exc, command)
        return EXIT_CONFIG
    except Exception as exc:  # anything else is a failure of the numerics, not the input
        _report(EXIT_NUMERIC, type(exc).__name__, exc, command)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
