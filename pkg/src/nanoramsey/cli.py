"""Command-line frontend.

Subcommands: fringe, visibility, certify, budget, dicke, sweep,
dump-snapshots. Outputs are deterministic (12-significant-digit scientific
CSV, or the JSON mirror with config hash and version); the CLI never
computes anything itself, it formats library results. Exit codes: 0 success,
1 validation error, 2 numerical or certification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .budget import budget_report
from .decoherence import (
    QuadratureError,
    default_model_family,
    surface_to_csv,
    surface_to_json,
    visibility_surface,
)
from .dicke import collective_final_state, sector_table
from .dynamics import (
    PulseSequence,
    branch_overlap,
    evolve_sequence,
    gravitational_phase,
    initial_state,
    max_separation,
    ramsey_probability,
)
from .grid import ClosureError, GridBoundaryError, ScaleError, desk_scale_params, oracle_compare, snapshot_frames
from .io import config_sha256, csv_text, fmt, json_table, run_ordered
from .params import ConfigError, build_params, parse_config_text

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

SWEEPABLE = (
    "mass", "radius", "density", "b_gradient", "theta", "t3", "trap_omega",
    "g_nv", "t_internal", "t_environment", "t_cm", "mw_frequency",
    "pulse_duration", "n_nucleons", "g_earth", "t1", "t2",
)

OUTPUT_COLUMNS = ("phi_g_rad", "p0", "delta_x_max_m", "visibility")


def _sequence_from_config(cfg: dict) -> PulseSequence:
    t3 = float(cfg["t3"])
    t1 = float(cfg.get("t1", t3 / 4.0))
    t2 = float(cfg.get("t2", 3.0 * t3 / 4.0))
    jitter = (float(cfg.get("jitter_t1", 0.0)),
              float(cfg.get("jitter_t2", 0.0)),
              float(cfg.get("jitter_t3", 0.0)))
    try:
        return PulseSequence(t1=t1, t2=t2, t3=t3, jitter=jitter)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    cfg = parse_config_text(text)
    params = build_params(cfg)
    seq = _sequence_from_config(cfg)
    return params, seq, cfg, text


def _metadata(command: str, cfg_text: str, seed) -> dict:
    return {
        "command": command,
        "config_sha256": config_sha256(cfg_text),
        "version": __version__,
        "seed": seed,
    }


def _write(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _point_outputs(params, seq) -> dict:
    if seq.is_balanced():
        phi = gravitational_phase(params, seq)
        vis = 1.0
    else:
        ov = branch_overlap(params, evolve_sequence(params, seq, initial_state(params)))
        phi = -math.atan2(ov.imag, ov.real)
        vis = abs(ov)
    return {
        "phi_g_rad": phi,
        "p0": ramsey_probability(phi),
        "delta_x_max_m": max_separation(params, seq),
        "visibility": vis,
    }


def _sweep_values(args) -> list[float]:
    if args.values:
        vals = [float(v) for v in args.values.split(",") if v.strip()]
        if not vals:
            raise ConfigError("empty --values list")
        return vals
    if args.start is None or args.stop is None:
        raise ConfigError("pass --values or all of --start/--stop/--count")
    if args.count < 2:
        raise ConfigError("--count must be >= 2 for a range sweep")
    if args.log:
        if args.start <= 0 or args.stop <= 0:
            raise ConfigError("log spacing needs positive endpoints")
        return list(np.geomspace(args.start, args.stop, args.count))
    return list(np.linspace(args.start, args.stop, args.count))


def _apply_sweep_value(cfg: dict, name: str, value: float) -> dict:
    out = dict(cfg)
    if name == "t3":
        # preserve the sequence shape: t1/t3 and t2/t3 ratios stay fixed
        old_t3 = float(cfg["t3"])
        for key in ("t1", "t2"):
            if key in out:
                out[key] = float(out[key]) * value / old_t3
    out[name] = value
    return out


def _run_point(cfg: dict, name: str, value: float) -> dict:
    cfg_v = _apply_sweep_value(cfg, name, value)
    params = build_params(cfg_v)
    seq = _sequence_from_config(cfg_v)
    return _point_outputs(params, seq)


# -- subcommand implementations ------------------------------------------------


def _cmd_fringe(args) -> int:
    params, seq, cfg, text = _load_config(args.config)
    del params, seq
    if args.param not in SWEEPABLE:
        raise ConfigError(f"--param must be one of {', '.join(SWEEPABLE)}")
    if args.param not in ("theta", "t3"):
        print(f"warning: fringe sweeps usually vary theta or t3, not {args.param}",
              file=sys.stderr)
    values = _sweep_values(args)
    points = run_ordered(lambda v: _run_point(cfg, args.param, v), values, args.workers)
    header = ["param_value", "phi_g_rad", "p0", "delta_x_max_m"]
    rows = [(v, p["phi_g_rad"], p["p0"], p["delta_x_max_m"])
            for v, p in zip(values, points)]
    meta = _metadata("fringe", text, args.seed)
    meta["swept_parameter"] = args.param
    _write(args, json_table(header, rows, meta) if args.format == "json"
           else csv_text(header, rows))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    params, seq, cfg, text = _load_config(args.config)
    del params, seq
    if args.param not in SWEEPABLE:
        raise ConfigError(f"--param must be one of {', '.join(SWEEPABLE)}")
    outputs = [c.strip() for c in args.outputs.split(",") if c.strip()]
    bad = [c for c in outputs if c not in OUTPUT_COLUMNS]
    if bad:
        raise ConfigError(f"unknown output column(s): {', '.join(bad)}")
    values = _sweep_values(args)
    points = run_ordered(lambda v: _run_point(cfg, args.param, v), values, args.workers)
    header = ["param_value", *outputs]
    rows = [(v, *[p[c] for c in outputs]) for v, p in zip(values, points)]
    meta = _metadata("sweep", text, args.seed)
    meta["swept_parameter"] = args.param
    _write(args, json_table(header, rows, meta) if args.format == "json"
           else csv_text(header, rows))
    return EXIT_OK


def _cmd_visibility(args) -> int:
    params, seq, cfg, text = _load_config(args.config)
    if args.dx_log:
        dx_axis = np.geomspace(args.dx_min, args.dx_max, args.dx_count)
    else:
        dx_axis = np.linspace(args.dx_min, args.dx_max, args.dx_count)
    tint_axis = np.linspace(args.tint_min, args.tint_max, args.tint_count)
    family = default_model_family(
        params,
        response_im=float(cfg.get("response_im", 1.0e-3)),
        response_mod_sq=float(cfg.get("response_mod_sq",
                                      ((5.7 - 1.0) / (5.7 + 2.0)) ** 2)),
    )
    surface = visibility_surface(family, dx_axis, tint_axis,
                                 flight_time=seq.effective_times()[2])
    if args.format == "json":
        _write(args, surface_to_json(surface, _metadata("visibility", text, args.seed)))
    else:
        _write(args, surface_to_csv(surface, fmt))
    return EXIT_OK


def _cmd_certify(args) -> int:
    runs = []
    if args.config:
        params, seq, _, _ = _load_config(args.config)
        runs.append(("config", params, seq))
    else:
        for label, a_spin, a_grav, tau in (
            ("desk-a", 0.6, 0.15, 6.0),
            ("desk-b", 0.4, 0.30, 6.0),
            ("desk-c", 0.75, 0.10, 7.0),
        ):
            params, seq = desk_scale_params(a_spin=a_spin, a_gravity=a_grav,
                                            tau_scaled=tau)
            runs.append((label, params, seq))
    all_ok = True
    lines = []
    for label, params, seq in runs:
        report = oracle_compare(params, seq)
        closure_ok = report.overlap_grid >= 0.9999
        ok = report.passed and closure_ok
        all_ok &= ok
        lines.append(f"[{label}] {'PASS' if ok else 'FAIL'}")
        lines.extend("  " + ln for ln in report.lines())
        lines.append(f"  closure  |overlap| {report.overlap_grid:.6f} >= 0.9999"
                     f"  [{'pass' if closure_ok else 'FAIL'}]")
    lines.append(f"certification: {'PASS' if all_ok else 'FAIL'}")
    _write(args, "\n".join(lines) + "\n")
    return EXIT_OK if all_ok else EXIT_NUMERICAL


def _cmd_budget(args) -> int:
    params, seq, _, text = _load_config(args.config)
    report = budget_report(params, seq)
    if args.format == "json":
        _write(args, report.to_json(_metadata("budget", text, args.seed)) + "\n")
    else:
        _write(args, report.to_text())
    return EXIT_OK if report.all_pass() else EXIT_NUMERICAL


def _cmd_dicke(args) -> int:
    params, seq, _, text = _load_config(args.config)
    final = collective_final_state(params, seq, args.l)
    header, rows = sector_table(final)
    meta = _metadata("dicke", text, args.seed)
    meta["l"] = args.l
    _write(args, json_table(header, rows, meta) if args.format == "json"
           else csv_text(header, rows))
    return EXIT_OK


def _cmd_dump_snapshots(args) -> int:
    params, seq, _, text = _load_config(args.config)
    fractions = [float(v) for v in args.times.split(",") if v.strip()]
    if not fractions:
        raise ConfigError("empty --times list")
    frames = snapshot_frames(params, seq, fractions)
    header = ["x", "prob_plus", "prob_minus"]
    if args.format == "json":
        payload = {
            "frames": [
                {
                    "time_s": fmt(t),
                    "x": [fmt(v) for v in x],
                    "prob_plus": [fmt(v) for v in pp],
                    "prob_minus": [fmt(v) for v in pm],
                }
                for t, x, pp, pm in frames
            ],
            "metadata": _metadata("dump-snapshots", text, args.seed),
        }
        _write(args, json.dumps(payload, sort_keys=True, indent=1))
        return EXIT_OK
    if not args.out:
        raise ConfigError("dump-snapshots with CSV output needs --out as a filename prefix")
    for idx, (t, x, pp, pm) in enumerate(frames):
        rows = list(zip(x, pp, pm))
        path = f"{args.out}_{idx:03d}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# time_s = {fmt(t)}\n")
            fh.write(csv_text(header, rows))
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------


def _add_common(sub, config_required=True):
    sub.add_argument("--config", required=config_required, help="path to a flat key=value config file (SI units)")
    sub.add_argument("--out", default=None, help="output path (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, default=None, help="seed recorded in metadata; sampling APIs require one")
    sub.add_argument("--workers", type=int, default=1, help="parallel sweep workers")


def _add_sweep_flags(sub):
    sub.add_argument("--param", required=True, help=f"one of: {', '.join(SWEEPABLE)}")
    sub.add_argument("--values", default=None, help="comma-separated explicit values")
    sub.add_argument("--start", type=float, default=None)
    sub.add_argument("--stop", type=float, default=None)
    sub.add_argument("--count", type=int, default=0)
    sub.add_argument("--log", action="store_true", help="logarithmic range spacing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nanoramsey",
        description="Free-flight spin-force Ramsey interferometry toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("fringe", help="phase/probability fringe over theta or t3")
    _add_common(p)
    _add_sweep_flags(p)
    p.set_defaults(func=_cmd_fringe)

    p = subs.add_parser("sweep", help="general parameter sweep with selectable outputs")
    _add_common(p)
    _add_sweep_flags(p)
    p.add_argument("--outputs", default=",".join(OUTPUT_COLUMNS),
                   help=f"comma list from: {', '.join(OUTPUT_COLUMNS)}")
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("visibility", help="decoherence visibility surface")
    _add_common(p)
    p.add_argument("--dx-min", type=float, default=1e-9)
    p.add_argument("--dx-max", type=float, default=1e-6)
    p.add_argument("--dx-count", type=int, default=50)
    p.add_argument("--dx-log", action="store_true", default=True)
    p.add_argument("--dx-linear", dest="dx_log", action="store_false")
    p.add_argument("--tint-min", type=float, default=300.0)
    p.add_argument("--tint-max", type=float, default=1500.0)
    p.add_argument("--tint-count", type=int, default=50)
    p.set_defaults(func=_cmd_visibility)

    p = subs.add_parser("certify", help="grid oracle vs closed forms, pass/fail per tolerance")
    _add_common(p, config_required=False)
    p.set_defaults(func=_cmd_certify)

    p = subs.add_parser("budget", help="feasibility budget report")
    _add_common(p)
    p.set_defaults(func=_cmd_budget)

    p = subs.add_parser("dicke", help="collective sector table for l spins")
    _add_common(p)
    p.add_argument("--l", type=int, required=True)
    p.set_defaults(func=_cmd_dicke)

    p = subs.add_parser("dump-snapshots", help="grid |psi|^2 frames at fractions of t3")
    _add_common(p)
    p.add_argument("--times", required=True, help="comma-separated fractions of t3 in [0, 1]")
    p.set_defaults(func=_cmd_dump_snapshots)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    # ScaleError subclasses ValueError, so the numerical group goes first
    except (ScaleError, ClosureError, GridBoundaryError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
