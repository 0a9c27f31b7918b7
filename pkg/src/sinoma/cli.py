"""Command-line front end: simulate, detect, sweep, bench.

Configs are flat ``key = value`` text files whose keys are exactly the
SystemConfig field names; unknown keys are rejected with the offending
line number. All randomness flows from the config's seed. Exit codes:
0 success, 2 input error, 3 I/O error, 4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import asdict, fields, replace

import numpy as np

from . import __version__
from .errors import SinomaError
from .harness import SWEEP_AXES, run_receiver, run_trial, sweep, write_results_csv
from .scenario import (SystemConfig, generate_opportunity, load_dataset,
                       save_dataset)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

ARTIFACT_VERSION = f"sinoma/{__version__}"


class ConfigError(Exception):
    """Config-file problem, already formatted with file:line context."""


# --------------------------------------------------------------------------
# config parsing

_BOOL_WORDS = {"true": True, "on": True, "yes": True, "1": True,
               "false": False, "off": False, "no": False, "0": False}


def _parse_value(raw: str, target_type, key: str, where: str):
    raw = raw.strip()
    if raw.lower() in ("none", "null") and key in ("l", "num_active"):
        return None
    try:
        if target_type is bool:
            if raw.lower() not in _BOOL_WORDS:
                raise ValueError(f"expected a boolean, got {raw!r}")
            return _BOOL_WORDS[raw.lower()]
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from exc


def parse_config(path: str) -> SystemConfig:
    """Read a flat key=value config file into a SystemConfig."""
    field_types = {}
    for f in fields(SystemConfig):
        if f.name in ("l", "num_active"):
            field_types[f.name] = int
        else:
            field_types[f.name] = f.type if isinstance(f.type, type) else type(f.default)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    overrides = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in field_types:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        overrides[key] = _parse_value(raw, field_types[key], key, f"{path}:{lineno}")
    try:
        return SystemConfig(**overrides)
    except SinomaError as exc:
        raise ConfigError(f"{path}: invalid configuration: {exc}") from exc


def _apply_flags(cfg: SystemConfig, args) -> SystemConfig:
    updates = {}
    if getattr(args, "refine", None) is not None:
        updates["refine"] = args.refine == "on"
    if getattr(args, "criterion", None) is not None:
        updates["criterion"] = args.criterion
    if getattr(args, "noiseless", False):
        updates["noiseless"] = True
    return replace(cfg, **updates) if updates else cfg


# --------------------------------------------------------------------------
# run manifests


def write_manifest(out_path: str, cfg: SystemConfig, command: str,
                   started: float, extra_lines=()) -> str:
    """Plain-text run manifest next to an output file."""
    manifest_path = out_path + ".manifest.txt"
    lines = [
        f"artifact_version = {ARTIFACT_VERSION}",
        f"command = {command}",
        f"started_unix = {started:.3f}",
        f"finished_unix = {time.time():.3f}",
        "[config]",
    ]
    for key, value in asdict(cfg).items():
        lines.append(f"{key} = {value}")
    lines.extend(extra_lines)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest_path


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = _apply_flags(parse_config(args.config), args)
    truth, signal = generate_opportunity(cfg)
    try:
        save_dataset(args.out, cfg, truth, signal)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    write_manifest(args.out, cfg, _command_line(args), started)
    print(f"wrote {args.out}: Y is {signal.y.shape[0]}x{signal.y.shape[1]}, "
          f"{truth.active_set.size} active users")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg, _truth, signal = load_dataset(args.dataset)
    cfg = _apply_flags(cfg, args)
    output = run_receiver(signal, cfg)
    lines = [f"{output.detected.size} users detected: "
             f"{' '.join(str(i) for i in output.detected) or '(none)'}"]
    for user in output.users:
        symbols = (" ".join(str(int(q)) for q in user.symbols_hat)
                   if user.reliable else "(withheld)")
        lines.append(
            f"user {user.index}: |h|={np.exp(user.mu):.6e} zeta={user.zeta_hat:.6f} "
            f"reliable={'yes' if user.reliable else 'no'} symbols={symbols}"
        )
    lines.append("timings_s: " + " ".join(
        f"{stage}={output.timings[stage]:.6f}"
        for stage in ("snapshot_svd", "order", "esprit", "varpro", "estimation")
        if stage in output.timings))
    report = "\n".join(lines)
    if args.out:
        started = time.time()
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(report + "\n")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
        write_manifest(args.out, cfg, _command_line(args), started)
    print(report)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.time()
    cfg = _apply_flags(parse_config(args.config), args)
    if args.axis not in SWEEP_AXES:
        print(f"error: axis must be one of {SWEEP_AXES}", file=sys.stderr)
        return EXIT_INPUT
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        print(f"error: bad --values list: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not values:
        print("error: --values is empty", file=sys.stderr)
        return EXIT_INPUT
    records = sweep(cfg, args.axis, values, args.trials, workers=args.workers)
    # Wall time is the one nondeterministic column; zero it in the CSV
    # (reruns must be byte-identical) and log it in the manifest.
    runtime_lines = ["[measured_mean_runtime_s]"]
    stable = []
    for rec in records:
        runtime_lines.append(f"{rec.axis} {rec.value!r} = {rec.mean_runtime_s:.6f}")
        stable.append(replace(rec, mean_runtime_s=0.0))
    try:
        write_results_csv(args.out, stable)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    write_manifest(args.out, cfg, _command_line(args), started, runtime_lines)
    print(f"wrote {args.out}: {len(records)} sweep points x {args.trials} trials")
    return EXIT_OK


def cmd_bench(args) -> int:
    started = time.time()
    cfg = _apply_flags(parse_config(args.config), args)
    stage_names = ["snapshot_svd", "order", "esprit", "varpro", "estimation"]
    if not cfg.refine:
        stage_names.remove("varpro")
    per_stage = {name: [] for name in stage_names}
    totals = []
    for t in range(args.trials):
        trial = run_trial(cfg, "bench", t)
        for name in stage_names:
            per_stage[name].append(trial.output.timings.get(name, 0.0))
        totals.append(trial.output.receiver_time)
    lines = [f"bench: {args.trials} trials at M={cfg.M} l={cfg.snapshot_len} "
             f"J={cfg.J} refine={'on' if cfg.refine else 'off'}"]
    for name in stage_names + ["total"]:
        data = np.array(totals if name == "total" else per_stage[name])
        lines.append(
            f"{name:>12s}: mean={data.mean() * 1e3:8.3f} ms  "
            f"median={np.median(data) * 1e3:8.3f} ms  "
            f"p95={np.quantile(data, 0.95) * 1e3:8.3f} ms"
        )
    report = "\n".join(lines)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(report + "\n")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
        write_manifest(args.out, cfg, _command_line(args), started)
    print(report)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument plumbing


def _command_line(args) -> str:
    return "sinoma " + " ".join(args._raw_argv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinoma",
        description="Sinusoidal-code grant-free NOMA receiver simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--refine", choices=("on", "off"), default=None,
                       help="override the ML refinement switch")
        p.add_argument("--criterion", choices=("bic", "aic"), default=None,
                       help="override the order-selection criterion")
        p.add_argument("--noiseless", action="store_true",
                       help="force sigma^2 = 0 (test hook)")

    p_sim = sub.add_parser("simulate", help="generate one opportunity dataset")
    add_common(p_sim)
    p_sim.add_argument("--out", required=True, help="dataset output path")
    p_sim.set_defaults(func=cmd_simulate)

    p_det = sub.add_parser("detect", help="run the receiver on a saved dataset")
    p_det.add_argument("dataset", help="noma-dataset/1 file")
    add_common(p_det, needs_config=False)
    p_det.add_argument("--out", default=None, help="also write the report here")
    p_det.set_defaults(func=cmd_detect)

    p_swp = sub.add_parser("sweep", help="Monte-Carlo sweep over one axis")
    add_common(p_swp)
    p_swp.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_swp.add_argument("--values", required=True, help="comma-separated axis values")
    p_swp.add_argument("--trials", type=int, default=1000)
    p_swp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p_swp.add_argument("--out", required=True, help="results CSV path")
    p_swp.set_defaults(func=cmd_sweep)

    p_ben = sub.add_parser("bench", help="time the receiver stages")
    add_common(p_ben)
    p_ben.add_argument("--trials", type=int, default=100)
    p_ben.add_argument("--out", default=None, help="also write the summary here")
    p_ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._raw_argv = argv
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SinomaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
