"""Command-line entry point.

    treesync analyze CONFIG      bounds and sufficient coupling
    treesync simulate CONFIG     integrate the network, write trajectory + summary
    treesync eventsim CONFIG     hybrid run with the hub controller
    treesync reproduce [OUT_DIR] built-in reproduction suite

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 a
reproduction criterion failed.  Output goes to ``--out``, else the config's
``output.dir``, else ``$TREESYNC_OUTPUT_DIR``, else the working directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness
from .config import ExperimentConfig, load_config
from .dynamics import write_trajectory_csv
from .errors import NonFiniteState, NumericalError, ValidationError
from .events import write_event_log_csv

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3
ENV_OUTPUT_DIR = "TREESYNC_OUTPUT_DIR"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _out_dir(args, cfg: ExperimentConfig | None = None) -> Path:
    chosen = args.out or (cfg.output_dir if cfg else None) or os.environ.get(ENV_OUTPUT_DIR) or "."
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    overrides = {"dt": args.dt, "t_end": args.t_end, "epsilon": args.epsilon}
    return cfg.with_overrides(**overrides)


def cmd_analyze(args) -> int:
    cfg = _load(args)
    report = harness.run_analysis(cfg)
    text = _dump(report.to_dict())
    (_out_dir(args, cfg) / f"{cfg.label}_bounds.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    traj, summary = harness.run_simulation(cfg)
    summary.pop("runtime_s")
    write_trajectory_csv(traj, out / f"{cfg.label}_trajectory.csv")
    (out / f"{cfg.label}_config.json").write_text(cfg.to_json())
    (out / f"{cfg.label}_summary.json").write_text(_dump(summary))
    sys.stdout.write(_dump(summary))
    return EXIT_OK


def cmd_eventsim(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    traj, events, summary = harness.run_eventsim(cfg)
    summary.pop("runtime_s")
    write_trajectory_csv(traj, out / f"{cfg.label}_trajectory.csv")
    write_event_log_csv(events, out / f"{cfg.label}_events.csv")
    (out / f"{cfg.label}_config.json").write_text(cfg.to_json())
    (out / f"{cfg.label}_summary.json").write_text(_dump(summary))
    sys.stdout.write(_dump(summary))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = Path(args.out_dir or args.out or os.environ.get(ENV_OUTPUT_DIR) or "reproduction")
    results = harness.reproduce(
        out,
        dt=args.dt or 1e-3,
        t_end=args.t_end,
        epsilon=args.epsilon or 0.0,
        parallel=args.parallel,
    )
    for r in results:
        print(r.line())
    failed = [r.number for r in results if not r.passed]
    if failed:
        print(f"criteria failed: {', '.join(map(str, failed))}", file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dt", type=float, help="integrator step (s)")
    common.add_argument("--t-end", type=float, dest="t_end", help="simulation horizon (s)")
    common.add_argument("--epsilon", type=float, help="cohesiveness margin for the kappa bound (rad)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--parallel", action="store_true", help="run independent experiments in parallel")

    parser = argparse.ArgumentParser(prog="treesync", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, helptext in (
        ("analyze", cmd_analyze, "eigenvalue bounds and sufficient coupling"),
        ("simulate", cmd_simulate, "integrate the network"),
        ("eventsim", cmd_eventsim, "simulate the event-triggered star controller"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("config", help="JSON experiment configuration")
        p.set_defaults(func=func)
    p = sub.add_parser("reproduce", parents=[common], help="run the built-in reproduction suite")
    p.add_argument("out_dir", nargs="?", help="directory for the report bundle")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteState as exc:
        print(f"error: numerical failure: {exc} (t={exc.time:.6g})", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
