"""Batch front door: `qbohm run|validate|scan`.

Exit codes: 0 all configured checks pass; 1 a check failed or a numerical
stage aborted (partial outputs plus summary.json are still written);
2 the configuration is invalid (nothing is written).

QBOHM_THREADS optionally caps internal parallelism; the built-in pipelines
are single-threaded, so any positive value is honored trivially.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import validate_config
from .exceptions import ConfigError
from .runner import run_scenario


def _load_config(path: str, seed_override: int | None):
    text = Path(path).read_text()
    raw = json.loads(text)
    if seed_override is not None:
        raw["seed"] = seed_override
    return validate_config(raw)


def _print_summary(summary, out_dir: Path):
    for check in summary.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.measured} (requirement: {check.requirement})")
    if summary.failure:
        print(f"[FAIL] run aborted: {summary.failure}")
    print(f"outputs written to {out_dir} ({len(summary.outputs)} files + summary.json)")
    print(f"wall time: {summary.wall_time:.2f} s")


def _cmd_run(args) -> int:
    try:
        config = _load_config(args.config, args.seed)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for w in config.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out_dir = Path(args.out) if args.out else Path(config.output_dir or "out")
    summary = run_scenario(config, out_dir)
    _print_summary(summary, out_dir)
    return summary.exit_code


def _cmd_validate(args) -> int:
    try:
        config = _load_config(args.config, None)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for w in config.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(json.dumps(config.effective, indent=2, sort_keys=True))
    return 0


def _parse_bounds(text: str):
    try:
        ranges = []
        for part in text.split(","):
            lo, hi = part.split(":")
            ranges.append([int(lo), int(hi)])
        if len(ranges) != 3:
            raise ValueError
        return ranges
    except ValueError:
        raise argparse.ArgumentTypeError(
            "bounds must look like m0:m1,n0:n1,p0:p1 with integers"
        ) from None


def _cmd_scan(args) -> int:
    raw = {
        "schema": 1,
        "kind": "exponent-scan",
        "seed": args.seed,
        "solver": {"bounds": args.bounds, "probes": args.probes},
    }
    if args.points:
        raw["grid"] = {"dim": 1, "min": -10.0, "max": 10.0, "points": args.points}
    try:
        config = validate_config(raw)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    for w in config.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out_dir = Path(args.out)
    summary = run_scenario(config, out_dir)
    _print_summary(summary, out_dir)
    return summary.exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qbohm",
        description="Variational quantum-potential scenarios: scans, eigensolves, dynamics, trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config", help="path to a scenario JSON file")
    p_run.add_argument("--out", help="output directory (overrides config output_dir)")
    p_run.add_argument("--seed", type=int, help="seed override")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config and echo effective defaults")
    p_val.add_argument("config", help="path to a scenario JSON file")
    p_val.set_defaults(fn=_cmd_validate)

    p_scan = sub.add_parser("scan", help="shorthand for an exponent-scan scenario")
    p_scan.add_argument("--bounds", type=_parse_bounds, default=[[-2, 2], [-2, 2], [-2, 2]],
                        help="m0:m1,n0:n1,p0:p1; write --bounds=-2:2,-2:2,-2:2 for "
                             "values starting with a dash (default -2:2,-2:2,-2:2)")
    p_scan.add_argument("--probes", type=int, default=10)
    p_scan.add_argument("--seed", type=int, default=0)
    p_scan.add_argument("--points", type=int, default=None, help="1D grid points (default 512)")
    p_scan.add_argument("--out", default="out", help="output directory")
    p_scan.set_defaults(fn=_cmd_scan)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
