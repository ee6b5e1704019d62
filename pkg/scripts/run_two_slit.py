#!/usr/bin/env python3
"""Two-slit interference with pilot-wave trajectories.

Evolves two convergent beams, transports a 2000-particle ensemble along
the guidance flow, and reports how endpoints distribute over the fringe
pattern, including the occupancy of the three deepest dark fringes.
"""

import argparse
import json
from pathlib import Path

from qbohm.config import validate_config
from qbohm.runner import run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/two_slit")
    ap.add_argument("--seed", type=int, default=777)
    ap.add_argument("--paths", type=int, default=2000)
    args = ap.parse_args()

    raw = {
        "schema": 1,
        "kind": "trajectories",
        "seed": args.seed,
        "grid": {"dim": 2, "min": [-12.0, -12.0], "max": [12.0, 12.0], "points": [192, 192]},
        "potential": {"family": "two-gaussian-slits"},
        "solver": {
            "t1": 1.5,
            "dt": 0.0025,
            "snapshot_dt": 0.0125,
            "n_paths": args.paths,
            "bins": 40,
            "check_minima": True,
            "minima_bins": 480,
            "initial": {
                "family": "two-slit",
                "separation": 6.0,
                "momentum_x": 2.0,
                "sigma_x": 0.8,
                "sigma_y": 1.2,
                "center_y": -5.0,
                "momentum_y": 4.0,
            },
        },
    }
    summary = run_scenario(validate_config(raw), Path(args.out))
    for c in summary.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.measured}")
    print(f"outputs: {json.dumps(sorted(summary.outputs), indent=2)}")
    raise SystemExit(summary.exit_code)


if __name__ == "__main__":
    main()
