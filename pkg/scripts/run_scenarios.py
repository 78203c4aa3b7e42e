#!/usr/bin/env python3
"""Run every packaged scenario and print a one-line metric summary each.

Writes the full per-step tables, plots scripts, and summary.json for
each scenario under --out (default: out/<scenario-name>/).
"""

import argparse
import json
import sys
from pathlib import Path

from catmaint.cli import main as catmaint_main

ROOT = Path(__file__).resolve().parents[1]


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(ROOT / "out"),
                        help="base output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override every scenario's rng seed")
    args = parser.parse_args(argv)

    scenarios = sorted((ROOT / "scenarios").glob("*.cfg"))
    if not scenarios:
        print("no scenario files found", file=sys.stderr)
        return 1
    failures = 0
    for path in scenarios:
        out_dir = Path(args.out) / path.stem
        cli_args = ["run", str(path), "--out", str(out_dir)]
        if args.seed is not None:
            cli_args += ["--seed", str(args.seed)]
        code = catmaint_main(cli_args)
        if code != 0:
            print(f"{path.stem}: FAILED with exit code {code}")
            failures += 1
            continue
        metrics = json.loads((out_dir / "summary.json").read_text())["metrics"]
        print(
            f"{path.stem}: switches={metrics['switch_count']} "
            f"torque={metrics['total_torque']:.1f} "
            f"max|omega|={metrics['max_abs_omega']:.3f} "
            f"max_h1={metrics['max_h1']:.2e}"
        )
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(run())
