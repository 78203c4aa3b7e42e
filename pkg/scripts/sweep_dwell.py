#!/usr/bin/env python3
"""Sweep the supervisor dwell time on the three-deputy scenario.

Longer dwell means fewer, longer stares; this sweep shows the trade
between switch count and total actuation effort.  Writes sweep.csv
under --out and prints it.
"""

import argparse
import sys
import tempfile
from pathlib import Path

from catmaint.cli import main as catmaint_main

ROOT = Path(__file__).resolve().parents[1]

SWEEP_TEMPLATE = """\
base = {base}
seed_base = 42
grid.supervisor.delta_s = {values}
"""


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(ROOT / "out" / "dwell_sweep"))
    parser.add_argument("--values", default="50; 100; 200; 400",
                        help="semicolon-separated dwell times in seconds")
    args = parser.parse_args(argv)

    base = ROOT / "scenarios" / "three_deputy.cfg"
    with tempfile.TemporaryDirectory() as tmp:
        sweep_file = Path(tmp) / "dwell.cfg"
        sweep_file.write_text(
            SWEEP_TEMPLATE.format(base=base, values=args.values)
        )
        code = catmaint_main(["sweep", str(sweep_file), "--out", args.out])
    if code != 0:
        return code
    sys.stdout.write((Path(args.out) / "sweep.csv").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(run())
