"""Command-line front end: run, validate, and sweep scenarios.

``run`` executes one closed-loop scenario and writes a per-step table
(steps.csv or steps.jsonl), a summary.json with the metrics and the
normalized configuration, and gnuplot scripts for the standard plots.
``validate`` parses a scenario file and prints its normalized form.
``sweep`` runs the cartesian product of a parameter grid over a base
scenario and writes one metrics row per run.

Exit codes: 0 success, 1 configuration error, 2 simulation aborted on a
constraint or numerical error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys

import numpy as np

from .config import (
    ConfigError,
    apply_overrides,
    load_scenario,
    normalize,
    normalize_text,
    parse_flat_text,
    scenario_from_table,
)
from .mpc import SolverFailure
from .simloop import SimLog, SimulationAbort, run_scenario, summarize

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORT = 2
EXIT_SOLVER = 3


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def steps_header(num_deputies: int) -> list:
    """Stable per-step column order."""
    cols = ["t", "target_j"]
    cols += [f"entropy_{i}" for i in range(1, num_deputies + 1)]
    cols += ["psi", "theta", "phi"]
    cols += [f"omega_{i}" for i in range(1, 4)]
    cols += [f"u_{i}" for i in range(1, 4)]
    cols += ["h1", "az_ref", "el_ref"]
    return cols


def steps_rows(log: SimLog):
    """Yield per-step rows matching steps_header, floats unformatted."""
    for k in range(log.num_steps):
        row = [log.time[k], int(log.target[k] + 1)]
        row += list(log.entropy[k])
        row += list(log.gamma[k])
        row += list(log.omega[k])
        row += list(log.u[k])
        row += [log.h[k, 0], log.az_ref[k], log.el_ref[k]]
        yield row


def write_steps_csv(path: str, log: SimLog) -> None:
    header = steps_header(log.config.num_deputies)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in steps_rows(log):
            fh.write(
                ",".join(
                    str(v) if isinstance(v, int) else _fmt(v) for v in row
                )
                + "\n"
            )


def write_steps_jsonl(path: str, log: SimLog) -> None:
    header = steps_header(log.config.num_deputies)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in steps_rows(log):
            record = {
                k: (v if isinstance(v, int) else float(_fmt(v)))
                for k, v in zip(header, row)
            }
            fh.write(json.dumps(record) + "\n")


_PLOTS = {
    "plot_entropy.gp": """\
set terminal pngcairo size 900,540
set output 'entropy.png'
set datafile separator ','
set key autotitle columnhead
set xlabel 'time (s)'
set ylabel 'belief entropy (nats)'
plot for [i=3:{last_entropy_col}] 'steps.csv' using 1:i with lines
""",
    "plot_azel.gp": """\
set terminal pngcairo size 900,540
set output 'azel.png'
set datafile separator ','
set key autotitle columnhead
set xlabel 'time (s)'
set ylabel 'angle (rad)'
plot 'steps.csv' using 1:{psi_col} with lines, \\
     'steps.csv' using 1:{az_ref_col} with lines, \\
     'steps.csv' using 1:{theta_col} with lines, \\
     'steps.csv' using 1:{el_ref_col} with lines
""",
    "plot_torque.gp": """\
set terminal pngcairo size 900,540
set output 'torque.png'
set datafile separator ','
set key autotitle columnhead
set xlabel 'time (s)'
set ylabel 'torque (N m)'
plot 'steps.csv' using 1:{u1_col} with lines, \\
     'steps.csv' using 1:{u2_col} with lines, \\
     'steps.csv' using 1:{u3_col} with lines
""",
}


def write_plot_scripts(out_dir: str, num_deputies: int) -> None:
    header = steps_header(num_deputies)
    col = {name: i + 1 for i, name in enumerate(header)}  # gnuplot is 1-based
    subs = {
        "last_entropy_col": col[f"entropy_{num_deputies}"],
        "psi_col": col["psi"],
        "theta_col": col["theta"],
        "az_ref_col": col["az_ref"],
        "el_ref_col": col["el_ref"],
        "u1_col": col["u_1"],
        "u2_col": col["u_2"],
        "u3_col": col["u_3"],
    }
    for name, template in _PLOTS.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(template.format(**subs))


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario, overrides=args.set, seed=args.seed)
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    log = run_scenario(cfg)
    if args.format == "jsonl":
        write_steps_jsonl(os.path.join(out_dir, "steps.jsonl"), log)
    else:
        write_steps_csv(os.path.join(out_dir, "steps.csv"), log)
        write_plot_scripts(out_dir, cfg.num_deputies)
    summary = {"metrics": summarize(log), "config": normalize(cfg)}
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out_dir}/ ({log.num_steps} steps, {cfg.num_deputies} deputies)")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_scenario(args.scenario, overrides=args.set, seed=args.seed)
    sys.stdout.write(normalize_text(cfg))
    return EXIT_OK


def _parse_sweep_file(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        table = parse_flat_text(fh.read())
    base = table.pop("base", None)
    if base is None:
        raise ConfigError("sweep file: missing required key 'base'")
    seed_base = int(table.pop("seed_base", "0"))
    grid = {}
    for key, value in table.items():
        if not key.startswith("grid."):
            raise ConfigError(f"sweep file: unknown key {key!r}")
        values = [v.strip() for v in value.split(";") if v.strip()]
        if not values:
            raise ConfigError(f"sweep file: empty value list for {key!r}")
        grid[key[len("grid.") :]] = values
    if not grid:
        raise ConfigError("sweep file: empty grid")
    base_path = os.path.join(os.path.dirname(os.path.abspath(path)), base)
    return base_path, seed_base, grid


def cmd_sweep(args) -> int:
    base_path, seed_base, grid = _parse_sweep_file(args.sweep)
    with open(base_path, "r", encoding="utf-8") as fh:
        base_table = parse_flat_text(fh.read())
    base_table = apply_overrides(base_table, args.set)

    keys = sorted(grid)
    os.makedirs(args.out, exist_ok=True)
    metric_cols = [
        "switch_count",
        "min_inter_switch_gap_s",
        "total_torque",
        "max_abs_omega",
        "max_h1",
        "max_penalty_violation",
    ]
    sweep_dir = os.path.dirname(os.path.abspath(args.sweep))
    rows = []
    for run_index, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        table = dict(base_table)
        assignments = dict(zip(keys, combo))
        # A 'scenario' grid axis swaps the whole base scenario file,
        # letting a sweep compare structurally different scenarios
        # (e.g. deputy counts) in one table.
        alt = assignments.pop("scenario", None)
        if alt is not None:
            with open(os.path.join(sweep_dir, alt), "r", encoding="utf-8") as fh:
                table = apply_overrides(parse_flat_text(fh.read()), args.set)
        table.update(assignments)
        seed = seed_base + run_index
        table["rng_seed"] = str(seed)
        if args.seed is not None:
            table["rng_seed"] = str(args.seed + run_index)
            seed = args.seed + run_index
        cfg = scenario_from_table(table)
        status = "ok"
        metrics = dict.fromkeys(metric_cols, "")
        try:
            log = run_scenario(cfg)
            summary = summarize(log)
            metrics = {
                k: ("" if summary[k] is None else _fmt(summary[k]))
                if not isinstance(summary[k], int)
                else str(summary[k])
                for k in metric_cols
            }
        except SimulationAbort as err:
            status = f"abort:{err.step}"
        except SolverFailure:
            status = "solver_failure"
        rows.append([str(run_index), str(seed), *combo, status]
                    + [metrics[k] for k in metric_cols])

    sweep_path = os.path.join(args.out, "sweep.csv")
    with open(sweep_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["run", "seed", *keys, "status", *metric_cols]) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    print(f"wrote {sweep_path} ({len(rows)} runs)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catmaint",
        description="Closed-loop catalog maintenance simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario rng seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a scenario key (repeatable)")

    p_run = sub.add_parser("run", help="run one scenario and write outputs")
    p_run.add_argument("scenario", help="scenario file")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="parse and print the normalized scenario")
    p_val.add_argument("scenario", help="scenario file")
    add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid over a base scenario")
    p_sweep.add_argument("sweep", help="sweep description file")
    p_sweep.add_argument("--out", default="sweep_out", help="output directory")
    add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationAbort as err:
        print(f"simulation aborted: {err}", file=sys.stderr)
        return EXIT_ABORT
    except SolverFailure as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
