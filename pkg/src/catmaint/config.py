"""Flat key-value scenario files and their normalization.

Scenario files are line-oriented ``dotted.key = value`` text.  Values
are numbers, booleans, or comma-separated numeric vectors.  Angles in
files carry a ``_deg`` suffix and are converted to radians internally;
``normalize`` emits the canonical full-precision file for an effective
configuration, and is idempotent.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .attitude import InertiaMatrix
from .mpc import MpcConfig, SolverConfig
from .relmotion import Ellipse, LineSegment, NmtSpec, StationaryPoint
from .sensing import SensorConfig
from .simloop import InitConfig, NoiseConfig, ScenarioConfig
from .supervisor import SupervisorConfig

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


class ConfigError(ValueError):
    """Malformed scenario input; message carries line/field context."""


def parse_flat_text(text: str) -> dict:
    """Parse flat key-value lines into an ordered dict of strings."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: invalid key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def apply_overrides(table: dict, overrides: list) -> dict:
    """Apply repeatable --set key=value overrides on a parsed table."""
    merged = dict(table)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        if not _KEY_RE.match(key):
            raise ConfigError(f"override {item!r}: invalid key")
        merged[key] = value
    return merged


class _Reader:
    def __init__(self, table: dict):
        self.table = dict(table)
        self.seen = set()

    def _raw(self, key, default):
        self.seen.add(key)
        if key in self.table:
            return self.table[key]
        if default is _REQUIRED:
            raise ConfigError(f"field {key!r}: missing required key")
        return None

    def num(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"field {key!r}: not a number: {raw!r}") from None

    def integer(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"field {key!r}: not an integer: {raw!r}") from None

    def boolean(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"field {key!r}: not a boolean: {raw!r}")

    def vector(self, key, size, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return np.asarray(default, dtype=float)
        try:
            vec = np.array([float(p) for p in raw.split(",")])
        except ValueError:
            raise ConfigError(f"field {key!r}: not a numeric vector: {raw!r}") from None
        if len(vec) != size:
            raise ConfigError(f"field {key!r}: expected {size} components")
        return vec

    def text(self, key, default=None):
        raw = self._raw(key, default)
        return default if raw is None else raw

    def unused_keys(self, prefix_ok=()):
        extra = []
        for key in self.table:
            if key in self.seen:
                continue
            if any(key.startswith(p) for p in prefix_ok):
                continue
            extra.append(key)
        return extra


_REQUIRED = object()


def _deputy_from_reader(rd: _Reader, idx: int) -> NmtSpec:
    prefix = f"deputy.{idx}"
    variant = rd.text(f"{prefix}.variant", _REQUIRED)
    if variant == "ellipse":
        return Ellipse(
            ry0=rd.num(f"{prefix}.ry0_m", _REQUIRED),
            rz0=rd.num(f"{prefix}.rz0_m", 0.0),
            phase=math.radians(rd.num(f"{prefix}.phase_deg", 0.0)),
        )
    if variant == "line_segment":
        return LineSegment(
            c=rd.num(f"{prefix}.c_m", _REQUIRED),
            psi0=math.radians(rd.num(f"{prefix}.psi0_deg", 0.0)),
        )
    if variant == "stationary_point":
        return StationaryPoint(ry=rd.num(f"{prefix}.ry_m", 0.0))
    raise ConfigError(f"field {prefix}.variant: unknown variant {variant!r}")


# Short spellings accepted for common keys.
_ALIASES = {
    "mpc.N": "mpc.horizon",
    "supervisor.Delta": "supervisor.delta_s",
    "supervisor.delta": "supervisor.delta_s",
    "duration": "duration_s",
    "dt": "dt_s",
}


def scenario_from_table(table: dict) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a parsed key table."""
    renamed = {}
    for k, v in table.items():
        canon = _ALIASES.get(k, k)
        if canon in renamed:
            raise ConfigError(
                f"key {k!r} conflicts with {canon!r}: both are set"
            )
        renamed[canon] = v
    table = renamed
    rd = _Reader(table)
    try:
        count = rd.integer("deputy.count", _REQUIRED)
        deputies = [_deputy_from_reader(rd, i + 1) for i in range(count)]
        cfg = ScenarioConfig(
            eta=rd.num("eta", 0.0012),
            duration=rd.num("duration_s", 3600.0),
            dt=rd.num("dt_s", 1.0),
            rng_seed=rd.integer("rng_seed", 0),
            deputies=deputies,
            inertia=InertiaMatrix(
                j1=rd.num("inertia.j1", 8.0),
                j2=rd.num("inertia.j2", 10.0),
                j3=rd.num("inertia.j3", 12.0),
            ),
            sensor=SensorConfig(
                p_body=rd.vector("sensor.p_body", 3, (1.0, 0.0, 0.0)),
                alpha=math.radians(rd.num("sensor.alpha_deg", 20.0)),
                sun=rd.vector("sensor.sun", 3, (0.0, 0.0, 1.0)),
            ),
            mpc=MpcConfig(
                horizon=rd.integer("mpc.horizon", 10),
                dt=rd.num("mpc.dt_s", 1.0),
                w1=np.diag(rd.vector("mpc.w1_diag", 2, (1.0, 1.0))),
                w2=np.diag(rd.vector("mpc.w2_diag", 3, (1.0, 1.0, 1.0))),
                u_max=rd.num("mpc.u_max", 2.0 * math.pi),
                omega_max=rd.num("mpc.omega_max", math.pi),
                wrap_angle_errors=rd.boolean("mpc.wrap_angle_errors", False),
                solver=SolverConfig(
                    max_iters=rd.integer("mpc.solver.max_iters", 40),
                    tol_grad=rd.num("mpc.solver.tol_grad", 1e-8),
                    tol_step=rd.num("mpc.solver.tol_step", 1e-12),
                    rho0=rd.num("mpc.solver.rho0", 1e3),
                    rho_factor=rd.num("mpc.solver.rho_factor", 10.0),
                    outer_iters=rd.integer("mpc.solver.outer_iters", 3),
                ),
            ),
            supervisor=SupervisorConfig(
                delta=rd.num("supervisor.delta_s", 100.0),
                epsilon=rd.num("supervisor.epsilon", 0.0),
                require_candidate_above=rd.boolean(
                    "supervisor.require_candidate_above", False
                ),
            ),
            noise=NoiseConfig(
                q_diag=rd.vector("noise.q_diag", 6, np.full(6, 1e-6)),
                r_diag=rd.vector(
                    "noise.r_diag", 6, (1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-2)
                ),
            ),
            init=InitConfig(
                beta_lo=rd.num("init.beta_lo", 10.0),
                beta_hi=rd.num("init.beta_hi", 100.0),
                omega_box=rd.num("init.omega_box", math.pi / 2.0),
                psi_max=math.radians(rd.num("init.psi_max_deg", 180.0)),
                theta_max=math.radians(rd.num("init.theta_max_deg", 17.0)),
                phi_max=math.radians(rd.num("init.phi_max_deg", 180.0)),
            ),
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err
    extra = rd.unused_keys()
    if extra:
        raise ConfigError(f"unknown keys: {', '.join(sorted(extra))}")
    return cfg


def load_scenario(path: str, overrides: list = (), seed: int | None = None) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        table = parse_flat_text(fh.read())
    table = apply_overrides(table, list(overrides))
    if seed is not None:
        table["rng_seed"] = str(seed)
    return scenario_from_table(table)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_vec(v) -> str:
    return ",".join(_fmt(c) for c in np.asarray(v, float))


def normalize(cfg: ScenarioConfig) -> dict:
    """Canonical flat table of an effective configuration.

    Parsing the emitted table reproduces the same configuration, so
    normalize(scenario_from_table(normalize(cfg))) == normalize(cfg).
    """
    out: dict = {
        "eta": _fmt(cfg.eta),
        "duration_s": _fmt(cfg.duration),
        "dt_s": _fmt(cfg.dt),
        "rng_seed": str(cfg.rng_seed),
        "inertia.j1": _fmt(cfg.inertia.j1),
        "inertia.j2": _fmt(cfg.inertia.j2),
        "inertia.j3": _fmt(cfg.inertia.j3),
        "sensor.p_body": _fmt_vec(cfg.sensor.p_body),
        "sensor.alpha_deg": _fmt(math.degrees(cfg.sensor.alpha)),
        "sensor.sun": _fmt_vec(cfg.sensor.sun),
        "mpc.horizon": str(cfg.mpc.horizon),
        "mpc.dt_s": _fmt(cfg.mpc.dt),
        "mpc.w1_diag": _fmt_vec(np.diag(cfg.mpc.w1)),
        "mpc.w2_diag": _fmt_vec(np.diag(cfg.mpc.w2)),
        "mpc.u_max": _fmt(cfg.mpc.u_max),
        "mpc.omega_max": _fmt(cfg.mpc.omega_max),
        "mpc.wrap_angle_errors": str(cfg.mpc.wrap_angle_errors).lower(),
        "mpc.solver.max_iters": str(cfg.mpc.solver.max_iters),
        "mpc.solver.tol_grad": _fmt(cfg.mpc.solver.tol_grad),
        "mpc.solver.tol_step": _fmt(cfg.mpc.solver.tol_step),
        "mpc.solver.rho0": _fmt(cfg.mpc.solver.rho0),
        "mpc.solver.rho_factor": _fmt(cfg.mpc.solver.rho_factor),
        "mpc.solver.outer_iters": str(cfg.mpc.solver.outer_iters),
        "supervisor.delta_s": _fmt(cfg.supervisor.delta),
        "supervisor.epsilon": _fmt(cfg.supervisor.epsilon),
        "supervisor.require_candidate_above": str(
            cfg.supervisor.require_candidate_above
        ).lower(),
        "noise.q_diag": _fmt_vec(cfg.noise.q_diag),
        "noise.r_diag": _fmt_vec(cfg.noise.r_diag),
        "init.beta_lo": _fmt(cfg.init.beta_lo),
        "init.beta_hi": _fmt(cfg.init.beta_hi),
        "init.omega_box": _fmt(cfg.init.omega_box),
        "init.psi_max_deg": _fmt(math.degrees(cfg.init.psi_max)),
        "init.theta_max_deg": _fmt(math.degrees(cfg.init.theta_max)),
        "init.phi_max_deg": _fmt(math.degrees(cfg.init.phi_max)),
        "deputy.count": str(len(cfg.deputies)),
    }
    for i, spec in enumerate(cfg.deputies, start=1):
        prefix = f"deputy.{i}"
        if isinstance(spec, Ellipse):
            out[f"{prefix}.variant"] = "ellipse"
            out[f"{prefix}.ry0_m"] = _fmt(spec.ry0)
            out[f"{prefix}.rz0_m"] = _fmt(spec.rz0)
            out[f"{prefix}.phase_deg"] = _fmt(math.degrees(spec.phase))
        elif isinstance(spec, LineSegment):
            out[f"{prefix}.variant"] = "line_segment"
            out[f"{prefix}.c_m"] = _fmt(spec.c)
            out[f"{prefix}.psi0_deg"] = _fmt(math.degrees(spec.psi0))
        else:
            out[f"{prefix}.variant"] = "stationary_point"
            out[f"{prefix}.ry_m"] = _fmt(spec.ry)
    return out


def normalize_text(cfg: ScenarioConfig) -> str:
    return "\n".join(f"{k} = {v}" for k, v in normalize(cfg).items()) + "\n"
