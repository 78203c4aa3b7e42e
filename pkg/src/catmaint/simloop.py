"""Closed-loop catalog maintenance simulation.

Per step: propagate the truth and the chief attitude under the held
torque, propagate the belief, fuse measurements of whatever is in the
field of view, let the supervisor pick a target, rebuild the
azimuth/elevation reference from that target's belief mean, solve the
MPC, and hold the first torque of the plan until the next step.

Runs are fully deterministic for a fixed seed: measurement noise and
the initial attitude/covariance draws come from one seeded generator
consumed in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .attitude import (
    ChiefAttitudeState,
    InertiaMatrix,
    NearSingularPitch,
    TorqueCommand,
    step_attitude,
)
from .estimation import (
    BeliefCatalog,
    Measurement,
    entropies,
    log_det_psd,
    make_belief,
    propagate_belief,
    update_belief,
)
from .frames import EulerAngles321
from .mpc import ControlSequence, MpcConfig, build_reference, shift_warm_start, solve_mpc
from .relmotion import DeputyState, NmtSpec, OrbitParams, cw_transition, sample_nmt
from .sensing import ConstraintBounds, SensorConfig, build_observation, constraint_vector
from .supervisor import SupervisorConfig, SupervisorState, initial_state, select_target


class SimulationAbort(RuntimeError):
    """A module error occurred mid-run; carries the failing step index."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class InitConfig:
    """Randomized initial conditions for the chief and the covariances.

    Initial angular velocity is uniform in the cube
    [-omega_box, omega_box]^3; initial Euler angles are uniform in
    per-angle boxes; initial covariances are beta * I with beta uniform
    in [beta_lo, beta_hi] per deputy.
    """

    beta_lo: float = 10.0
    beta_hi: float = 100.0
    omega_box: float = math.pi / 2.0
    psi_max: float = math.pi
    theta_max: float = 0.3
    phi_max: float = math.pi

    def __post_init__(self) -> None:
        if self.beta_lo > self.beta_hi:
            raise ValueError("beta_lo must not exceed beta_hi")


@dataclass(frozen=True)
class NoiseConfig:
    """Per-deputy process and measurement noise (diagonal)."""

    q_diag: np.ndarray = field(default_factory=lambda: np.full(6, 1e-6))
    r_diag: np.ndarray = field(
        default_factory=lambda: np.array([1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-2])
    )


@dataclass(frozen=True)
class ScenarioConfig:
    eta: float = 0.0012
    duration: float = 3600.0
    dt: float = 1.0
    deputies: Sequence[NmtSpec] = ()
    inertia: InertiaMatrix = field(default_factory=lambda: InertiaMatrix(8.0, 10.0, 12.0))
    sensor: SensorConfig = field(default_factory=SensorConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    supervisor: SupervisorConfig = field(default_factory=SupervisorConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    init: InitConfig = field(default_factory=InitConfig)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (self.duration > self.dt > 0.0):
            raise ValueError("need duration > dt > 0")
        if len(self.deputies) == 0:
            raise ValueError("at least one deputy is required")

    @property
    def num_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def num_deputies(self) -> int:
        return len(self.deputies)


@dataclass
class SimLog:
    """Per-step history of one closed-loop run."""

    config: ScenarioConfig
    time: np.ndarray
    target: np.ndarray
    entropy: np.ndarray       # (K, d)
    truth: np.ndarray         # (K, d, 6)
    xhat: np.ndarray          # (K, d, 6)
    gamma: np.ndarray         # (K, 3)
    omega: np.ndarray         # (K, 3)
    u: np.ndarray             # (K, 3)
    h: np.ndarray             # (K, 7)
    az_ref: np.ndarray
    el_ref: np.ndarray
    visible: np.ndarray       # (K, d) bool
    logdet_pre: np.ndarray    # (K, d) before the measurement update
    logdet_post: np.ndarray   # (K, d) after it
    cov_min_eig: np.ndarray   # (K, d) smallest covariance eigenvalue
    solver_iterations: np.ndarray
    penalty_violation: np.ndarray

    @property
    def num_steps(self) -> int:
        return len(self.time)

    def switch_times(self) -> np.ndarray:
        """Times at which the target index changed."""
        change = np.flatnonzero(np.diff(self.target) != 0) + 1
        return self.time[change]


def _draw_initial_attitude(rng: np.random.Generator, init: InitConfig) -> ChiefAttitudeState:
    psi = rng.uniform(-init.psi_max, init.psi_max)
    theta = rng.uniform(-init.theta_max, init.theta_max)
    phi = rng.uniform(-init.phi_max, init.phi_max)
    omega = rng.uniform(-init.omega_box, init.omega_box, size=3)
    return ChiefAttitudeState(gamma=EulerAngles321(psi, theta, phi), omega=omega)


def run_scenario(cfg: ScenarioConfig) -> SimLog:
    """Run the closed loop and return the full per-step log."""
    rng = np.random.default_rng(cfg.rng_seed)
    orbit = OrbitParams(eta=cfg.eta)
    d = cfg.num_deputies
    k_steps = cfg.num_steps

    truths = [sample_nmt(spec, orbit) for spec in cfg.deputies]
    att = _draw_initial_attitude(rng, cfg.init)
    betas = rng.uniform(cfg.init.beta_lo, cfg.init.beta_hi, size=d)
    q = np.diag(np.asarray(cfg.noise.q_diag, float))
    r_meas = np.diag(np.asarray(cfg.noise.r_diag, float))
    noise_chol = np.sqrt(np.asarray(cfg.noise.r_diag, float))
    belief = make_belief([x.as_vector() for x in truths], betas, q, r_meas)
    sup = initial_state(belief, t0=0.0)
    bounds = ConstraintBounds(u_max=cfg.mpc.u_max, omega_max=cfg.mpc.omega_max)

    phi_truth = cw_transition(orbit, cfg.dt)
    truth_vecs = np.stack([x.as_vector() for x in truths])

    log = SimLog(
        config=cfg,
        time=np.zeros(k_steps),
        target=np.zeros(k_steps, dtype=int),
        entropy=np.zeros((k_steps, d)),
        truth=np.zeros((k_steps, d, 6)),
        xhat=np.zeros((k_steps, d, 6)),
        gamma=np.zeros((k_steps, 3)),
        omega=np.zeros((k_steps, 3)),
        u=np.zeros((k_steps, 3)),
        h=np.zeros((k_steps, 7)),
        az_ref=np.zeros(k_steps),
        el_ref=np.zeros(k_steps),
        visible=np.zeros((k_steps, d), dtype=bool),
        logdet_pre=np.zeros((k_steps, d)),
        logdet_post=np.zeros((k_steps, d)),
        cov_min_eig=np.zeros((k_steps, d)),
        solver_iterations=np.zeros(k_steps, dtype=int),
        penalty_violation=np.zeros(k_steps),
    )

    plan: Optional[ControlSequence] = None
    u_held = TorqueCommand(u=np.zeros(3))

    for k in range(k_steps):
        t = k * cfg.dt
        try:
            if k > 0:
                truth_vecs = truth_vecs @ phi_truth.T
                att = step_attitude(att, u_held, cfg.inertia, orbit, cfg.dt)
                belief = propagate_belief(belief, orbit, cfg.dt)

            truth_states = [DeputyState.from_vector(truth_vecs[i]) for i in range(d)]
            obs = build_observation(att, truth_states, cfg.sensor)
            log.logdet_pre[k] = [log_det_psd(p) for p in belief.covs]
            if obs.num_visible:
                parts = []
                for i, vis in enumerate(obs.visible):
                    if vis:
                        parts.append(
                            truth_vecs[i] + noise_chol * rng.standard_normal(6)
                        )
                meas = Measurement(y=np.concatenate(parts), visible=obs.visible)
                belief = update_belief(belief, meas, obs)
            log.logdet_post[k] = [log_det_psd(p) for p in belief.covs]
            log.cov_min_eig[k] = [np.linalg.eigvalsh(p)[0] for p in belief.covs]

            sup = select_target(belief, sup, t, cfg.supervisor)
            ref = build_reference(belief.mean_of(sup.j), orbit, cfg.mpc)
            warm = shift_warm_start(plan) if plan is not None else None
            plan, diag = solve_mpc(
                att, ref, cfg.inertia, orbit, cfg.mpc, cfg.sensor, warm_start=warm
            )
            u_held = plan.first()
        except (NearSingularPitch, np.linalg.LinAlgError, ValueError) as err:
            raise SimulationAbort(k, str(err)) from err

        log.time[k] = t
        log.target[k] = sup.j
        log.entropy[k] = entropies(belief)
        log.truth[k] = truth_vecs
        log.xhat[k] = belief.xhat.reshape(d, 6)
        log.gamma[k] = att.gamma.as_array()
        log.omega[k] = att.omega
        log.u[k] = u_held.as_array()
        log.h[k] = constraint_vector(att, u_held, cfg.sensor, bounds)
        log.az_ref[k] = ref.z_ref[0, 0]
        log.el_ref[k] = ref.z_ref[0, 1]
        log.visible[k] = obs.visible
        log.solver_iterations[k] = diag["iterations"]
        log.penalty_violation[k] = diag["penalty_violation"]

    return log


def summarize(log: SimLog) -> dict:
    """Scalar metrics of one run."""
    if log.num_steps == 0:
        raise ValueError("empty log")
    cfg = log.config
    eps = cfg.supervisor.epsilon
    settle_time = []
    post_settle_fraction = []
    for i in range(cfg.num_deputies):
        below = log.entropy[:, i] <= eps
        idx = np.flatnonzero(below)
        if len(idx) == 0:
            settle_time.append(None)
            post_settle_fraction.append(0.0)
        else:
            settle_time.append(float(log.time[idx[0]]))
            tail = below[idx[0] :]
            post_settle_fraction.append(float(np.mean(tail)))
    switches = log.switch_times()
    gaps = np.diff(switches)
    return {
        "settle_time_s": settle_time,
        "post_settle_below_fraction": post_settle_fraction,
        "switch_count": int(len(switches)),
        "min_inter_switch_gap_s": float(gaps.min()) if len(gaps) else None,
        "total_torque": float(np.sum(np.abs(log.u)) * cfg.dt),
        "max_abs_omega": float(np.max(np.abs(log.omega))),
        "max_h1": float(np.max(log.h[:, 0])),
        "max_penalty_violation": float(np.max(log.penalty_violation)),
    }
