"""Angle-driven model predictive controller via direct single shooting.

The controller tracks the (yaw, pitch) pair against the azimuth/
elevation track of the selected deputy.  Under the package's 3-2-1
convention the Hill-frame boresight at angles (psi, theta) is
(cos(theta)cos(psi), cos(theta)sin(psi), -sin(theta)), so the reference
assignment is psi_ref = Az and theta_ref = -El (ELEVATION_TO_PITCH);
a unit test pins this alignment.

Only the torque sequence is a decision variable; states are recovered
by forward RK4 integration.  Torque box bounds are enforced exactly by
projection; the angular-velocity bound and the sun-exclusion cone are
exterior quadratic penalties with an escalating weight schedule.  The
penalties engage slightly inside the true bounds (PENALTY_MARGIN) so
the soft-constrained optimum sits within the hard limits.

Angle tracking errors are raw differences by default: when a reference
azimuth crosses +/- pi the error jumps by ~2 pi and the controller
produces a torque spike.  Set wrap_angle_errors to use shortest-arc
errors instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .attitude import PITCH_GUARD, ChiefAttitudeState, InertiaMatrix, NearSingularPitch, TorqueCommand
from .frames import azel
from .relmotion import OrbitParams, cw_transition
from .sensing import SensorConfig, ZeroRange

ELEVATION_TO_PITCH = -1.0
PENALTY_MARGIN = 1e-3
SUN_CONE_MARGIN = 2e-2  # rad; exterior penalties are soft, so plan
# the cone avoidance with enough slack that the realized trajectory
# stays strictly feasible.


@dataclass(frozen=True)
class SolverConfig:
    """Projected-gradient settings and the exterior penalty schedule."""

    max_iters: int = 40
    tol_grad: float = 1e-8
    tol_step: float = 1e-12
    rho0: float = 1e3
    rho_factor: float = 10.0
    outer_iters: int = 3


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 10
    dt: float = 1.0
    w1: np.ndarray = field(default_factory=lambda: np.eye(2))
    w2: np.ndarray = field(default_factory=lambda: np.eye(3))
    u_max: float = 2.0 * math.pi
    omega_max: float = math.pi
    wrap_angle_errors: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if not (self.dt > 0.0):
            raise ValueError("dt must be positive")
        for name, w in (("w1", self.w1), ("w2", self.w2)):
            w = np.asarray(w, float)
            if np.linalg.norm(w - w.T) > 1e-12 or np.linalg.eigvalsh(w).min() <= 0:
                raise ValueError(f"{name} must be symmetric positive definite")


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Per-stage (yaw, pitch) reference, shape (N, 2), raw angles."""

    z_ref: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.z_ref)):
            raise ValueError("reference contains non-finite entries")


@dataclass(frozen=True)
class ControlSequence:
    """Torque plan, shape (N, 3)."""

    u: np.ndarray

    def first(self) -> TorqueCommand:
        return TorqueCommand(u=self.u[0].copy())


class MaxIterations(RuntimeWarning):
    """Solver hit its iteration budget; the best iterate was returned."""


class SolverFailure(RuntimeError):
    """No finite-cost torque plan exists from the current state."""


def build_reference(
    mean_j: np.ndarray, p: OrbitParams, cfg: MpcConfig
) -> ReferenceTrajectory:
    """Azimuth/elevation track of a deputy mean over the MPC horizon.

    Stage i uses the CW-propagated mean at i * dt ahead of now.  The
    azimuth is raw atan2 output, so tracks crossing the -x half-plane
    jump between +pi and -pi.
    """
    z = np.empty((cfg.horizon, 2))
    x = np.asarray(mean_j, dtype=float).copy()
    phi = cw_transition(p, cfg.dt)
    for i in range(cfg.horizon):
        try:
            ae = azel(x[:3])
        except Exception as err:
            raise ZeroRange(f"deputy mean at zero range at stage {i}") from err
        z[i, 0] = ae.az
        z[i, 1] = ELEVATION_TO_PITCH * ae.el
        x = phi @ x
    return ReferenceTrajectory(z_ref=z)


def rollout(
    z0: ChiefAttitudeState,
    useq: ControlSequence,
    j: InertiaMatrix,
    p: OrbitParams | None,
    cfg: MpcConfig,
    eta: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward single-shooting rollout.

    Returns (angles, states): angles[i] = (psi_i, theta_i) of the
    pre-input state at stage i (shape (N, 2)); states holds the full
    6-dim states including the terminal one (shape (N+1, 6)).
    """
    if eta is None:
        eta = p.eta if p is not None else 0.0
    states, ok = _kernels.rollout_states(
        z0.as_vector(),
        np.asarray(useq.u, dtype=float),
        j.diag(),
        float(eta),
        cfg.dt,
        PITCH_GUARD,
    )
    if not ok:
        raise NearSingularPitch("pitch guard crossed during rollout")
    return states[:-1, :2].copy(), states


def mpc_cost(
    zseq: np.ndarray,
    useq: np.ndarray,
    ref: ReferenceTrajectory,
    w1: np.ndarray,
    w2: np.ndarray,
    wrap_angle_errors: bool = False,
) -> float:
    """Quadratic tracking-plus-effort cost over the horizon."""
    zseq = np.asarray(zseq, float)
    useq = np.asarray(useq, float)
    err = zseq - ref.z_ref
    if wrap_angle_errors:
        err = (err + math.pi) % (2.0 * math.pi) - math.pi
    cost = float(np.einsum("ij,jk,ik->", err, w1, err))
    cost += float(np.einsum("ij,jk,ik->", useq, w2, useq))
    return cost


def _cost_grad(u_flat, s0, ref, cfg, eta, jdiag, sensor, rho):
    return _kernels.shooting_cost_grad(
        s0,
        u_flat,
        ref.z_ref,
        np.asarray(cfg.w1, float),
        np.asarray(cfg.w2, float),
        jdiag,
        eta,
        cfg.dt,
        cfg.omega_max * (1.0 - PENALTY_MARGIN),
        np.asarray(sensor.sun, float),
        np.asarray(sensor.p_body, float),
        math.cos(max(sensor.alpha - SUN_CONE_MARGIN, 0.0)),
        rho,
        cfg.wrap_angle_errors,
        PITCH_GUARD,
    )


def solve_mpc(
    z0: ChiefAttitudeState,
    ref: ReferenceTrajectory,
    j: InertiaMatrix,
    p: OrbitParams | None,
    cfg: MpcConfig,
    sensor: SensorConfig,
    eta: float | None = None,
    warm_start: np.ndarray | None = None,
) -> tuple[ControlSequence, dict]:
    """Minimize the tracking cost over the torque sequence.

    Projected Barzilai-Borwein gradient descent with Armijo
    backtracking inside an escalating exterior-penalty loop.  The
    returned torque satisfies the box bound exactly and its penalized
    cost never exceeds the zero-input cost.
    """
    if eta is None:
        eta = p.eta if p is not None else 0.0
    eta = float(eta)
    s0 = z0.as_vector()
    if abs(s0[1]) >= PITCH_GUARD:
        raise NearSingularPitch("initial pitch beyond guard")
    n = cfg.horizon
    jdiag = j.diag()
    solver = cfg.solver

    def project(u):
        return np.clip(u, -cfg.u_max, cfg.u_max)

    def evaluate(u_flat, rho):
        cost, grad, tracking, violation, ok = _cost_grad(
            u_flat, s0, ref, cfg, eta, jdiag, sensor, rho
        )
        return cost, grad, tracking, violation

    u = np.zeros(3 * n) if warm_start is None else project(
        np.asarray(warm_start, float).ravel().copy()
    )
    zero = np.zeros(3 * n)

    def despin_plan():
        # Greedy rate-arresting plan: per stage, the clipped torque that
        # would cancel the current body rate in one step.  A cheap
        # candidate that keeps violent tumbles from settling into
        # high-spin local minima of the receding-horizon cost.
        s = s0.copy()
        plan = np.zeros((n, 3))
        for i in range(n):
            plan[i] = np.clip(-jdiag * s[3:6] / cfg.dt, -cfg.u_max, cfg.u_max)
            s = _kernels.rk4_step(s, plan[i], jdiag, eta, cfg.dt)
        return plan.ravel()

    total_iters = 0
    converged = True
    cost = grad = tracking = violation = None
    rho = solver.rho0
    for outer in range(solver.outer_iters):
        last_outer = outer == solver.outer_iters - 1
        cost, grad, tracking, violation = evaluate(u, rho)
        if last_outer or not math.isfinite(cost):
            # Never do worse than the zero-input or rate-arresting
            # plans at the final penalty weight (also rescues a
            # degenerate warm start).
            for cand in (zero, despin_plan()):
                cost_c, grad_c, track_c, viol_c = evaluate(cand, rho)
                if cost_c < cost:
                    u, cost, grad, tracking, violation = (
                        cand.copy(), cost_c, grad_c, track_c, viol_c,
                    )
        if not math.isfinite(cost):
            converged = False
            break
        step = 1.0 / max(1.0, float(np.linalg.norm(grad)))
        inner_converged = False
        for _ in range(solver.max_iters):
            total_iters += 1
            proj_grad = u - project(u - grad)
            if np.linalg.norm(proj_grad) <= solver.tol_grad * (1.0 + abs(cost)):
                inner_converged = True
                break
            # Backtracking on the projected step.
            trial_step = step
            for _bt in range(40):
                u_new = project(u - trial_step * grad)
                d = u_new - u
                cost_new, grad_new, track_new, viol_new = evaluate(u_new, rho)
                if cost_new <= cost + 1e-4 * float(grad @ d):
                    break
                trial_step *= 0.5
            else:
                inner_converged = True  # no descent direction left
                break
            if np.linalg.norm(d) <= solver.tol_step * (1.0 + np.linalg.norm(u)):
                u, cost, grad, tracking, violation = (
                    u_new, cost_new, grad_new, track_new, viol_new,
                )
                inner_converged = True
                break
            # Barzilai-Borwein step for the next iteration.
            g_diff = grad_new - grad
            denom = float(d @ g_diff)
            step = float(d @ d) / denom if denom > 1e-300 else trial_step * 2.0
            step = min(max(step, 1e-12), 1e6)
            u, cost, grad, tracking, violation = (
                u_new, cost_new, grad_new, track_new, viol_new,
            )
        if not inner_converged:
            converged = False
        rho *= solver.rho_factor

    if cost is None or not math.isfinite(cost):
        raise SolverFailure("even the zero-input plan has non-finite cost")
    diagnostics = {
        "cost": float(cost),
        "tracking_cost": float(tracking),
        "grad_norm": float(np.linalg.norm(u - project(u - grad))),
        "iterations": total_iters,
        "penalty_violation": float(violation),
        "converged": converged,
    }
    if not converged:
        warnings.warn(
            "solver iteration budget exhausted; returning best iterate",
            MaxIterations,
            stacklevel=2,
        )
    return ControlSequence(u=u.reshape(n, 3)), diagnostics


def shift_warm_start(prev: ControlSequence) -> np.ndarray:
    """Receding-horizon warm start: drop stage 0, repeat the last stage."""
    u = np.asarray(prev.u, float)
    return np.vstack([u[1:], u[-1:]]).ravel()
