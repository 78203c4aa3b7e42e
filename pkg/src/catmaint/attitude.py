"""Chief rigid-body attitude relative to Hill's frame.

State: 3-2-1 Euler angles of the body frame B with respect to Hill's
frame H, plus the body-frame angular velocity of B relative to H.
Torques are zero-order-hold body torques.  Integration is classical
RK4; after each step yaw and roll are wrapped into [-pi, pi].

The Euler-angle kinematics matrix (applied to the angular velocity) is

    [ -cos(psi)tan(theta)  -sin(psi)tan(theta)  -1 ]
    [  sin(psi)            -cos(psi)             0 ]
    [ -cos(psi)sec(theta)  -sin(psi)sec(theta)   0 ]

which is singular at pitch +/- pi/2; a guard aborts integration before
that point rather than silently degrading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .frames import EulerAngles321
from .relmotion import OrbitParams

PITCH_GUARD = math.pi / 2.0 - 1e-3
_KINEMATICS_SINGULARITY_TOL = 1e-6


class NearSingularPitch(ValueError):
    """Pitch too close to +/- pi/2 for the Euler-angle kinematics."""


@dataclass(frozen=True)
class InertiaMatrix:
    """Principal moments of inertia, kg*m^2."""

    j1: float
    j2: float
    j3: float

    def __post_init__(self) -> None:
        if not (self.j1 > 0.0 and self.j2 > 0.0 and self.j3 > 0.0):
            raise ValueError("principal moments must be strictly positive")

    def diag(self) -> np.ndarray:
        return np.array([self.j1, self.j2, self.j3])


@dataclass(frozen=True)
class ChiefAttitudeState:
    """Euler angles (B relative to H) and body angular velocity rad/s."""

    gamma: EulerAngles321
    omega: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.gamma.as_array(), np.asarray(self.omega, float)])

    @staticmethod
    def from_vector(s: np.ndarray) -> "ChiefAttitudeState":
        s = np.asarray(s, dtype=float)
        return ChiefAttitudeState(
            gamma=EulerAngles321(float(s[0]), float(s[1]), float(s[2])),
            omega=s[3:6].copy(),
        )


@dataclass(frozen=True)
class TorqueCommand:
    """Body-frame torque, N*m."""

    u: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=float)


def orbital_rate_body(g: EulerAngles321, p: OrbitParams) -> np.ndarray:
    """Hill-frame orbital angular velocity expressed in body axes.

    Equals R_HB @ (0, 0, eta); only pitch and roll enter.
    """
    cth, sth = math.cos(g.theta), math.sin(g.theta)
    cph, sph = math.cos(g.phi), math.sin(g.phi)
    return p.eta * np.array([-sth, sph * cth, cph * cth])


def euler_rates(g: EulerAngles321, omega: np.ndarray) -> np.ndarray:
    """Euler angle rates for a body angular velocity."""
    if abs(g.theta) >= math.pi / 2.0 - _KINEMATICS_SINGULARITY_TOL:
        raise NearSingularPitch(f"pitch {g.theta:.6f} too close to +/- pi/2")
    cps, sps = math.cos(g.psi), math.sin(g.psi)
    tth = math.tan(g.theta)
    scth = 1.0 / math.cos(g.theta)
    k = np.array(
        [
            [-cps * tth, -sps * tth, -1.0],
            [sps, -cps, 0.0],
            [-cps * scth, -sps * scth, 0.0],
        ]
    )
    return k @ np.asarray(omega, dtype=float)


def omega_dot(
    state: ChiefAttitudeState,
    u: TorqueCommand,
    j: InertiaMatrix,
    p: OrbitParams | None = None,
    eta: float | None = None,
) -> np.ndarray:
    """Angular acceleration of B relative to H, in body axes.

    With eta = 0 this reduces to Euler's equations for a rigid body,
    w_dot = -J^-1 (w x J w) + J^-1 u.  Pass either OrbitParams or a raw
    eta (eta=0 selects the non-orbiting limit).
    """
    if eta is None:
        eta = p.eta if p is not None else 0.0
    ds = _kernels.attitude_deriv(state.as_vector(), u.as_array(), j.diag(), float(eta))
    return ds[3:6]


def step_attitude(
    state: ChiefAttitudeState,
    u: TorqueCommand,
    j: InertiaMatrix,
    p: OrbitParams | None,
    dt: float,
    eta: float | None = None,
) -> ChiefAttitudeState:
    """One RK4 step of the coupled kinematics/dynamics under held torque."""
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    if eta is None:
        eta = p.eta if p is not None else 0.0
    s = state.as_vector()
    if abs(s[1]) >= PITCH_GUARD:
        raise NearSingularPitch(f"pitch {s[1]:.6f} beyond guard {PITCH_GUARD:.6f}")
    out = _kernels.rk4_step(s, u.as_array(), j.diag(), float(eta), float(dt))
    if abs(out[1]) >= PITCH_GUARD:
        raise NearSingularPitch(f"pitch {out[1]:.6f} beyond guard after step")
    return ChiefAttitudeState.from_vector(out)
