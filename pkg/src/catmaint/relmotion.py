"""Clohessy-Wiltshire relative motion and closed natural motion trajectories.

Deputies drift passively in Hill's frame under the linearized CW
equations about the chief's circular orbit::

    x'' = 3 eta^2 x + 2 eta y'
    y'' = -2 eta x'
    z'' = -eta^2 z

The -2 eta sign in the y'' row is the standard one; it is the sign for
which the closed elliptical trajectories used here actually close.

Closed natural motion trajectories (NMTs) are the uncontrolled periodic
solutions.  All of them satisfy y' = -2 eta x; the three shapes are a
stationary point, a line segment oscillating along z, and a 2x1 ellipse
centered at the origin (which additionally satisfies x' = eta y / 2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np


class InvalidSpec(ValueError):
    """Trajectory specification violates its shape requirements."""


@dataclass(frozen=True)
class OrbitParams:
    """Chief orbit parameters: mean motion eta in rad/s."""

    eta: float

    def __post_init__(self) -> None:
        if not (self.eta > 0.0) or not math.isfinite(self.eta):
            raise ValueError(f"mean motion must be positive, got {self.eta}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.eta


@dataclass(frozen=True)
class DeputyState:
    """Hill-frame relative position (m) and velocity (m/s) of one deputy."""

    r: np.ndarray
    v: np.ndarray

    def as_vector(self) -> np.ndarray:
        """Stacked 6-vector [r; v]."""
        return np.concatenate([np.asarray(self.r, float), np.asarray(self.v, float)])

    @staticmethod
    def from_vector(x: np.ndarray) -> "DeputyState":
        x = np.asarray(x, dtype=float)
        return DeputyState(r=x[:3].copy(), v=x[3:6].copy())


class NmtVariant(enum.Enum):
    STATIONARY_POINT = "stationary_point"
    LINE_SEGMENT = "line_segment"
    ELLIPSE = "ellipse"
    NOT_CLOSED = "not_closed"


@dataclass(frozen=True)
class StationaryPoint:
    """Fixed offset along the y (along-track) axis."""

    ry: float = 0.0


@dataclass(frozen=True)
class LineSegment:
    """Oscillation along z with amplitude c and initial phase psi0."""

    c: float
    psi0: float

    def __post_init__(self) -> None:
        if not (self.c > 0.0):
            raise InvalidSpec(f"line segment length must be positive, got {self.c}")


@dataclass(frozen=True)
class Ellipse:
    """Centered 2x1 in-plane ellipse, optionally with a z oscillation.

    ry0 is the along-track semi-axis (the radial semi-axis is ry0/2),
    rz0 the out-of-plane amplitude, and phase the initial phase angle.
    """

    ry0: float
    rz0: float = 0.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.ry0 == 0.0 and self.rz0 == 0.0:
            raise InvalidSpec("ellipse requires a nonzero ry0 or rz0 amplitude")


NmtSpec = Union[StationaryPoint, LineSegment, Ellipse]


def cw_matrix(p: OrbitParams) -> np.ndarray:
    """6x6 CW state matrix A with x = [r; v] ordering."""
    return cw_matrix_from_eta(p.eta)


def cw_matrix_from_eta(eta: float) -> np.ndarray:
    """CW state matrix for a raw mean motion value (eta >= 0).

    Exposed separately so the eta -> 0 double-integrator limit can be
    formed without an OrbitParams instance.
    """
    a = np.zeros((6, 6))
    a[:3, 3:] = np.eye(3)
    a[3, 0] = 3.0 * eta * eta
    a[3, 4] = 2.0 * eta
    a[4, 3] = -2.0 * eta
    a[5, 2] = -eta * eta
    return a


def cw_transition(p: OrbitParams, dt: float) -> np.ndarray:
    """Closed-form state transition matrix Phi(dt) = exp(A dt)."""
    if not math.isfinite(dt):
        raise ValueError("dt must be finite")
    eta = p.eta
    t = float(dt)
    c = math.cos(eta * t)
    s = math.sin(eta * t)
    phi = np.zeros((6, 6))
    # In-plane (x, y) block.
    phi[0, 0] = 4.0 - 3.0 * c
    phi[0, 3] = s / eta
    phi[0, 4] = 2.0 * (1.0 - c) / eta
    phi[1, 0] = 6.0 * (s - eta * t)
    phi[1, 1] = 1.0
    phi[1, 3] = 2.0 * (c - 1.0) / eta
    phi[1, 4] = (4.0 * s - 3.0 * eta * t) / eta
    phi[3, 0] = 3.0 * eta * s
    phi[3, 3] = c
    phi[3, 4] = 2.0 * s
    phi[4, 0] = 6.0 * eta * (c - 1.0)
    phi[4, 3] = -2.0 * s
    phi[4, 4] = 4.0 * c - 3.0
    # Out-of-plane (z) oscillator.
    phi[2, 2] = c
    phi[2, 5] = s / eta
    phi[5, 2] = -eta * s
    phi[5, 5] = c
    return phi


def propagate_deputy(x: DeputyState, p: OrbitParams, dt: float) -> DeputyState:
    """Propagate a deputy by dt seconds with the exact CW transition."""
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    return DeputyState.from_vector(cw_transition(p, dt) @ x.as_vector())


def propagate_deputy_rk4(x: DeputyState, p: OrbitParams, dt: float) -> DeputyState:
    """Single classical RK4 step of the CW dynamics (cross-check path)."""
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    a = cw_matrix(p)
    xv = x.as_vector()
    k1 = a @ xv
    k2 = a @ (xv + 0.5 * dt * k1)
    k3 = a @ (xv + 0.5 * dt * k2)
    k4 = a @ (xv + dt * k3)
    return DeputyState.from_vector(xv + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def sample_nmt(spec: NmtSpec, p: OrbitParams) -> DeputyState:
    """Initial deputy state realizing the requested closed trajectory."""
    eta = p.eta
    if isinstance(spec, StationaryPoint):
        return DeputyState(r=np.array([0.0, spec.ry, 0.0]), v=np.zeros(3))
    if isinstance(spec, LineSegment):
        r = np.array([0.0, 0.0, spec.c * math.sin(spec.psi0)])
        v = np.array([0.0, 0.0, eta * spec.c * math.cos(spec.psi0)])
        return DeputyState(r=r, v=v)
    if isinstance(spec, Ellipse):
        cph = math.cos(spec.phase)
        sph = math.sin(spec.phase)
        r = np.array(
            [0.5 * spec.ry0 * sph, spec.ry0 * cph, spec.rz0 * sph]
        )
        v = np.array(
            [
                0.5 * eta * spec.ry0 * cph,
                -eta * spec.ry0 * sph,
                eta * spec.rz0 * cph,
            ]
        )
        return DeputyState(r=r, v=v)
    raise InvalidSpec(f"unknown trajectory spec: {spec!r}")


def validate_nmt(x: DeputyState, p: OrbitParams) -> NmtVariant:
    """Classify a deputy state by the closure conditions it satisfies.

    The tolerance scales as 1e-9 * max(1, ||x||).
    """
    eta = p.eta
    xv = x.as_vector()
    tol = 1e-9 * max(1.0, float(np.linalg.norm(xv)))
    rx, ry, rz, vx, vy, vz = (float(c) for c in xv)
    if abs(vy + 2.0 * eta * rx) > tol:
        return NmtVariant.NOT_CLOSED
    stationary = all(abs(c) <= tol for c in (rx, rz, vx, vz))
    if stationary:
        return NmtVariant.STATIONARY_POINT
    if abs(rx) <= tol and abs(vx) <= tol:
        return NmtVariant.LINE_SEGMENT
    if abs(vx - 0.5 * eta * ry) <= tol:
        return NmtVariant.ELLIPSE
    return NmtVariant.NOT_CLOSED
