"""Conical field-of-view geometry, observation matrix, and constraints.

The sensor is a cone of half-angle alpha about the body-frame boresight
p_B.  A deputy is observable when the angle between the Hill-frame
boresight R_BH @ p_B and the deputy's unit position vector is at most
alpha (boundary inclusive).  The sun direction is specified in Hill's
frame and held static over a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attitude import ChiefAttitudeState, TorqueCommand
from .frames import euler_to_rotmat
from .relmotion import DeputyState

ZERO_RANGE_TOL = 1e-9
_UNIT_TOL = 1e-9


class ZeroRange(ValueError):
    """Deputy position too close to the chief for a direction test."""


@dataclass(frozen=True)
class SensorConfig:
    """Boresight p_B (body frame), cone half-angle alpha, sun direction.

    p_B and sun must be unit vectors; alpha in (0, pi/2).
    """

    p_body: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    alpha: float = math.radians(20.0)
    sun: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self) -> None:
        for name, vec in (("p_body", self.p_body), ("sun", self.sun)):
            if abs(np.linalg.norm(np.asarray(vec, float)) - 1.0) > _UNIT_TOL:
                raise ValueError(f"{name} must be a unit vector")
        if not (0.0 < self.alpha < math.pi / 2.0):
            raise ValueError("alpha must lie in (0, pi/2)")


@dataclass(frozen=True)
class ConstraintBounds:
    """Box bounds on torque components and angular velocity components."""

    u_max: float = 2.0 * math.pi
    omega_max: float = math.pi


@dataclass(frozen=True)
class ObservationMatrix:
    """Per-deputy visibility flags behind the block observation matrix."""

    visible: tuple

    @property
    def num_visible(self) -> int:
        return sum(1 for v in self.visible if v)

    def materialize(self) -> np.ndarray:
        """Stacked identity blocks, one 6-row band per visible deputy.

        Rows of invisible deputies are dropped entirely, so the result
        is (6 * num_visible) x (6 * d); with no deputies visible it has
        zero rows.
        """
        d = len(self.visible)
        c = np.zeros((6 * self.num_visible, 6 * d))
        row = 0
        for i, vis in enumerate(self.visible):
            if vis:
                c[row : row + 6, 6 * i : 6 * i + 6] = np.eye(6)
                row += 6
        return c


def in_fov(att: ChiefAttitudeState, x: DeputyState, cfg: SensorConfig) -> bool:
    """True iff the deputy lies inside (or on) the sensing cone."""
    r = np.asarray(x.r, dtype=float)
    rng = float(np.linalg.norm(r))
    if rng <= ZERO_RANGE_TOL:
        raise ZeroRange("deputy coincides with the chief")
    boresight = euler_to_rotmat(att.gamma) @ np.asarray(cfg.p_body, float)
    cos_angle = float(boresight @ (r / rng))
    return cos_angle >= math.cos(cfg.alpha)


def build_observation(
    att: ChiefAttitudeState, catalog: Sequence[DeputyState], cfg: SensorConfig
) -> ObservationMatrix:
    """Visibility of every deputy in the catalog at the current attitude."""
    return ObservationMatrix(
        visible=tuple(in_fov(att, x, cfg) for x in catalog)
    )


def constraint_vector(
    att: ChiefAttitudeState,
    u: TorqueCommand,
    cfg: SensorConfig,
    bounds: ConstraintBounds,
) -> np.ndarray:
    """Constraint values h1..h7; each entry is feasible iff <= 0.

    h1 = sun . (R_BH p_B) - cos(alpha)      (sun outside the cone)
    h2..h4 = |omega_k| - omega_max
    h5..h7 = |u_k| - u_max
    """
    boresight = euler_to_rotmat(att.gamma) @ np.asarray(cfg.p_body, float)
    h = np.empty(7)
    h[0] = float(np.asarray(cfg.sun, float) @ boresight) - math.cos(cfg.alpha)
    h[1:4] = np.abs(np.asarray(att.omega, float)) - bounds.omega_max
    h[4:7] = np.abs(u.as_array()) - bounds.u_max
    return h
