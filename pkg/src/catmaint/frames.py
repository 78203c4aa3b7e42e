"""Rotation algebra and angle coordinates for the chief/deputy geometry.

Conventions used throughout the package:

* Euler angles are a 3-2-1 (yaw-pitch-roll) set ``(psi, theta, phi)``
  describing the orientation of the chief body frame B relative to
  Hill's frame H.  Elementary rotations are passive with right-handed
  positive angles, so the direction-cosine matrix mapping Hill
  components into body components is::

      R_HB = R1(phi) @ R2(theta) @ R3(psi)

  ``euler_to_rotmat`` returns the transpose ``R_BH`` (body -> Hill),
  which is the matrix needed to express the sensor boresight in Hill
  coordinates.  Written out, with c/s abbreviating cos/sin::

      R_BH = [[ c(th)c(ps),  s(ph)s(th)c(ps)-c(ph)s(ps),  c(ph)s(th)c(ps)+s(ph)s(ps)],
              [ c(th)s(ps),  s(ph)s(th)s(ps)+c(ph)c(ps),  c(ph)s(th)s(ps)-s(ph)c(ps)],
              [-s(th),       s(ph)c(th),                  c(ph)c(th)               ]]

* Azimuth/elevation follow the astronomical convention:
  ``az = atan2(s_y, s_x)`` in ``[-pi, pi]`` and ``el = asin(s_z)`` in
  ``[-pi/2, pi/2)`` for the unit direction ``s``.

* All angles are radians; degrees appear only at the CLI boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ORTHONORMALITY_TOL = 1e-9
GIMBAL_LOCK_TOL = 1e-9
ZERO_VECTOR_TOL = 1e-12


class GimbalLock(ValueError):
    """Pitch extraction attempted within tolerance of theta = +/- pi/2."""


class ZeroVector(ValueError):
    """Direction requested for a vector with (near-)zero norm."""


def wrap_angle(a: float) -> float:
    """Wrap an angle into [-pi, pi]."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class EulerAngles321:
    """3-2-1 Euler angle set (yaw, pitch, roll), radians.

    Pitch must stay inside (-pi/2, pi/2); yaw and roll live in [-pi, pi].
    """

    psi: float
    theta: float
    phi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.psi, self.theta, self.phi], dtype=float)

    def wrapped(self) -> "EulerAngles321":
        """Wrap yaw and roll into [-pi, pi]; pitch is left untouched."""
        return EulerAngles321(wrap_angle(self.psi), self.theta, wrap_angle(self.phi))


@dataclass(frozen=True)
class AzEl:
    """Azimuth/elevation pair on the unit sphere, radians."""

    az: float
    el: float

    def as_array(self) -> np.ndarray:
        return np.array([self.az, self.el], dtype=float)


def skew(a: np.ndarray) -> np.ndarray:
    """Cross-product operator: skew(a) @ b == a x b.

    The result is skew-symmetric with the layout::

        [  0  -a3   a2]
        [ a3    0  -a1]
        [-a2   a1    0]
    """
    a1, a2, a3 = float(a[0]), float(a[1]), float(a[2])
    return np.array(
        [
            [0.0, -a3, a2],
            [a3, 0.0, -a1],
            [-a2, a1, 0.0],
        ]
    )


def is_rotation_matrix(m: np.ndarray, tol: float = ORTHONORMALITY_TOL) -> bool:
    """Check orthonormality (Frobenius) and unit determinant within tol."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        return False
    err = np.linalg.norm(m.T @ m - np.eye(3))
    return err <= tol and abs(np.linalg.det(m) - 1.0) <= tol


def euler_to_rotmat(g: EulerAngles321) -> np.ndarray:
    """Body-to-Hill rotation matrix R_BH for a 3-2-1 Euler angle set.

    ``euler_to_rotmat(EulerAngles321(0, 0, 0))`` is the identity; the
    first column is the Hill-frame image of the body x-axis (the
    default sensor boresight).
    """
    cps, sps = math.cos(g.psi), math.sin(g.psi)
    cth, sth = math.cos(g.theta), math.sin(g.theta)
    cph, sph = math.cos(g.phi), math.sin(g.phi)
    # R_HB = R1(phi) R2(theta) R3(psi); returned matrix is its transpose.
    r_hb = np.array(
        [
            [cth * cps, cth * sps, -sth],
            [sph * sth * cps - cph * sps, sph * sth * sps + cph * cps, sph * cth],
            [cph * sth * cps + sph * sps, cph * sth * sps - sph * cps, cph * cth],
        ]
    )
    return r_hb.T


def rotmat_to_euler(r_bh: np.ndarray) -> EulerAngles321:
    """Extract the 3-2-1 Euler angle set from a body-to-Hill matrix.

    Raises GimbalLock when the pitch argument is within 1e-9 of +/-1.
    """
    r_bh = np.asarray(r_bh, dtype=float)
    # R_HB[0,2] = -sin(theta) and R_HB = r_bh.T, so the pitch argument
    # is -r_bh[2,0].
    pitch_arg = -r_bh[2, 0]
    if abs(pitch_arg) >= 1.0 - GIMBAL_LOCK_TOL:
        raise GimbalLock(f"pitch argument {pitch_arg:.12f} is at gimbal lock")
    theta = math.asin(pitch_arg)
    psi = math.atan2(r_bh[1, 0], r_bh[0, 0])
    phi = math.atan2(r_bh[2, 1], r_bh[2, 2])
    return EulerAngles321(psi, theta, phi)


def azel(x: np.ndarray) -> AzEl:
    """Map a Cartesian vector to (azimuth, elevation) of its direction.

    Raises ZeroVector for norms at or below 1e-12.  At the poles
    (s_x = s_y = 0) the azimuth is defined as atan2(0, 0) = 0.
    """
    x = np.asarray(x, dtype=float)
    n = float(np.linalg.norm(x))
    if n <= ZERO_VECTOR_TOL:
        raise ZeroVector("cannot take azimuth/elevation of a zero vector")
    s = x / n
    az = math.atan2(s[1], s[0])
    el = math.asin(max(-1.0, min(1.0, s[2])))
    return AzEl(az, el)
