"""Catalog belief state: Kalman propagation, fusion, and entropy.

The belief over d deputies is a concatenated mean and a block-diagonal
covariance, one 6x6 block per deputy.  Between measurements each block
propagates with the exact CW transition plus discretized process
noise; when a deputy is visible its block receives a standard linear
Kalman update with full-state measurement (H = I).

The per-deputy differential entropy of the Gaussian belief is

    (k/2) (1 + ln 2 pi) + ln det P

computed through a Cholesky log-determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .relmotion import OrbitParams, cw_transition
from .sensing import ObservationMatrix

_CONDITION_LIMIT = 1e12
_DET_FLOOR = 1e-300
_CHOLESKY_JITTER = 1e-12

ENTROPY_CONST_6D = 3.0 * (1.0 + math.log(2.0 * math.pi))


class SingularInnovation(np.linalg.LinAlgError):
    """Innovation covariance numerically singular in a Kalman update."""


class DegenerateCovariance(ValueError):
    """Covariance determinant underflowed; entropy is -inf."""


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


@dataclass
class BeliefCatalog:
    """Gaussian belief over all deputies.

    xhat: concatenated 6d mean; covs: list of per-deputy 6x6 blocks;
    q: per-deputy continuous process noise intensity (G = I); r_meas:
    per-deputy measurement noise covariance.
    """

    xhat: np.ndarray
    covs: list
    q: np.ndarray
    r_meas: np.ndarray

    def __post_init__(self) -> None:
        self.xhat = np.asarray(self.xhat, dtype=float)
        self.covs = [np.asarray(p, dtype=float) for p in self.covs]
        if len(self.covs) < 1 or self.xhat.shape != (6 * len(self.covs),):
            raise ValueError("mean length must be 6 x number of deputies")
        for p in self.covs:
            if np.linalg.norm(p - p.T) > 1e-9:
                raise ValueError("covariance block not symmetric")
            if np.linalg.eigvalsh(p).min() < -1e-9:
                raise ValueError("covariance block not PSD")

    @property
    def num_deputies(self) -> int:
        return len(self.covs)

    def mean_of(self, i: int) -> np.ndarray:
        return self.xhat[6 * i : 6 * i + 6]

    def copy(self) -> "BeliefCatalog":
        return BeliefCatalog(
            xhat=self.xhat.copy(),
            covs=[p.copy() for p in self.covs],
            q=self.q.copy(),
            r_meas=self.r_meas.copy(),
        )


@dataclass(frozen=True)
class Measurement:
    """Stacked full-state measurements of the currently visible deputies."""

    y: np.ndarray
    visible: tuple

    def __post_init__(self) -> None:
        if len(self.y) != 6 * sum(1 for v in self.visible if v):
            raise ValueError("measurement length inconsistent with visibility")


def discrete_process_noise(q: np.ndarray, phi: np.ndarray, dt: float) -> np.ndarray:
    """Zero-order-hold discretization of the noise intensity.

    Trapezoid approximation of the integral of Phi(s) Q Phi(s)^T over
    the step.
    """
    return _symmetrize(0.5 * dt * (q + phi @ q @ phi.T))


def propagate_belief(b: BeliefCatalog, p: OrbitParams, dt: float) -> BeliefCatalog:
    """Propagate every deputy's belief by dt with the CW transition."""
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    phi = cw_transition(p, dt)
    qd = discrete_process_noise(b.q, phi, dt)
    out = b.copy()
    for i in range(b.num_deputies):
        out.xhat[6 * i : 6 * i + 6] = phi @ b.mean_of(i)
        out.covs[i] = _symmetrize(phi @ b.covs[i] @ phi.T + qd)
    return out


def update_belief(
    b: BeliefCatalog, m: Measurement, obs: ObservationMatrix
) -> BeliefCatalog:
    """Kalman-fuse measurements of the visible deputies (H = I).

    Invisible deputies are untouched.  Raises SingularInnovation when
    the innovation covariance is numerically singular.
    """
    if m.visible != obs.visible:
        raise ValueError("measurement visibility inconsistent with observation")
    out = b.copy()
    offset = 0
    for i, vis in enumerate(obs.visible):
        if not vis:
            continue
        y_i = m.y[offset : offset + 6]
        offset += 6
        p_i = b.covs[i]
        innov_cov = p_i + b.r_meas
        if np.linalg.cond(innov_cov) > _CONDITION_LIMIT:
            raise SingularInnovation(f"innovation covariance singular for deputy {i}")
        gain = np.linalg.solve(innov_cov.T, p_i.T).T  # P (P + R)^-1
        out.xhat[6 * i : 6 * i + 6] = b.mean_of(i) + gain @ (y_i - b.mean_of(i))
        out.covs[i] = _symmetrize((np.eye(6) - gain) @ p_i)
    return out


def log_det_psd(p: np.ndarray) -> float:
    """Log-determinant of a PSD matrix via Cholesky with small jitter."""
    p = _symmetrize(np.asarray(p, dtype=float))
    try:
        chol = np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        chol = np.linalg.cholesky(p + _CHOLESKY_JITTER * np.eye(p.shape[0]))
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def entropy(p_i: np.ndarray, k: int = 6) -> float:
    """Shannon (differential) entropy of a Gaussian with covariance p_i."""
    try:
        logdet = log_det_psd(p_i)
    except np.linalg.LinAlgError as err:
        raise DegenerateCovariance("covariance not positive definite") from err
    if not math.isfinite(logdet) or logdet <= math.log(_DET_FLOOR):
        raise DegenerateCovariance("covariance determinant at or below 1e-300")
    return 0.5 * k * (1.0 + math.log(2.0 * math.pi)) + logdet


def entropies(b: BeliefCatalog) -> np.ndarray:
    """Per-deputy entropy vector of the catalog belief."""
    return np.array([entropy(p) for p in b.covs])


def make_belief(
    means: Sequence[np.ndarray],
    betas: Sequence[float],
    q: np.ndarray,
    r_meas: np.ndarray,
) -> BeliefCatalog:
    """Belief with truth-initialized means and P_i = beta_i * I."""
    xhat = np.concatenate([np.asarray(m, float) for m in means])
    covs = [float(beta) * np.eye(6) for beta in betas]
    return BeliefCatalog(xhat=xhat, covs=covs, q=np.asarray(q, float),
                         r_meas=np.asarray(r_meas, float))
