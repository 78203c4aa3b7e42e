"""Entropy-threshold target selection with dwell-time hysteresis.

The supervisor keeps pointing at the current target deputy while either
(a) less than the dwell time has elapsed since the last switch, or
(b) the current target's belief entropy is still above the threshold
(there is still uncertainty worth reducing).  Otherwise it switches to
the deputy with the largest entropy and records the switch time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import BeliefCatalog, entropies, entropy


@dataclass(frozen=True)
class SupervisorConfig:
    """Dwell time (s), entropy threshold (nats), and the optional
    stricter switch rule that additionally requires some other deputy
    to sit above the threshold before a switch is allowed."""

    delta: float = 100.0
    epsilon: float = 0.0
    require_candidate_above: bool = False

    def __post_init__(self) -> None:
        if self.delta < 0.0:
            raise ValueError("dwell time must be nonnegative")


@dataclass(frozen=True)
class SupervisorState:
    """Current target index (0-based) and time of the last switch."""

    j: int
    tau: float


def select_target(
    beliefs: BeliefCatalog,
    s: SupervisorState,
    t: float,
    cfg: SupervisorConfig,
) -> SupervisorState:
    """One supervisor decision at time t.

    Ties at maximal entropy break to the lowest index.  The decision is
    a pure function of its arguments.
    """
    if t < s.tau:
        raise ValueError("current time precedes the last switch time")
    if not (0 <= s.j < beliefs.num_deputies):
        raise ValueError("target index out of range")

    if t - s.tau <= cfg.delta:
        return s
    if entropy(beliefs.covs[s.j]) > cfg.epsilon:
        return s

    values = entropies(beliefs)
    if cfg.require_candidate_above and not np.any(
        np.delete(values, s.j) > cfg.epsilon
    ):
        return s
    j_new = int(np.argmax(values))  # argmax takes the first maximum
    return SupervisorState(j=j_new, tau=t)


def initial_state(beliefs: BeliefCatalog, t0: float = 0.0) -> SupervisorState:
    """Start on the deputy with the largest initial entropy."""
    return SupervisorState(j=int(np.argmax(entropies(beliefs))), tau=t0)
