import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catmaint.estimation import BeliefCatalog, entropies
from catmaint.supervisor import (
    SupervisorConfig,
    SupervisorState,
    initial_state,
    select_target,
)

CFG = SupervisorConfig(delta=100.0, epsilon=0.0)


def belief_with_entropies(values):
    """Catalog whose per-deputy entropies equal the requested values."""
    covs = []
    for v in values:
        # entropy = 3(1+ln 2 pi) + 6 ln s for P = s*I6.
        s = math.exp((v - 3.0 * (1.0 + math.log(2.0 * math.pi))) / 6.0)
        covs.append(s * np.eye(6))
    d = len(values)
    return BeliefCatalog(
        xhat=np.zeros(6 * d), covs=covs, q=np.zeros((6, 6)), r_meas=np.eye(6)
    )


def test_entropy_construction_helper():
    b = belief_with_entropies([-1.0, 3.0, 2.0])
    np.testing.assert_allclose(entropies(b), [-1.0, 3.0, 2.0], atol=1e-9)


class TestSelectTarget:
    def test_dwell_holds(self):
        b = belief_with_entropies([-5.0, 10.0])
        s = SupervisorState(j=0, tau=0.0)
        out = select_target(b, s, t=50.0, cfg=CFG)
        assert out == s

    def test_uncertain_target_holds(self):
        b = belief_with_entropies([5.0, 10.0])
        s = SupervisorState(j=0, tau=0.0)
        out = select_target(b, s, t=150.0, cfg=CFG)
        assert out == s

    def test_switch_to_argmax(self):
        b = belief_with_entropies([-1.0, 3.0, 2.0])
        s = SupervisorState(j=0, tau=0.0)
        out = select_target(b, s, t=150.0, cfg=CFG)
        assert out.j == 1
        assert out.tau == 150.0

    def test_tie_breaks_to_lowest_index(self):
        b = belief_with_entropies([-1.0, 4.0, 4.0])
        out = select_target(b, SupervisorState(j=0, tau=0.0), t=150.0, cfg=CFG)
        assert out.j == 1

    def test_switch_may_reselect_current(self):
        b = belief_with_entropies([-1.0, -2.0])
        out = select_target(b, SupervisorState(j=0, tau=0.0), t=150.0, cfg=CFG)
        assert out.j == 0
        assert out.tau == 150.0

    def test_boundary_dwell_is_inclusive(self):
        b = belief_with_entropies([-1.0, 3.0])
        s = SupervisorState(j=0, tau=0.0)
        assert select_target(b, s, t=100.0, cfg=CFG) == s
        assert select_target(b, s, t=100.0 + 1e-9, cfg=CFG).j == 1

    def test_time_before_tau_raises(self):
        b = belief_with_entropies([0.0])
        with pytest.raises(ValueError):
            select_target(b, SupervisorState(j=0, tau=10.0), t=5.0, cfg=CFG)

    def test_bad_index_raises(self):
        b = belief_with_entropies([0.0])
        with pytest.raises(ValueError):
            select_target(b, SupervisorState(j=3, tau=0.0), t=5.0, cfg=CFG)

    def test_candidate_above_variant(self):
        cfg = SupervisorConfig(delta=100.0, epsilon=0.0,
                               require_candidate_above=True)
        b = belief_with_entropies([-1.0, -0.5])
        s = SupervisorState(j=0, tau=0.0)
        # No other deputy above the threshold: hold.
        assert select_target(b, s, t=150.0, cfg=cfg) == s
        b2 = belief_with_entropies([-1.0, 0.5])
        assert select_target(b2, s, t=150.0, cfg=cfg).j == 1

    def test_argmax_invariant_to_common_shift(self):
        base = [-3.0, 1.5, 0.2, -0.7]
        lenient = SupervisorConfig(delta=10.0, epsilon=1e9)
        for shift in (-5.0, 0.0, 7.0):
            b = belief_with_entropies([v + shift for v in base])
            out = select_target(b, SupervisorState(j=0, tau=0.0), t=50.0,
                                cfg=lenient)
            assert out.j == 1


def test_initial_state():
    b = belief_with_entropies([2.0, 9.0, 5.0])
    s = initial_state(b)
    assert s.j == 1
    assert s.tau == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        SupervisorConfig(delta=-1.0)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(2, 6),
    st.integers(0, 2**31 - 1),
    st.floats(1.0, 200.0),
)
def test_switch_spacing_property(d, seed, delta):
    """Consecutive distinct switch times differ by more than delta, and no
    switch happens while the current target is still above threshold."""
    rng = np.random.default_rng(seed)
    cfg = SupervisorConfig(delta=delta, epsilon=0.0)
    s = SupervisorState(j=int(rng.integers(d)), tau=0.0)
    switch_times = []
    t = 0.0
    for _ in range(60):
        t += float(rng.uniform(0.5, delta))
        values = rng.uniform(-5.0, 5.0, size=d)
        b = belief_with_entropies(values)
        out = select_target(b, s, t, cfg)
        if out.tau != s.tau:
            assert t - s.tau > delta
            assert values[s.j] <= cfg.epsilon
            assert out.j == int(np.argmax(values))
            switch_times.append(t)
        s = out
    gaps = np.diff(switch_times)
    assert np.all(gaps > delta)
