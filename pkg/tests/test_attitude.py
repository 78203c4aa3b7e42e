import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catmaint import _kernels
from catmaint.attitude import (
    PITCH_GUARD,
    ChiefAttitudeState,
    InertiaMatrix,
    NearSingularPitch,
    TorqueCommand,
    euler_rates,
    omega_dot,
    orbital_rate_body,
    step_attitude,
)
from catmaint.frames import EulerAngles321, euler_to_rotmat, skew
from catmaint.relmotion import OrbitParams

J = InertiaMatrix(8.0, 10.0, 12.0)
SPHERE = InertiaMatrix(1.0, 1.0, 1.0)
P = OrbitParams(eta=0.0012)


def make_state(psi=0.0, theta=0.0, phi=0.0, omega=(0.0, 0.0, 0.0)):
    return ChiefAttitudeState(
        gamma=EulerAngles321(psi, theta, phi), omega=np.asarray(omega, float)
    )


class TestEulerRates:
    def test_identity_yaw_rate_sign(self):
        out = euler_rates(EulerAngles321(0.0, 0.0, 0.0), np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(out, [-1.0, 0.0, 0.0], atol=1e-15)

    def test_zero_omega(self):
        out = euler_rates(EulerAngles321(0.4, 0.2, -0.9), np.zeros(3))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_near_singular_pitch_raises(self):
        with pytest.raises(NearSingularPitch):
            euler_rates(EulerAngles321(0.0, math.pi / 2.0 - 1e-9, 0.0),
                        np.array([1.0, 0.0, 0.0]))


def four_term_omega_dot(state, u, j, eta):
    """Independent oracle: the gyroscopic terms written out one by one."""
    w = np.asarray(state.omega, float)
    jm = np.diag(j.diag())
    jinv = np.diag(1.0 / j.diag())
    om = orbital_rate_body(state.gamma, OrbitParams(eta=eta)) if eta > 0 \
        else np.zeros(3)
    gyro = (
        skew(w) @ (jm @ w)
        + skew(w) @ (jm @ om)
        + skew(om) @ (jm @ w)
        + skew(om) @ (jm @ om)
    )
    return -jinv @ gyro + skew(w) @ om + jinv @ np.asarray(u, float)


class TestOmegaDot:
    def test_rest_equilibrium(self):
        out = omega_dot(make_state(), TorqueCommand(np.zeros(3)), J, eta=0.0)
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_spherical_torque_free(self):
        s = make_state(omega=(0.3, -0.7, 1.1))
        out = omega_dot(s, TorqueCommand(np.zeros(3)), SPHERE, eta=0.0)
        np.testing.assert_allclose(out, np.zeros(3), atol=1e-15)

    def test_unit_torque_spherical(self):
        out = omega_dot(make_state(), TorqueCommand(np.array([1.0, 0.0, 0.0])),
                        SPHERE, eta=0.0)
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-15)

    def test_euler_equations_at_zero_eta(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            s = make_state(omega=rng.uniform(-2, 2, 3))
            u = rng.uniform(-3, 3, 3)
            expected = -np.diag(1.0 / J.diag()) @ (
                skew(s.omega) @ (np.diag(J.diag()) @ s.omega)
            ) + u / J.diag()
            out = omega_dot(s, TorqueCommand(u), J, eta=0.0)
            np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_matches_four_term_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            s = make_state(
                psi=rng.uniform(-3, 3),
                theta=rng.uniform(-1.4, 1.4),
                phi=rng.uniform(-3, 3),
                omega=rng.uniform(-2, 2, 3),
            )
            u = rng.uniform(-3, 3, 3)
            out = omega_dot(s, TorqueCommand(u), J, p=P)
            expected = four_term_omega_dot(s, u, J, P.eta)
            np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


class TestOrbitalRateBody:
    def test_identity_attitude(self):
        out = orbital_rate_body(EulerAngles321(0.0, 0.0, 0.0), P)
        np.testing.assert_allclose(out, [0.0, 0.0, P.eta], atol=1e-15)

    def test_matches_rotation(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            g = EulerAngles321(rng.uniform(-3, 3), rng.uniform(-1.4, 1.4),
                               rng.uniform(-3, 3))
            expected = euler_to_rotmat(g).T @ np.array([0.0, 0.0, P.eta])
            np.testing.assert_allclose(orbital_rate_body(g, P), expected, atol=1e-14)


class TestStepAttitude:
    def test_rest_is_fixed_point(self):
        s = make_state(psi=0.7, theta=0.2, phi=-1.1)
        out = step_attitude(s, TorqueCommand(np.zeros(3)), J, None, 1.0, eta=0.0)
        np.testing.assert_allclose(out.as_vector(), s.as_vector(), atol=1e-15)

    def test_single_axis_closed_form(self):
        w = 0.37
        s = make_state(psi=0.25, omega=(0.0, 0.0, w))
        out = step_attitude(s, TorqueCommand(np.zeros(3)), SPHERE, None, 1.0, eta=0.0)
        assert out.gamma.psi == pytest.approx(0.25 - w * 1.0, abs=1e-9)
        assert out.gamma.theta == pytest.approx(0.0, abs=1e-9)

    def test_rk4_order(self):
        # One step vs two half steps: halving dt cuts the difference to
        # the true solution by at least 2^3 for a 4th-order method.
        rng = np.random.default_rng(6)
        for _ in range(10):
            s = make_state(
                psi=rng.uniform(-1, 1), theta=rng.uniform(-0.5, 0.5),
                phi=rng.uniform(-1, 1), omega=rng.uniform(-0.5, 0.5, 3),
            )
            u = TorqueCommand(rng.uniform(-1, 1, 3))

            def integrate(dt, n):
                out = s
                for _ in range(n):
                    out = step_attitude(out, u, J, P, dt)
                return out.as_vector()

            fine = integrate(0.025, 32)  # reference
            err_coarse = np.linalg.norm(integrate(0.8, 1) - fine)
            err_half = np.linalg.norm(integrate(0.4, 2) - fine)
            assert err_coarse / max(err_half, 1e-300) >= 8.0

    def test_energy_conservation_torque_free(self):
        rng = np.random.default_rng(7)
        s = make_state(psi=0.3, theta=0.1, phi=-0.4, omega=rng.uniform(-1, 1, 3))
        jdiag = J.diag()
        e0 = 0.5 * float(s.omega @ (jdiag * s.omega))
        h0 = float(np.linalg.norm(jdiag * s.omega))
        state = s.as_vector()
        for _ in range(10_000):
            state = _kernels.rk4_step(state, np.zeros(3), jdiag, 0.0, 0.1)
        w = state[3:6]
        e1 = 0.5 * float(w @ (jdiag * w))
        h1 = float(np.linalg.norm(jdiag * w))
        assert e1 == pytest.approx(e0, rel=1e-6)
        assert h1 == pytest.approx(h0, rel=1e-6)

    def test_pitch_guard(self):
        s = make_state(theta=PITCH_GUARD + 1e-6)
        with pytest.raises(NearSingularPitch):
            step_attitude(s, TorqueCommand(np.zeros(3)), J, P, 1.0)

    def test_wrap_preserves_rotation(self):
        g = EulerAngles321(math.pi + 0.4, 0.2, -math.pi - 0.3)
        np.testing.assert_allclose(
            euler_to_rotmat(g.wrapped()), euler_to_rotmat(g), atol=1e-12
        )


class TestDerivativeJacobians:
    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(-3, 3), st.floats(-1.3, 1.3), st.floats(-3, 3),
        st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)),
        st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)),
    )
    def test_analytic_jacobian_matches_finite_differences(self, psi, theta, phi,
                                                          omega, u):
        s = np.array([psi, theta, phi, *omega])
        u = np.array(u)
        jdiag = J.diag()
        a, b = _kernels.attitude_deriv_jac(s, u, jdiag, P.eta)
        eps = 1e-6
        for k in range(6):
            d = np.zeros(6)
            d[k] = eps
            fd = (
                _kernels.attitude_deriv(s + d, u, jdiag, P.eta)
                - _kernels.attitude_deriv(s - d, u, jdiag, P.eta)
            ) / (2 * eps)
            np.testing.assert_allclose(a[:, k], fd, rtol=1e-4, atol=1e-6)
        for k in range(3):
            d = np.zeros(3)
            d[k] = eps
            fd = (
                _kernels.attitude_deriv(s, u + d, jdiag, P.eta)
                - _kernels.attitude_deriv(s, u - d, jdiag, P.eta)
            ) / (2 * eps)
            np.testing.assert_allclose(b[:, k], fd, rtol=1e-4, atol=1e-8)


def test_inertia_validation():
    with pytest.raises(ValueError):
        InertiaMatrix(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        InertiaMatrix(1.0, -2.0, 1.0)
