"""Compiled inner loops shared by the attitude model and the MPC solver.

Everything in this module works on flat float64 arrays so it can be
jitted with numba.  The attitude state is the 6-vector
``s = [psi, theta, phi, w1, w2, w3]`` (3-2-1 Euler angles of body
relative to Hill, body-frame angular velocity of body relative to
Hill).

The angular velocity dynamics use the identity that the four
gyroscopic cross terms collapse to a single term in the total rate
``w + Omega``::

    w_dot = -J^-1 [(w + Omega) x J (w + Omega)] + w x Omega + J^-1 u

with ``Omega = eta * (-sin(theta), sin(phi) cos(theta), cos(phi) cos(theta))``,
the Hill-frame orbital rate expressed in body axes.

Set the environment variable CATMAINT_NO_NUMBA=1 to run the pure-Python
versions (useful for debugging).
"""

from __future__ import annotations

import math
import os

import numpy as np

if os.environ.get("CATMAINT_NO_NUMBA"):
    def njit(*args, **kwargs):  # pragma: no cover - debug escape hatch
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
else:
    from numba import njit

TWO_PI = 2.0 * math.pi
GUARD_RHO = 1e4


@njit(cache=True)
def _wrap(a):
    return (a + math.pi) % TWO_PI - math.pi


@njit(cache=True)
def attitude_deriv(s, u, jdiag, eta):
    """Time derivative of the 6-dim attitude state."""
    psi, theta, phi = s[0], s[1], s[2]
    w = s[3:6]
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    tth = sth / cth
    scth = 1.0 / cth

    ds = np.empty(6)
    ds[0] = -cps * tth * w[0] - sps * tth * w[1] - w[2]
    ds[1] = sps * w[0] - cps * w[1]
    ds[2] = -cps * scth * w[0] - sps * scth * w[1]

    om0 = eta * (-sth)
    om1 = eta * (sph * cth)
    om2 = eta * (cph * cth)
    wt0 = w[0] + om0
    wt1 = w[1] + om1
    wt2 = w[2] + om2
    # h = J wt (principal axes)
    h0 = jdiag[0] * wt0
    h1 = jdiag[1] * wt1
    h2 = jdiag[2] * wt2
    # wt x h
    g0 = wt1 * h2 - wt2 * h1
    g1 = wt2 * h0 - wt0 * h2
    g2 = wt0 * h1 - wt1 * h0
    # w x Omega
    c0 = w[1] * om2 - w[2] * om1
    c1 = w[2] * om0 - w[0] * om2
    c2 = w[0] * om1 - w[1] * om0
    ds[3] = (-g0 + u[0]) / jdiag[0] + c0
    ds[4] = (-g1 + u[1]) / jdiag[1] + c1
    ds[5] = (-g2 + u[2]) / jdiag[2] + c2
    return ds


@njit(cache=True)
def attitude_deriv_jac(s, u, jdiag, eta):
    """Jacobians (df/ds, df/du) of attitude_deriv at (s, u)."""
    psi, theta, phi = s[0], s[1], s[2]
    w = s[3:6]
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    tth = sth / cth
    scth = 1.0 / cth
    scth2 = scth * scth

    a = np.zeros((6, 6))
    # Kinematics rows.
    a[0, 0] = sps * tth * w[0] - cps * tth * w[1]
    a[0, 1] = -cps * scth2 * w[0] - sps * scth2 * w[1]
    a[0, 3] = -cps * tth
    a[0, 4] = -sps * tth
    a[0, 5] = -1.0
    a[1, 0] = cps * w[0] + sps * w[1]
    a[1, 3] = sps
    a[1, 4] = -cps
    a[2, 0] = sps * scth * w[0] - cps * scth * w[1]
    a[2, 1] = (-cps * w[0] - sps * w[1]) * scth * tth
    a[2, 3] = -cps * scth
    a[2, 4] = -sps * scth

    om = np.empty(3)
    om[0] = eta * (-sth)
    om[1] = eta * (sph * cth)
    om[2] = eta * (cph * cth)
    # dOmega/d(theta), dOmega/d(phi); dOmega/d(psi) = 0.
    domdth = np.empty(3)
    domdth[0] = eta * (-cth)
    domdth[1] = eta * (-sph * sth)
    domdth[2] = eta * (-cph * sth)
    domdph = np.empty(3)
    domdph[0] = 0.0
    domdph[1] = eta * (cph * cth)
    domdph[2] = eta * (-sph * cth)

    wt = np.empty(3)
    for i in range(3):
        wt[i] = w[i] + om[i]
    jwt = np.empty(3)
    for i in range(3):
        jwt[i] = jdiag[i] * wt[i]

    # m = -J^-1 (skew(wt) J - skew(J wt)), the sensitivity of the
    # gyroscopic torque term to the total rate wt.
    m = np.zeros((3, 3))
    skw = np.zeros((3, 3))
    skw[0, 1] = -wt[2]
    skw[0, 2] = wt[1]
    skw[1, 0] = wt[2]
    skw[1, 2] = -wt[0]
    skw[2, 0] = -wt[1]
    skw[2, 1] = wt[0]
    skjwt = np.zeros((3, 3))
    skjwt[0, 1] = -jwt[2]
    skjwt[0, 2] = jwt[1]
    skjwt[1, 0] = jwt[2]
    skjwt[1, 2] = -jwt[0]
    skjwt[2, 0] = -jwt[1]
    skjwt[2, 1] = jwt[0]
    for i in range(3):
        for k in range(3):
            m[i, k] = -(skw[i, k] * jdiag[k] - skjwt[i, k]) / jdiag[i]

    # d(w_dot)/dw = m - skew(Omega)
    skom = np.zeros((3, 3))
    skom[0, 1] = -om[2]
    skom[0, 2] = om[1]
    skom[1, 0] = om[2]
    skom[1, 2] = -om[0]
    skom[2, 0] = -om[1]
    skom[2, 1] = om[0]
    for i in range(3):
        for k in range(3):
            a[3 + i, 3 + k] = m[i, k] - skom[i, k]

    # d(w_dot)/dGamma = (m + skew(w)) @ dOmega/dGamma
    skwv = np.zeros((3, 3))
    skwv[0, 1] = -w[2]
    skwv[0, 2] = w[1]
    skwv[1, 0] = w[2]
    skwv[1, 2] = -w[0]
    skwv[2, 0] = -w[1]
    skwv[2, 1] = w[0]
    for i in range(3):
        dth = 0.0
        dph = 0.0
        for k in range(3):
            coef = m[i, k] + skwv[i, k]
            dth += coef * domdth[k]
            dph += coef * domdph[k]
        a[3 + i, 1] = dth
        a[3 + i, 2] = dph

    b = np.zeros((6, 3))
    for i in range(3):
        b[3 + i, i] = 1.0 / jdiag[i]
    return a, b


@njit(cache=True)
def rk4_step(s, u, jdiag, eta, dt):
    """One classical RK4 step with zero-order-hold torque.

    Yaw and roll are wrapped into [-pi, pi] after the step.
    """
    k1 = attitude_deriv(s, u, jdiag, eta)
    k2 = attitude_deriv(s + 0.5 * dt * k1, u, jdiag, eta)
    k3 = attitude_deriv(s + 0.5 * dt * k2, u, jdiag, eta)
    k4 = attitude_deriv(s + dt * k3, u, jdiag, eta)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[0] = _wrap(out[0])
    out[2] = _wrap(out[2])
    return out


@njit(cache=True)
def rk4_step_jac(s, u, jdiag, eta, dt):
    """RK4 step together with its Jacobians d(s+)/ds and d(s+)/du.

    Angle wrapping only adds 2*pi offsets, so it does not affect the
    Jacobians.
    """
    eye = np.eye(6)
    k1 = attitude_deriv(s, u, jdiag, eta)
    a1, b1 = attitude_deriv_jac(s, u, jdiag, eta)
    s2 = s + 0.5 * dt * k1
    k2 = attitude_deriv(s2, u, jdiag, eta)
    a2, b2 = attitude_deriv_jac(s2, u, jdiag, eta)
    s3 = s + 0.5 * dt * k2
    k3 = attitude_deriv(s3, u, jdiag, eta)
    a3, b3 = attitude_deriv_jac(s3, u, jdiag, eta)
    s4 = s + dt * k3
    k4 = attitude_deriv(s4, u, jdiag, eta)
    a4, b4 = attitude_deriv_jac(s4, u, jdiag, eta)

    dk1 = a1
    dk2 = a2 @ (eye + 0.5 * dt * dk1)
    dk3 = a3 @ (eye + 0.5 * dt * dk2)
    dk4 = a4 @ (eye + dt * dk3)
    phi = eye + (dt / 6.0) * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4)

    dk1u = b1
    dk2u = b2 + 0.5 * dt * (a2 @ dk1u)
    dk3u = b3 + 0.5 * dt * (a3 @ dk2u)
    dk4u = b4 + dt * (a4 @ dk3u)
    psi_u = (dt / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u)

    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[0] = _wrap(out[0])
    out[2] = _wrap(out[2])
    return out, phi, psi_u


@njit(cache=True)
def rollout_states(s0, useq, jdiag, eta, dt, pitch_guard):
    """Forward-integrate N steps; returns (states, ok).

    states has shape (N+1, 6); states[i] is the pre-input state at
    stage i.  ok flips to False if |pitch| crosses the guard at any
    visited state.
    """
    n = useq.shape[0]
    states = np.empty((n + 1, 6))
    states[0] = s0
    ok = abs(s0[1]) < pitch_guard
    for i in range(n):
        states[i + 1] = rk4_step(states[i], useq[i], jdiag, eta, dt)
        if abs(states[i + 1, 1]) >= pitch_guard:
            ok = False
    return states, ok


@njit(cache=True)
def _sun_alignment(psi, theta, phi, pb, sun):
    """s^T (R_BH pb) and its gradient w.r.t. (psi, theta, phi).

    Uses h = pb^T R_HB sun with the 3-2-1 direction cosine matrix
    R_HB = R1(phi) R2(theta) R3(psi).
    """
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)

    a = np.empty((3, 3))
    a[0, 0] = cth * cps
    a[0, 1] = cth * sps
    a[0, 2] = -sth
    a[1, 0] = sph * sth * cps - cph * sps
    a[1, 1] = sph * sth * sps + cph * cps
    a[1, 2] = sph * cth
    a[2, 0] = cph * sth * cps + sph * sps
    a[2, 1] = cph * sth * sps - sph * cps
    a[2, 2] = cph * cth

    dps = np.zeros((3, 3))
    dps[0, 0] = -cth * sps
    dps[0, 1] = cth * cps
    dps[1, 0] = -sph * sth * sps - cph * cps
    dps[1, 1] = sph * sth * cps - cph * sps
    dps[2, 0] = -cph * sth * sps + sph * cps
    dps[2, 1] = cph * sth * cps + sph * sps

    dth = np.zeros((3, 3))
    dth[0, 0] = -sth * cps
    dth[0, 1] = -sth * sps
    dth[0, 2] = -cth
    dth[1, 0] = sph * cth * cps
    dth[1, 1] = sph * cth * sps
    dth[1, 2] = -sph * sth
    dth[2, 0] = cph * cth * cps
    dth[2, 1] = cph * cth * sps
    dth[2, 2] = -cph * sth

    dph = np.zeros((3, 3))
    dph[1, 0] = cph * sth * cps + sph * sps
    dph[1, 1] = cph * sth * sps - sph * cps
    dph[1, 2] = cph * cth
    dph[2, 0] = -sph * sth * cps + cph * sps
    dph[2, 1] = -sph * sth * sps - cph * cps
    dph[2, 2] = -sph * cth

    val = 0.0
    gps = 0.0
    gth = 0.0
    gph = 0.0
    for i in range(3):
        for k in range(3):
            pisk = pb[i] * sun[k]
            val += pisk * a[i, k]
            gps += pisk * dps[i, k]
            gth += pisk * dth[i, k]
            gph += pisk * dph[i, k]
    return val, gps, gth, gph


@njit(cache=True)
def shooting_cost_grad(
    s0,
    u_flat,
    zref,
    w1,
    w2,
    jdiag,
    eta,
    dt,
    omega_bound,
    sun,
    pb,
    cos_sun_bound,
    rho,
    wrap_errors,
    pitch_guard,
):
    """Cost and gradient of the single-shooting MPC objective.

    Stage cost over i = 0..N-1 on the pre-input states:
    tracking (psi, theta) against zref with weight w1, torque effort
    with weight w2, plus exterior quadratic penalties (weight rho) on
    per-axis |omega| above omega_bound and on sun alignment above
    cos_sun_bound.  Returns (cost, grad, tracking_cost, max_violation,
    ok); grad is d(cost)/d(u_flat) via the discrete adjoint of RK4.

    If the rollout crosses the pitch guard, integration truncates at
    the crossing state and the remainder of the horizon is charged a
    large finite penalty quadratic in the pitch overshoot, so the
    gradient still points away from the singular region (ok = False).
    """
    n = zref.shape[0]
    useq = u_flat.reshape((n, 3))
    states = np.empty((n + 1, 6))
    phis = np.empty((n, 6, 6))
    psius = np.empty((n, 6, 3))
    states[0] = s0
    ok = abs(s0[1]) < pitch_guard
    m = n  # stages actually reached before any guard crossing
    for i in range(n):
        nxt, phi, psiu = rk4_step_jac(states[i], useq[i], jdiag, eta, dt)
        states[i + 1] = nxt
        phis[i] = phi
        psius[i] = psiu
        if abs(nxt[1]) >= pitch_guard:
            ok = False
            m = i + 1
            for k in range(i + 2, n + 1):
                states[k] = nxt
            break

    cost = 0.0
    tracking = 0.0
    max_violation = 0.0
    lgrad_s = np.zeros((n, 6))
    grad = np.zeros((n, 3))
    # Torque effort is charged for every stage even past a truncation
    # point, keeping unused tail stages bounded.
    for i in range(n):
        for a_ in range(3):
            wu = 0.0
            for b_ in range(3):
                wu += w2[a_, b_] * useq[i, b_]
            cost += useq[i, a_] * wu
            grad[i, a_] += 2.0 * wu
    for i in range(m):
        si = states[i]
        e0 = si[0] - zref[i, 0]
        e1 = si[1] - zref[i, 1]
        if wrap_errors:
            e0 = _wrap(e0)
            e1 = _wrap(e1)
        we0 = w1[0, 0] * e0 + w1[0, 1] * e1
        we1 = w1[1, 0] * e0 + w1[1, 1] * e1
        stage_track = e0 * we0 + e1 * we1
        tracking += stage_track
        cost += stage_track
        lgrad_s[i, 0] += 2.0 * we0
        lgrad_s[i, 1] += 2.0 * we1

        # Angular velocity penalty.
        for a_ in range(3):
            v = abs(si[3 + a_]) - omega_bound
            if v > 0.0:
                cost += rho * v * v
                sgn = 1.0 if si[3 + a_] > 0.0 else -1.0
                lgrad_s[i, 3 + a_] += 2.0 * rho * v * sgn
                if v > max_violation:
                    max_violation = v

        # Sun exclusion penalty.
        hval, gps, gth, gph = _sun_alignment(si[0], si[1], si[2], pb, sun)
        hv = hval - cos_sun_bound
        if hv > 0.0:
            cost += rho * hv * hv
            lgrad_s[i, 0] += 2.0 * rho * hv * gps
            lgrad_s[i, 1] += 2.0 * rho * hv * gth
            lgrad_s[i, 2] += 2.0 * rho * hv * gph
            if hv > max_violation:
                max_violation = hv

    # Backward adjoint sweep.  A clean rollout has no terminal cost;
    # a truncated one charges the crossing state a guard penalty plus
    # a constant per lost stage (ordering earlier crossings as worse).
    lam = np.zeros(6)
    if m < n:
        theta_m = states[m, 1]
        v = abs(theta_m) - (pitch_guard - 0.2)
        cost += GUARD_RHO * v * v + GUARD_RHO * (n - m)
        lam[1] = 2.0 * GUARD_RHO * v * (1.0 if theta_m > 0.0 else -1.0)
    for i in range(m - 1, -1, -1):
        grad[i] += psius[i].T @ lam
        lam = lgrad_s[i] + phis[i].T @ lam

    return cost, grad.ravel(), tracking, max_violation, ok
