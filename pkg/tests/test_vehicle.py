import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uuvtrack.vehicle import (
    DEFAULT_PARAMS,
    BodyVelocity,
    Pose,
    Torque,
    VehicleParams,
    acceleration,
    body_to_inertial,
    inertial_to_body,
    integrate_velocity,
    kinetic_energy,
    plant_step,
    velocity_jacobian,
    wrap_angle,
)

angles = st.floats(min_value=-50.0, max_value=50.0,
                   allow_nan=False, allow_infinity=False)
vels = st.floats(min_value=-5.0, max_value=5.0,
                 allow_nan=False, allow_infinity=False)


@given(angles)
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    # wrapping must not change the direction
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_wrap_angle_boundary():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.0) == 0.0


@given(vels, vels, vels, angles)
def test_frame_round_trip(u, v, r, psi):
    vel = BodyVelocity(u, v, r)
    back = inertial_to_body(psi, body_to_inertial(psi, vel))
    assert np.allclose([back.u, back.v, back.r], [u, v, r], atol=1e-12)


def test_rotation_preserves_speed():
    vel = BodyVelocity(0.3, -0.4, 0.7)
    rate = body_to_inertial(1.234, vel)
    assert math.hypot(rate[0], rate[1]) == pytest.approx(0.5)
    assert rate[2] == 0.7  # yaw rate passes straight through


def test_pose_wraps_heading():
    p = Pose(0.0, 0.0, 3 * math.pi)
    assert p.psi == pytest.approx(math.pi)


def test_params_validate():
    with pytest.raises(ValueError):
        VehicleParams(m_u=0.0, m_v=54.35, m_r=1.93,
                      d_u=17.51, d_v=17.51, d_r=2.4,
                      q_u=10.0, q_v=10.0, q_r=2.0)


def test_params_scaled():
    p = DEFAULT_PARAMS.scaled(1.1)
    assert p.m_u == pytest.approx(54.35 * 1.1)
    assert p.q_r == pytest.approx(2.2)


def test_velocity_finite_check():
    with pytest.raises(ValueError):
        BodyVelocity(float("nan"), 0.0, 0.0)
    with pytest.raises(ValueError):
        Torque(0.0, float("inf"), 0.0)


# acceleration oracle: du/dt = -(d_u*u + q_u*u|u|)/m_u at u=1 for the stock
# coefficients => -(17.51 + 10)/54.35
def test_acceleration_surge_drag():
    acc = acceleration(DEFAULT_PARAMS, BodyVelocity(1.0, 0.0, 0.0),
                       Torque(0.0, 0.0, 0.0))
    assert acc[0] == pytest.approx(-27.51 / 54.35, abs=1e-12)
    assert acc[0] == pytest.approx(-0.506164, abs=1e-6)
    assert acc[1] == 0.0 and acc[2] == 0.0


def test_acceleration_yaw_drag():
    acc = acceleration(DEFAULT_PARAMS, BodyVelocity(0.0, 0.0, 0.5),
                       Torque(0.0, 0.0, 0.0))
    assert acc[2] == pytest.approx(-(2.4 * 0.5 + 2.0 * 0.25) / 1.93, abs=1e-12)
    assert acc[2] == pytest.approx(-0.88083, abs=5e-6)


def test_acceleration_odd_in_velocity():
    # quadratic drag uses v|v|, so the decel flips sign with the velocity
    f = acceleration(DEFAULT_PARAMS, BodyVelocity(0.8, 0.0, 0.0), Torque(0, 0, 0))
    b = acceleration(DEFAULT_PARAMS, BodyVelocity(-0.8, 0.0, 0.0), Torque(0, 0, 0))
    assert f[0] == pytest.approx(-b[0], abs=1e-12)


def test_torque_balance_steady_state():
    # tau chosen to exactly cancel drag keeps the velocity fixed
    u = 0.9
    tau_x = DEFAULT_PARAMS.d_u * u + DEFAULT_PARAMS.q_u * u * abs(u)
    vel = integrate_velocity(DEFAULT_PARAMS, (u, 0.0, 0.0),
                             (tau_x, 0.0, 0.0), 0.01)
    assert vel[0] == pytest.approx(u, abs=1e-12)


def test_velocity_jacobian_matches_central_difference():
    rng = np.random.default_rng(3)
    for _ in range(100):
        v = rng.uniform(-2.0, 2.0, 3)
        jac = velocity_jacobian(DEFAULT_PARAMS, BodyVelocity(*v))
        h = 1e-6
        for i in range(3):
            vp, vm = v.copy(), v.copy()
            vp[i] += h
            vm[i] -= h
            ap = acceleration(DEFAULT_PARAMS, BodyVelocity(*vp), Torque(0, 0, 0))[i]
            am = acceleration(DEFAULT_PARAMS, BodyVelocity(*vm), Torque(0, 0, 0))[i]
            fd = (ap - am) / (2 * h)
            assert jac[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_speed_decays_without_torque():
    vel = BodyVelocity(1.0, 1.0, 0.5)
    pose = Pose(0.0, 0.0, 0.0)
    prev = kinetic_energy(DEFAULT_PARAMS, vel)
    for _ in range(200):
        pose, vel = plant_step(DEFAULT_PARAMS, pose, vel, Torque(0, 0, 0), 0.01)
        e = kinetic_energy(DEFAULT_PARAMS, vel)
        assert e < prev
        prev = e


def test_rk4_matches_fine_euler_short():
    """2 s open-loop decay, RK4 at 0.01 vs explicit Euler at 1e-5."""
    p = DEFAULT_PARAMS
    pose, vel = Pose(0.0, 0.0, 0.0), BodyVelocity(1.0, 1.0, 0.5)
    for _ in range(200):
        pose, vel = plant_step(p, pose, vel, Torque(0, 0, 0), 0.01)

    h = 1e-5
    x = y = psi = 0.0
    u, v, r = 1.0, 1.0, 0.5
    for _ in range(200_000):
        c, s = math.cos(psi), math.sin(psi)
        x += h * (u * c - v * s)
        y += h * (u * s + v * c)
        psi += h * r
        u += h * (-(p.d_u * u + p.q_u * u * abs(u)) / p.m_u)
        v += h * (-(p.d_v * v + p.q_v * v * abs(v)) / p.m_v)
        r += h * (-(p.d_r * r + p.q_r * r * abs(r)) / p.m_r)

    assert abs(pose.x - x) < 1e-5
    assert abs(pose.y - y) < 1e-5
    assert abs(pose.psi - psi) < 1e-5
    assert abs(vel.u - u) < 1e-5
    assert abs(vel.v - v) < 1e-5
    assert abs(vel.r - r) < 1e-5


def test_plant_step_rejects_zero_dt():
    pose, vel = Pose(1.0, 2.0, 0.3), BodyVelocity(0.5, -0.2, 0.1)
    with pytest.raises(ValueError):
        plant_step(DEFAULT_PARAMS, pose, vel, Torque(1.0, 1.0, 0.1), 0.0)
