"""Horizontal-plane vehicle plant: planar kinematics plus decoupled drag dynamics.

The craft is fully actuated in surge, sway and yaw.  Each axis carries a
mass-plus-added-mass coefficient together with a linear and a quadratic drag
term, and the axes are dynamically decoupled (neutral buoyancy, no cross
terms), so the only coupling between position and velocity is the heading
rotation between the body and inertial frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

__all__ = [
    "Pose",
    "BodyVelocity",
    "Torque",
    "VehicleParams",
    "DEFAULT_PARAMS",
    "wrap_angle",
    "body_to_inertial",
    "inertial_to_body",
    "acceleration",
    "velocity_jacobian",
    "integrate_velocity",
    "plant_step",
    "kinetic_energy",
]


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    wrapped = (angle + math.pi) % TWO_PI - math.pi
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class Pose:
    """Planar position [m] and heading [rad] in the inertial frame.

    The heading is stored wrapped to (-pi, pi].
    """

    x: float
    y: float
    psi: float

    def __post_init__(self):
        object.__setattr__(self, "psi", wrap_angle(self.psi))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.psi)


@dataclass(frozen=True)
class BodyVelocity:
    """Body-frame velocity: surge u [m/s], sway v [m/s], yaw rate r [rad/s]."""

    u: float
    v: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v) and math.isfinite(self.r)):
            raise ValueError(f"velocity components must be finite, got {self!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.u, self.v, self.r)


@dataclass(frozen=True)
class Torque:
    """Control forces [N] in surge/sway and moment [N m] in yaw."""

    tau_x: float
    tau_y: float
    tau_n: float

    def __post_init__(self):
        if not (
            math.isfinite(self.tau_x)
            and math.isfinite(self.tau_y)
            and math.isfinite(self.tau_n)
        ):
            raise ValueError(f"torque components must be finite, got {self!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.tau_x, self.tau_y, self.tau_n)


@dataclass(frozen=True)
class VehicleParams:
    """Per-axis coefficients of the decoupled plant.

    ``m_*`` is mass plus added mass (kg; kg m^2 for yaw), ``d_*`` the linear
    drag and ``q_*`` the quadratic drag coefficient.  All strictly positive.
    """

    m_u: float
    m_v: float
    m_r: float
    d_u: float
    d_v: float
    d_r: float
    q_u: float
    q_v: float
    q_r: float

    def __post_init__(self):
        for name in ("m_u", "m_v", "m_r", "d_u", "d_v", "d_r", "q_u", "q_v", "q_r"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be strictly positive, got {value}")

    def scaled(self, factor: float) -> "VehicleParams":
        """Copy with every coefficient multiplied by ``factor``.

        Used for model-mismatch studies where the controller's internal model
        deliberately differs from the simulated plant.
        """
        if not factor > 0.0:
            raise ValueError("scale factor must be strictly positive")
        return VehicleParams(
            m_u=self.m_u * factor,
            m_v=self.m_v * factor,
            m_r=self.m_r * factor,
            d_u=self.d_u * factor,
            d_v=self.d_v * factor,
            d_r=self.d_r * factor,
            q_u=self.q_u * factor,
            q_v=self.q_v * factor,
            q_r=self.q_r * factor,
        )


DEFAULT_PARAMS = VehicleParams(
    m_u=54.35,
    m_v=54.35,
    m_r=1.93,
    d_u=17.51,
    d_v=17.51,
    d_r=2.4,
    q_u=10.0,
    q_v=10.0,
    q_r=2.0,
)


def body_to_inertial(psi: float, vel: BodyVelocity) -> tuple[float, float, float]:
    """Rotate a body-frame velocity into inertial pose rates (xdot, ydot, psidot)."""
    c, s = math.cos(psi), math.sin(psi)
    return (vel.u * c - vel.v * s, vel.u * s + vel.v * c, vel.r)


def inertial_to_body(psi: float, rate: tuple[float, float, float]) -> BodyVelocity:
    """Rotate inertial pose rates (xdot, ydot, psidot) into the body frame."""
    xd, yd, psid = rate
    c, s = math.cos(psi), math.sin(psi)
    return BodyVelocity(u=xd * c + yd * s, v=-xd * s + yd * c, r=psid)


def _accel(params: VehicleParams, u: float, v: float, r: float,
           tx: float, ty: float, tn: float) -> tuple[float, float, float]:
    # m*vdot + d*v + q*v|v| = tau, per axis
    du = (tx - params.d_u * u - params.q_u * u * abs(u)) / params.m_u
    dv = (ty - params.d_v * v - params.q_v * v * abs(v)) / params.m_v
    dr = (tn - params.d_r * r - params.q_r * r * abs(r)) / params.m_r
    return (du, dv, dr)


def acceleration(params: VehicleParams, vel: BodyVelocity, tau: Torque) -> tuple[float, float, float]:
    """Body-frame acceleration (udot, vdot, rdot) under the decoupled drag model."""
    return _accel(params, vel.u, vel.v, vel.r, tau.tau_x, tau.tau_y, tau.tau_n)


def velocity_jacobian(params: VehicleParams, vel: BodyVelocity) -> tuple[float, float, float]:
    """Diagonal of d(acceleration)/d(velocity); the dynamics have no cross terms.

    Per axis: -(d + 2 q |v|) / m.  Not differentiable exactly at zero speed;
    the one-sided value -d/m is returned there.
    """
    return (
        -(params.d_u + 2.0 * params.q_u * abs(vel.u)) / params.m_u,
        -(params.d_v + 2.0 * params.q_v * abs(vel.v)) / params.m_v,
        -(params.d_r + 2.0 * params.q_r * abs(vel.r)) / params.m_r,
    )


def _velocity_stages(params, u, v, r, tx, ty, tn, dt):
    """Classical 4-stage slopes and stage states for the velocity subsystem."""
    h = 0.5 * dt
    k1 = _accel(params, u, v, r, tx, ty, tn)
    s2 = (u + h * k1[0], v + h * k1[1], r + h * k1[2])
    k2 = _accel(params, s2[0], s2[1], s2[2], tx, ty, tn)
    s3 = (u + h * k2[0], v + h * k2[1], r + h * k2[2])
    k3 = _accel(params, s3[0], s3[1], s3[2], tx, ty, tn)
    s4 = (u + dt * k3[0], v + dt * k3[1], r + dt * k3[2])
    k4 = _accel(params, s4[0], s4[1], s4[2], tx, ty, tn)
    return (k1, k2, k3, k4), (s2, s3, s4)


def _combine(y0, dt, k1, k2, k3, k4):
    return y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_raw(params, state, tau, dt):
    """One RK4 step of the joint (pose, velocity) state under constant torque.

    The velocity equations do not depend on the pose, so the velocity part of
    this step is identical to integrating the velocity subsystem alone; the
    pose stages consume the matching velocity stage states.
    """
    x, y, psi, u, v, r = state
    tx, ty, tn = tau
    (k1, k2, k3, k4), (s2, s3, s4) = _velocity_stages(params, u, v, r, tx, ty, tn, dt)
    h = 0.5 * dt

    c1, sn1 = math.cos(psi), math.sin(psi)
    p1 = (u * c1 - v * sn1, u * sn1 + v * c1, r)
    psi2 = psi + h * p1[2]
    c2, sn2 = math.cos(psi2), math.sin(psi2)
    p2 = (s2[0] * c2 - s2[1] * sn2, s2[0] * sn2 + s2[1] * c2, s2[2])
    psi3 = psi + h * p2[2]
    c3, sn3 = math.cos(psi3), math.sin(psi3)
    p3 = (s3[0] * c3 - s3[1] * sn3, s3[0] * sn3 + s3[1] * c3, s3[2])
    psi4 = psi + dt * p3[2]
    c4, sn4 = math.cos(psi4), math.sin(psi4)
    p4 = (s4[0] * c4 - s4[1] * sn4, s4[0] * sn4 + s4[1] * c4, s4[2])

    return (
        _combine(x, dt, p1[0], p2[0], p3[0], p4[0]),
        _combine(y, dt, p1[1], p2[1], p3[1], p4[1]),
        wrap_angle(_combine(psi, dt, p1[2], p2[2], p3[2], p4[2])),
        _combine(u, dt, k1[0], k2[0], k3[0], k4[0]),
        _combine(v, dt, k1[1], k2[1], k3[1], k4[1]),
        _combine(r, dt, k1[2], k2[2], k3[2], k4[2]),
    )


def integrate_velocity(params: VehicleParams, vel: tuple[float, float, float],
                       tau: tuple[float, float, float], dt: float) -> tuple[float, float, float]:
    """RK4 step of the velocity subsystem alone (bit-identical to the joint step)."""
    u, v, r = vel
    (k1, k2, k3, k4), _ = _velocity_stages(params, u, v, r, tau[0], tau[1], tau[2], dt)
    return (
        _combine(u, dt, k1[0], k2[0], k3[0], k4[0]),
        _combine(v, dt, k1[1], k2[1], k3[1], k4[1]),
        _combine(r, dt, k1[2], k2[2], k3[2], k4[2]),
    )


def plant_step(params: VehicleParams, pose: Pose, vel: BodyVelocity,
               tau: Torque, dt: float) -> tuple[Pose, BodyVelocity]:
    """Advance the vehicle one fixed RK4 step with torque held constant."""
    if not dt > 0.0:
        raise ValueError("dt must be strictly positive")
    state = _step_raw(
        params,
        (pose.x, pose.y, pose.psi, vel.u, vel.v, vel.r),
        (tau.tau_x, tau.tau_y, tau.tau_n),
        dt,
    )
    return Pose(state[0], state[1], state[2]), BodyVelocity(state[3], state[4], state[5])


def kinetic_energy(params: VehicleParams, vel: BodyVelocity) -> float:
    """0.5 * (m_u u^2 + m_v v^2 + m_r r^2); drag makes this non-increasing unforced."""
    return 0.5 * (params.m_u * vel.u ** 2 + params.m_v * vel.v ** 2 + params.m_r * vel.r ** 2)
