"""Outer-loop velocity command laws.

Both laws steer the vehicle toward a reference pose by commanding body-frame
velocities.  The plain backstepping law feeds the raw tracking errors through
proportional gains, which produces a large initial speed command when the
vehicle starts far from the reference.  The filtered variant routes each
error through a bounded shunting channel first, capping the error-feedback
contribution by construction and removing the start-up jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .shunting import ShuntingBank, ShuntingParams
from .vehicle import BodyVelocity, Pose, wrap_angle

__all__ = [
    "KinematicGains",
    "TrackingErrorInertial",
    "TrackingErrorBody",
    "VelocityCommand",
    "ReferenceState",
    "reference_body_velocity",
    "inertial_error",
    "body_error",
    "backstepping_conventional",
    "backstepping_bioinspired",
    "KinematicController",
    "FEEDFORWARD_MODES",
]

# "corrected": heading-error feedforward rotates the reference velocity into
# the current body frame, u_c <- u_r cos(e_psi) - v_r sin(e_psi).  The
# "as_printed" variant swaps sine and cosine in the surge line, reproducing a
# formulation that does not reduce to u_c = u_r at zero error.
FEEDFORWARD_MODES = ("corrected", "as_printed")


@dataclass(frozen=True)
class KinematicGains:
    """Proportional gains on position error (k_a, 1/s) and heading error (k_b, 1/s)."""

    k_a: float = 2.0
    k_b: float = 1.0

    def __post_init__(self):
        if not (self.k_a > 0.0 and self.k_b > 0.0):
            raise ValueError("kinematic gains must be strictly positive")


@dataclass(frozen=True)
class TrackingErrorInertial:
    """Reference-minus-actual pose error in the inertial frame; e_psi wrapped."""

    e_x: float
    e_y: float
    e_psi: float

    def __post_init__(self):
        object.__setattr__(self, "e_psi", wrap_angle(self.e_psi))


@dataclass(frozen=True)
class TrackingErrorBody:
    """Pose error rotated into the body frame (e1 forward, e2 lateral, e3 heading)."""

    e1: float
    e2: float
    e3: float


@dataclass(frozen=True)
class VelocityCommand:
    """Commanded body-frame velocities."""

    u_c: float
    v_c: float
    r_c: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.u_c, self.v_c, self.r_c)


@dataclass(frozen=True)
class ReferenceState:
    """Reference pose, its inertial rates, and the matching body velocity.

    ``accel`` optionally carries the body-frame reference acceleration for
    diagnostics; the built-in trajectories have constant body velocity, so it
    is zero there.
    """

    pose: Pose
    pose_rate: tuple[float, float, float]
    vel: BodyVelocity
    accel: tuple[float, float, float] | None = None


def reference_body_velocity(pose_rate: tuple[float, float, float], psi_r: float) -> BodyVelocity:
    """Rotate reference inertial rates (xdot, ydot, psidot) into the reference body frame."""
    xd, yd, psid = pose_rate
    c, s = math.cos(psi_r), math.sin(psi_r)
    return BodyVelocity(u=xd * c + yd * s, v=-xd * s + yd * c, r=psid)


def inertial_error(pose: Pose, pose_r: Pose) -> TrackingErrorInertial:
    """Reference-minus-actual pose error; the heading component is wrapped."""
    return TrackingErrorInertial(
        e_x=pose_r.x - pose.x,
        e_y=pose_r.y - pose.y,
        e_psi=wrap_angle(pose_r.psi - pose.psi),
    )


def body_error(pose: Pose, pose_r: Pose) -> TrackingErrorBody:
    """Pose error expressed in the vehicle's body frame."""
    err = inertial_error(pose, pose_r)
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    return TrackingErrorBody(
        e1=err.e_x * c + err.e_y * s,
        e2=-err.e_x * s + err.e_y * c,
        e3=err.e_psi,
    )


def _feedforward(ref: ReferenceState, e_psi: float, mode: str) -> tuple[float, float]:
    ce, se = math.cos(e_psi), math.sin(e_psi)
    u_r, v_r = ref.vel.u, ref.vel.v
    if mode == "corrected":
        return (u_r * ce - v_r * se, u_r * se + v_r * ce)
    if mode == "as_printed":
        # sine/cosine swapped in the surge line only
        return (u_r * se - v_r * ce, u_r * se + v_r * ce)
    raise ValueError(f"unknown feedforward mode {mode!r}")


def backstepping_conventional(err: TrackingErrorInertial, ref: ReferenceState,
                              psi: float, gains: KinematicGains,
                              feedforward: str = "corrected") -> VelocityCommand:
    """Velocity command from raw proportional error feedback plus feedforward.

    The position error is rotated into the body frame and scaled by k_a; the
    command magnitude is unbounded in the initial error, hence the start-up
    speed jump this law is known for.
    """
    c, s = math.cos(psi), math.sin(psi)
    ff_u, ff_v = _feedforward(ref, err.e_psi, feedforward)
    return VelocityCommand(
        u_c=gains.k_a * (err.e_x * c + err.e_y * s) + ff_u,
        v_c=gains.k_a * (-err.e_x * s + err.e_y * c) + ff_v,
        r_c=ref.vel.r + gains.k_b * err.e_psi,
    )


def backstepping_bioinspired(L1: float, L2: float, L3: float, ref: ReferenceState,
                             psi: float, gains: KinematicGains,
                             bounds: tuple[float, float, float] | None = None,
                             feedforward: str = "corrected") -> VelocityCommand:
    """Velocity command with shunting-filtered errors in place of the raw ones.

    L1, L2, L3 are the filter outputs driven by (e_x, e_y, e_psi).  When the
    channel bounds (b1, b2, b3) are supplied, the error-feedback portion is
    asserted to stay strictly below k_a*(b1+b2) in surge/sway and k_b*b3 in
    yaw, which is what eliminates the speed jump.
    """
    c, s = math.cos(psi), math.sin(psi)
    fb_u = gains.k_a * (L1 * c + L2 * s)
    fb_v = gains.k_a * (-L1 * s + L2 * c)
    fb_r = gains.k_b * L3
    if bounds is not None:
        b1, b2, b3 = bounds
        limit_uv = gains.k_a * (b1 + b2)
        assert abs(fb_u) < limit_uv and abs(fb_v) < limit_uv, "surge/sway feedback bound violated"
        assert abs(fb_r) < gains.k_b * b3, "yaw feedback bound violated"
    e_psi = wrap_angle(ref.pose.psi - psi)
    ff_u, ff_v = _feedforward(ref, e_psi, feedforward)
    return VelocityCommand(
        u_c=fb_u + ff_u,
        v_c=fb_v + ff_v,
        r_c=ref.vel.r + fb_r,
    )


class KinematicController:
    """Stateful wrapper used by the simulation loop.

    The filtered law computes the command from the current channel outputs and
    only then advances them with the step's errors, so the very first command
    contains pure feedforward.
    """

    def __init__(self, law: str, gains: KinematicGains,
                 channels: tuple[ShuntingParams, ShuntingParams, ShuntingParams] | None = None,
                 feedforward: str = "corrected"):
        if law not in ("conv_bs", "bio_bs"):
            raise ValueError(f"unknown kinematic law {law!r}")
        if feedforward not in FEEDFORWARD_MODES:
            raise ValueError(f"unknown feedforward mode {feedforward!r}")
        self.law = law
        self.gains = gains
        self.feedforward = feedforward
        self.bank = None
        self.bounds = None
        if law == "bio_bs":
            if channels is None or len(channels) != 3:
                raise ValueError("bio_bs needs three shunting channels")
            self.bank = ShuntingBank(channels)
            self.bounds = (channels[0].b, channels[1].b, channels[2].b)

    def step(self, err: TrackingErrorInertial, ref: ReferenceState, psi: float,
             dt: float) -> tuple[VelocityCommand, tuple[float, float, float]]:
        """Return the command plus the filter outputs it was computed from."""
        if self.law == "conv_bs":
            cmd = backstepping_conventional(err, ref, psi, self.gains, self.feedforward)
            return cmd, (0.0, 0.0, 0.0)
        L1, L2, L3 = (float(v) for v in self.bank.L)
        cmd = backstepping_bioinspired(
            L1, L2, L3, ref, psi, self.gains,
            bounds=self.bounds, feedforward=self.feedforward,
        )
        self.bank.step(np.array([err.e_x, err.e_y, err.e_psi]), dt)
        return cmd, (L1, L2, L3)
