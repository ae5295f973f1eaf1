"""Closed-loop simulation harness.

One run wires a reference trajectory, the outer velocity-command loop, the
inner torque loop, a first-order actuator response and the RK4 plant into a
fixed-step loop, optionally with Gaussian noise and the state filters in the
feedback path.  Controllers are evaluated once per step (zero-order hold);
the plant is integrated inside each step with the applied torque constant.

Loop order per step: reference lookup, pose error, velocity command, torque
command, actuator response, plant integration, then noise injection and the
estimator update feeding the next step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .control_dynamic import DynamicController, DynamicGains
from .control_kinematic import (
    KinematicController,
    KinematicGains,
    ReferenceState,
    TrackingErrorInertial,
    reference_body_velocity,
)
from .estimation import NoiseConfig, StateEstimator, inject_noise, noise_streams, process_noise
from .shunting import ShuntingParams
from .vehicle import (
    BodyVelocity,
    DEFAULT_PARAMS,
    Pose,
    VehicleParams,
    _step_raw,
    wrap_angle,
)

__all__ = [
    "StraightLine",
    "Circle",
    "CustomPath",
    "ActuatorLag",
    "ControllerVariant",
    "ControllerConfig",
    "Scenario",
    "SimTrace",
    "SimulationError",
    "VARIANT_NAMES",
    "reference_at",
    "actuator_response",
    "run",
    "TRACE_COLUMNS",
    "TRACE_UNITS",
    "DIVERGENCE_LIMIT",
]

# Abort threshold for the runaway detector: no state or command should get
# anywhere near this in a sane run.
DIVERGENCE_LIMIT = 1e3


class SimulationError(RuntimeError):
    """Raised when a run diverges or an in-loop invariant fails; carries the step."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


# --------------------------------------------------------------------------
# reference trajectories

@dataclass(frozen=True)
class StraightLine:
    """Constant-velocity line with a fixed heading."""

    x0: float = 3.0
    y0: float = 0.0
    vx: float = 0.4
    vy: float = 0.4
    heading: float = math.pi / 4.0


@dataclass(frozen=True)
class Circle:
    """Counter-clockwise circle; the heading ramps with the sweep angle."""

    cx: float = 0.0
    cy: float = 7.0
    radius: float = 5.0
    rate: float = 0.1

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("radius must be strictly positive")


@dataclass(frozen=True)
class CustomPath:
    """Sampled pose table; rates come from finite differences of the samples.

    ``t`` must be strictly increasing.  Lookups outside the sampled range
    raise ValueError.  Headings are interpolated on the unwrapped samples.
    """

    t: tuple[float, ...]
    x: tuple[float, ...]
    y: tuple[float, ...]
    psi: tuple[float, ...]

    def __post_init__(self):
        n = len(self.t)
        if n < 2 or len(self.x) != n or len(self.y) != n or len(self.psi) != n:
            raise ValueError("need >= 2 samples of equal length")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise ValueError("sample times must be strictly increasing")


def _custom_tables(path: CustomPath):
    t = np.asarray(path.t, dtype=float)
    x = np.asarray(path.x, dtype=float)
    y = np.asarray(path.y, dtype=float)
    psi = np.unwrap(np.asarray(path.psi, dtype=float))
    xd = np.gradient(x, t)
    yd = np.gradient(y, t)
    psid = np.gradient(psi, t)
    return t, (x, y, psi), (xd, yd, psid)


def reference_at(trajectory, t: float) -> ReferenceState:
    """Reference pose, inertial rates and body velocity at time t.

    The analytic trajectories have constant body-frame velocity, so the body
    acceleration reported for them is zero; sampled paths get finite
    differences.
    """
    if isinstance(trajectory, StraightLine):
        tr = trajectory
        pose = Pose(tr.x0 + tr.vx * t, tr.y0 + tr.vy * t, tr.heading)
        rate = (tr.vx, tr.vy, 0.0)
        vel = reference_body_velocity(rate, tr.heading)
        return ReferenceState(pose=pose, pose_rate=rate, vel=vel, accel=(0.0, 0.0, 0.0))
    if isinstance(trajectory, Circle):
        tr = trajectory
        angle = tr.rate * t
        pose = Pose(tr.cx + tr.radius * math.cos(angle),
                    tr.cy + tr.radius * math.sin(angle),
                    angle)
        speed = tr.radius * tr.rate
        rate = (-speed * math.sin(angle), speed * math.cos(angle), tr.rate)
        vel = reference_body_velocity(rate, angle)
        return ReferenceState(pose=pose, pose_rate=rate, vel=vel, accel=(0.0, 0.0, 0.0))
    if isinstance(trajectory, CustomPath):
        t_tab, poses, rates = _custom_tables(trajectory)
        if t < t_tab[0] or t > t_tab[-1]:
            raise ValueError(f"t={t} outside sampled range [{t_tab[0]}, {t_tab[-1]}]")
        x = float(np.interp(t, t_tab, poses[0]))
        y = float(np.interp(t, t_tab, poses[1]))
        psi = float(np.interp(t, t_tab, poses[2]))
        rate = tuple(float(np.interp(t, t_tab, r)) for r in rates)
        vel = reference_body_velocity(rate, psi)
        return ReferenceState(pose=Pose(x, y, psi), pose_rate=rate, vel=vel, accel=None)
    raise TypeError(f"unknown trajectory type {type(trajectory)!r}")


# --------------------------------------------------------------------------
# actuator response

@dataclass(frozen=True)
class ActuatorLag:
    """First-order actuator response with time constant sigma [s].

    In ``ramp`` mode the applied torque is the commanded torque scaled by
    1 - exp(-(t - t_start)/sigma) with t measured from the start of the run
    (a global rise factor).  ``filter`` mode applies a conventional discrete
    first-order lag to the command instead.
    """

    sigma: float = 0.5
    t_start: float = 0.0
    mode: str = "ramp"

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be strictly positive")
        if self.mode not in ("ramp", "filter"):
            raise ValueError(f"unknown actuator mode {self.mode!r}")


def actuator_response(raw: tuple[float, float, float], lag: ActuatorLag,
                      t: float) -> tuple[float, float, float]:
    """Ramp-mode applied torque at time t: zero at t_start, approaching raw."""
    factor = 1.0 - math.exp(-max(t - lag.t_start, 0.0) / lag.sigma)
    return (raw[0] * factor, raw[1] * factor, raw[2] * factor)


# --------------------------------------------------------------------------
# controller selection and gains

KINEMATIC_LAWS = ("conv_bs", "bio_bs")
DYNAMIC_LAWS = ("sign_smc", "sat_smc", "bio_smc")


@dataclass(frozen=True)
class ControllerVariant:
    """Pairing of an outer-loop law with an inner-loop law."""

    kinematic: str
    dynamic: str

    def __post_init__(self):
        if self.kinematic not in KINEMATIC_LAWS:
            raise ValueError(f"unknown kinematic law {self.kinematic!r}")
        if self.dynamic not in DYNAMIC_LAWS:
            raise ValueError(f"unknown dynamic law {self.dynamic!r}")

    @property
    def name(self) -> str:
        return f"{self.kinematic}+{self.dynamic}"

    @classmethod
    def parse(cls, name: str) -> "ControllerVariant":
        kin, _, dyn = name.partition("+")
        if not dyn:
            raise ValueError(f"variant {name!r} must look like 'bio_bs+bio_smc'")
        return cls(kinematic=kin, dynamic=dyn)


VARIANT_NAMES = tuple(f"{k}+{d}" for k in KINEMATIC_LAWS for d in DYNAMIC_LAWS)


def _default_kin_channels() -> tuple[ShuntingParams, ShuntingParams, ShuntingParams]:
    return (ShuntingParams(4.0, 1.0, 1.0),) * 3


@dataclass(frozen=True)
class ControllerConfig:
    """Every tunable of both loops in one bundle."""

    gains: KinematicGains = field(default_factory=KinematicGains)
    dyn: DynamicGains = field(default_factory=DynamicGains)
    kin_channels: tuple[ShuntingParams, ShuntingParams, ShuntingParams] = field(
        default_factory=_default_kin_channels
    )
    feedforward: str = "corrected"
    model_scale: float = 1.0


# --------------------------------------------------------------------------
# scenario and trace

@dataclass(frozen=True)
class Scenario:
    """One closed-loop experiment: trajectory, variant, timing, noise setup."""

    trajectory: StraightLine | Circle | CustomPath
    variant: ControllerVariant = ControllerVariant("bio_bs", "bio_smc")
    initial_pose: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 0.0))
    initial_vel: BodyVelocity = field(default_factory=lambda: BodyVelocity(0.0, 0.0, 0.0))
    duration: float = 50.0
    dt: float = 0.01
    actuator: ActuatorLag = field(default_factory=ActuatorLag)
    noise: NoiseConfig | None = None
    use_estimator: bool = False

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be strictly positive")
        if self.duration < self.dt:
            raise ValueError("duration must cover at least one step")
        if self.use_estimator and self.noise is None:
            raise ValueError("estimator needs a noise config")


TRACE_COLUMNS = (
    "t",
    "ref_x", "ref_y", "ref_psi", "ref_u", "ref_v", "ref_r",
    "true_x", "true_y", "true_psi", "true_u", "true_v", "true_r",
    "meas_x", "meas_y", "meas_psi", "meas_u", "meas_v", "meas_r",
    "est_x", "est_y", "est_psi", "est_u", "est_v", "est_r",
    "cmd_u", "cmd_v", "cmd_r",
    "tau_cmd_x", "tau_cmd_y", "tau_cmd_n",
    "tau_x", "tau_y", "tau_n",
    "s_u", "s_v", "s_r",
    "l1", "l2", "l3",
    "l4_x", "l4_y", "l4_n",
    "lyap_kin", "lyap_dyn",
)

TRACE_UNITS = (
    "s",
    "m", "m", "rad", "m/s", "m/s", "rad/s",
    "m", "m", "rad", "m/s", "m/s", "rad/s",
    "m", "m", "rad", "m/s", "m/s", "rad/s",
    "m", "m", "rad", "m/s", "m/s", "rad/s",
    "m/s", "m/s", "rad/s",
    "N", "N", "N*m",
    "N", "N", "N*m",
    "m/s", "m/s", "rad/s",
    "-", "-", "-",
    "N", "N", "N*m",
    "-", "-",
)

_COL_INDEX = {name: i for i, name in enumerate(TRACE_COLUMNS)}


class SimTrace:
    """Column-addressable record of one run, one row per sampling instant.

    ``meas_*`` columns are NaN when no noise was injected; ``est_*`` columns
    duplicate the true state when the estimator was off (the controllers then
    consumed the true state directly).
    """

    def __init__(self, data: np.ndarray, dt: float, meta: dict | None = None):
        if data.ndim != 2 or data.shape[1] != len(TRACE_COLUMNS):
            raise ValueError("trace data shape does not match the column set")
        self.data = data
        self.dt = dt
        self.meta = meta

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, _COL_INDEX[name]]

    def columns(self, *names: str) -> np.ndarray:
        return self.data[:, [_COL_INDEX[n] for n in names]]

    @property
    def t(self) -> np.ndarray:
        return self["t"]


# --------------------------------------------------------------------------
# main loop

def run(scenario: Scenario, params: VehicleParams = DEFAULT_PARAMS,
        controller: ControllerConfig | None = None, *,
        diagnostics: bool = True, lyapunov: bool = True,
        meta: dict | None = None) -> SimTrace:
    """Simulate one scenario and return the full trace.

    ``diagnostics`` turns on the per-step invariant checks (filter output
    bounds are always asserted inside the controllers; this adds the
    covariance check).  ``lyapunov`` records the two candidate functions,
    which requires symmetric channel bounds (b == d); disable it to run with
    asymmetric bounds.
    """
    cfg = controller if controller is not None else ControllerConfig()
    variant = scenario.variant
    dt = scenario.dt
    n_steps = int(round(scenario.duration / dt))
    if n_steps < 1:
        raise ValueError("duration too short for one step")

    if lyapunov:
        for ch in tuple(cfg.kin_channels) + tuple(cfg.dyn.bio_channels):
            if ch.b != ch.d:
                raise ValueError(
                    "Lyapunov diagnostics require symmetric channel bounds; "
                    "pass lyapunov=False for asymmetric ones"
                )

    kin = KinematicController(
        variant.kinematic, cfg.gains,
        channels=cfg.kin_channels if variant.kinematic == "bio_bs" else None,
        feedforward=cfg.feedforward,
    )
    dyn = DynamicController(variant.dynamic, params, cfg.dyn, model_scale=cfg.model_scale)

    x, y, psi = scenario.initial_pose.x, scenario.initial_pose.y, scenario.initial_pose.psi
    u, v, r = scenario.initial_vel.u, scenario.initial_vel.v, scenario.initial_vel.r

    noise = scenario.noise
    estimator = None
    meas = (math.nan,) * 6
    if noise is not None:
        rng_sys, rng_meas = noise_streams(noise)
        meas = tuple(inject_noise(np.array([x, y, psi, u, v, r]), noise, rng_meas))
        if scenario.use_estimator:
            estimator = StateEstimator(params, noise, np.array(meas))

    # constants for the Lyapunov candidates
    ka, kb = cfg.gains.k_a, cfg.gains.k_b
    b1, b2, b3 = (ch.b for ch in cfg.kin_channels)
    b4 = tuple(ch.b for ch in cfg.dyn.bio_channels)

    lag = scenario.actuator
    alpha = 1.0 - math.exp(-dt / lag.sigma)  # filter-mode smoothing factor
    applied_prev = (0.0, 0.0, 0.0)

    data = np.empty((n_steps + 1, len(TRACE_COLUMNS)))
    for k in range(n_steps + 1):
        t = k * dt
        ref = reference_at(scenario.trajectory, t)

        if estimator is not None:
            sx, sy, spsi, su, sv, sr = (float(m) for m in estimator.state.mean)
        else:
            sx, sy, spsi, su, sv, sr = x, y, psi, u, v, r

        err = TrackingErrorInertial(
            e_x=ref.pose.x - sx, e_y=ref.pose.y - sy,
            e_psi=wrap_angle(ref.pose.psi - spsi),
        )
        cmd, (l1, l2, l3) = kin.step(err, ref, spsi, dt)
        tau_raw, diag = dyn.step(cmd.as_tuple(), (su, sv, sr), dt)

        if lag.mode == "ramp":
            tau_app = actuator_response(tau_raw, lag, t)
        else:
            tau_app = (
                applied_prev[0] + alpha * (tau_raw[0] - applied_prev[0]),
                applied_prev[1] + alpha * (tau_raw[1] - applied_prev[1]),
                applied_prev[2] + alpha * (tau_raw[2] - applied_prev[2]),
            )
            applied_prev = tau_app

        if lyapunov:
            lyap_kin = (0.5 * (err.e_x ** 2 + err.e_y ** 2 + err.e_psi ** 2)
                        + ka / (2.0 * b1) * l1 ** 2
                        + ka / (2.0 * b2) * l2 ** 2
                        + kb / (2.0 * b3) * l3 ** 2)
            s = diag.s
            L4 = diag.L4
            lyap_dyn = (0.5 * (s[0] ** 2 + s[1] ** 2 + s[2] ** 2)
                        + L4[0] ** 2 / (2.0 * b4[0])
                        + L4[1] ** 2 / (2.0 * b4[1])
                        + L4[2] ** 2 / (2.0 * b4[2]))
        else:
            lyap_kin = math.nan
            lyap_dyn = math.nan

        data[k] = (
            t,
            ref.pose.x, ref.pose.y, ref.pose.psi, ref.vel.u, ref.vel.v, ref.vel.r,
            x, y, psi, u, v, r,
            meas[0], meas[1], meas[2], meas[3], meas[4], meas[5],
            sx, sy, spsi, su, sv, sr,
            cmd.u_c, cmd.v_c, cmd.r_c,
            tau_raw[0], tau_raw[1], tau_raw[2],
            tau_app[0], tau_app[1], tau_app[2],
            diag.s[0], diag.s[1], diag.s[2],
            l1, l2, l3,
            diag.L4[0], diag.L4[1], diag.L4[2],
            lyap_kin, lyap_dyn,
        )

        # Runaway check covers physical states and what actually reaches the
        # thrusters.  The pre-lag torque is excluded on purpose: the backward
        # difference of a fast-rising velocity command produces a one-step
        # spike at large initial offsets that the actuator response absorbs.
        worst = max(abs(x), abs(y), abs(u), abs(v), abs(r),
                    abs(cmd.u_c), abs(cmd.v_c), abs(cmd.r_c),
                    abs(tau_app[0]), abs(tau_app[1]), abs(tau_app[2]))
        if not worst < DIVERGENCE_LIMIT:
            raise SimulationError(
                f"run diverged: a state or command reached {worst:.3g}", k)

        if k == n_steps:
            break

        x, y, psi, u, v, r = _step_raw(params, (x, y, psi, u, v, r), tau_app, dt)
        if noise is not None:
            w = process_noise(noise, rng_sys)
            x, y, psi = x + w[0], y + w[1], wrap_angle(psi + w[2])
            u, v, r = u + w[3], v + w[4], r + w[5]
            meas = tuple(inject_noise(np.array([x, y, psi, u, v, r]), noise, rng_meas))
            if estimator is not None:
                estimator.step(np.array(meas), tau_app, dt, check=diagnostics)

    return SimTrace(data, dt=dt, meta=meta)
