"""Gaussian noise injection and the pose/velocity state filters.

State order is (x, y, psi, u, v, r).  The pose block is handled by a linear
Kalman filter whose prediction pushes the current estimates through the
heading rotation; the velocity block by an extended filter linearized with
the analytic per-axis drag Jacobian.  Both predictions reuse the simulator's
own RK4 step, so with all noise switched off the filter reduces to an exact
observer of the plant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .vehicle import (
    Pose,
    BodyVelocity,
    Torque,
    VehicleParams,
    _step_raw,
    integrate_velocity,
    velocity_jacobian,
    wrap_angle,
)

__all__ = [
    "NoiseConfig",
    "EstimatorState",
    "StateEstimator",
    "FilterError",
    "noise_streams",
    "inject_noise",
    "process_noise",
    "kf_pose_step",
    "ekf_velocity_step",
    "assert_psd",
]

Vec3 = tuple[float, float, float]


class FilterError(RuntimeError):
    """Innovation covariance is singular while the filter still carries uncertainty."""


@dataclass(frozen=True)
class NoiseConfig:
    """Per-step noise levels for the six state channels plus the RNG seed.

    ``q_pos``/``q_vel`` are the system-noise variances added to the true state
    each sampling step; measurement noise uses ``r_scale`` times the same
    values.  Set ``as_stddev`` to interpret the entries as standard deviations
    instead of variances.
    """

    q_pos: Vec3 = (1e-5, 1e-5, 1e-6)
    q_vel: Vec3 = (1e-3, 1e-3, 1e-4)
    r_scale: float = 10.0
    seed: int = 0
    as_stddev: bool = False

    def __post_init__(self):
        if any(q < 0.0 for q in self.q_pos) or any(q < 0.0 for q in self.q_vel):
            raise ValueError("noise levels must be non-negative")
        if not self.r_scale > 0.0:
            raise ValueError("r_scale must be strictly positive")

    def process_variances(self) -> np.ndarray:
        """System-noise variances for (x, y, psi, u, v, r)."""
        q = np.array(self.q_pos + self.q_vel, dtype=float)
        return q ** 2 if self.as_stddev else q

    def measurement_variances(self) -> np.ndarray:
        return self.r_scale * self.process_variances()


def noise_streams(cfg: NoiseConfig) -> tuple[np.random.Generator, np.random.Generator]:
    """Two independent child streams (system, measurement) split from the seed."""
    system_seq, measurement_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    return np.random.default_rng(system_seq), np.random.default_rng(measurement_seq)


def process_noise(cfg: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """One per-step system-noise increment for the six state channels."""
    return rng.standard_normal(6) * np.sqrt(cfg.process_variances())


def inject_noise(truth: np.ndarray, cfg: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """Measurement of the six-channel state: truth plus scaled Gaussian noise."""
    truth = np.asarray(truth, dtype=float)
    meas = truth + rng.standard_normal(6) * np.sqrt(cfg.measurement_variances())
    meas[2] = wrap_angle(meas[2])
    return meas


def assert_psd(cov: np.ndarray, tol: float = 1e-10) -> None:
    """Raise if the matrix is not symmetric positive semi-definite (within tol)."""
    if not np.allclose(cov, cov.T, atol=tol):
        raise AssertionError("covariance not symmetric")
    eig = np.linalg.eigvalsh(cov)
    if eig.min() < -tol:
        raise AssertionError(f"covariance indefinite: min eigenvalue {eig.min():.3g}")


def _kalman_update(mean: np.ndarray, cov: np.ndarray, meas: np.ndarray,
                   r_diag: np.ndarray, angle_index: int | None = None):
    """Measurement update with H = I, Joseph-form covariance, explicit symmetrization.

    A singular innovation covariance is tolerated only in the fully degenerate
    case (zero prediction covariance, e.g. an all-zero noise config), where the
    prediction is kept as-is; otherwise it signals misconfiguration.
    """
    R = np.diag(r_diag)
    S = cov + R
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        if not cov.any():
            # zero prediction covariance: the exact-observer limit, gain is zero
            return mean.copy(), cov.copy()
        raise FilterError("singular innovation covariance") from None
    # K = P S^-1; S symmetric so solve on the transpose side
    K = np.linalg.solve(S, cov).T
    innovation = meas - mean
    if angle_index is not None:
        innovation[angle_index] = wrap_angle(innovation[angle_index])
    new_mean = mean + K @ innovation
    if angle_index is not None:
        new_mean[angle_index] = wrap_angle(new_mean[angle_index])
    IK = np.eye(len(mean)) - K
    new_cov = IK @ cov @ IK.T + K @ R @ K.T
    new_cov = 0.5 * (new_cov + new_cov.T)
    return new_mean, new_cov


def kf_pose_step(pose_mean: np.ndarray, pose_cov: np.ndarray, meas_pose: np.ndarray,
                 vel_mean: np.ndarray, tau: Vec3, params: VehicleParams, dt: float,
                 q_pos: np.ndarray, r_pos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One predict/update cycle of the pose block.

    The prediction rotates the current velocity estimate into pose rates and
    integrates them with the same RK4 stages the plant uses (the velocity is
    advanced through the dynamics inside the step, so a noise-free filter
    tracks the plant exactly).  The transition is treated as identity for the
    covariance; the heading innovation is wrapped.
    """
    predicted = _step_raw(
        params,
        (pose_mean[0], pose_mean[1], pose_mean[2], vel_mean[0], vel_mean[1], vel_mean[2]),
        tau,
        dt,
    )
    mean_pred = np.array(predicted[:3])
    cov_pred = pose_cov + np.diag(q_pos)
    return _kalman_update(mean_pred, cov_pred, np.asarray(meas_pose, dtype=float),
                          np.asarray(r_pos, dtype=float), angle_index=2)


def ekf_velocity_step(vel_mean: np.ndarray, vel_cov: np.ndarray, meas_vel: np.ndarray,
                      tau: Vec3, params: VehicleParams, dt: float,
                      q_vel: np.ndarray, r_vel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One predict/update cycle of the velocity block.

    Prediction integrates the decoupled drag dynamics under the applied
    torque; the covariance is propagated with the analytic diagonal Jacobian
    -(d + 2 q |v|)/m per axis.
    """
    mean_pred = np.array(integrate_velocity(
        params, (vel_mean[0], vel_mean[1], vel_mean[2]), tau, dt))
    jac = velocity_jacobian(params, BodyVelocity(vel_mean[0], vel_mean[1], vel_mean[2]))
    F = np.eye(3) + dt * np.diag(jac)
    cov_pred = F @ vel_cov @ F.T + np.diag(q_vel)
    cov_pred = 0.5 * (cov_pred + cov_pred.T)
    return _kalman_update(mean_pred, cov_pred, np.asarray(meas_vel, dtype=float),
                          np.asarray(r_vel, dtype=float))


@dataclass
class EstimatorState:
    """Six-channel mean and block-diagonal 6x6 covariance."""

    mean: np.ndarray
    cov: np.ndarray


class StateEstimator:
    """Pose filter and velocity filter run side by side on the same clock.

    Initialized from the first measurement with a diagonal covariance of ten
    times the process variances.
    """

    def __init__(self, params: VehicleParams, cfg: NoiseConfig,
                 initial_measurement: np.ndarray):
        self.params = params
        q = cfg.process_variances()
        r = cfg.measurement_variances()
        self._q_pos, self._q_vel = q[:3], q[3:]
        self._r_pos, self._r_vel = r[:3], r[3:]
        mean = np.asarray(initial_measurement, dtype=float).copy()
        mean[2] = wrap_angle(mean[2])
        self.state = EstimatorState(mean=mean, cov=np.diag(10.0 * q))

    @property
    def pose(self) -> Pose:
        m = self.state.mean
        return Pose(m[0], m[1], m[2])

    @property
    def velocity(self) -> BodyVelocity:
        m = self.state.mean
        return BodyVelocity(m[3], m[4], m[5])

    def step(self, measurement: np.ndarray, tau: Vec3, dt: float,
             check: bool = False) -> EstimatorState:
        """Advance both blocks one sampling step given the applied torque."""
        measurement = np.asarray(measurement, dtype=float)
        mean, cov = self.state.mean, self.state.cov
        pose_mean, pose_cov = kf_pose_step(
            mean[:3], cov[:3, :3], measurement[:3], mean[3:], tau,
            self.params, dt, self._q_pos, self._r_pos)
        vel_mean, vel_cov = ekf_velocity_step(
            mean[3:], cov[3:, 3:], measurement[3:], tau,
            self.params, dt, self._q_vel, self._r_vel)
        new_mean = np.concatenate([pose_mean, vel_mean])
        new_cov = np.zeros((6, 6))
        new_cov[:3, :3] = pose_cov
        new_cov[3:, 3:] = vel_cov
        if check:
            assert_psd(new_cov)
        self.state = EstimatorState(mean=new_mean, cov=new_cov)
        return self.state
