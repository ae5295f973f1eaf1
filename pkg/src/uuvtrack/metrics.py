"""Smoothness and convergence metrics computed from a run trace."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sim import ControllerConfig, SimTrace
from .vehicle import wrap_angle

__all__ = [
    "RunMetrics",
    "chattering_index",
    "peak_command_jump",
    "settle_time",
    "lyapunov_series",
    "compute_run_metrics",
]


def chattering_index(series: np.ndarray, dt: float) -> np.ndarray:
    """Total variation of a signal divided by its duration.

    ``series`` is (n, m) or (n,); returns the per-column index [signal/s].
    A signal that alternates between two levels every step scores the level
    gap times the sampling rate; adding a constant changes nothing.
    """
    series = np.asarray(series, dtype=float)
    if series.shape[0] < 2:
        raise ValueError("need at least two samples")
    if not dt > 0.0:
        raise ValueError("dt must be strictly positive")
    duration = (series.shape[0] - 1) * dt
    return np.abs(np.diff(series, axis=0)).sum(axis=0) / duration


def peak_command_jump(series: np.ndarray, initial: np.ndarray | None = None) -> float:
    """Largest one-step increment magnitude across all columns.

    ``initial`` optionally prepends a baseline row (e.g. the vehicle's actual
    velocity before the first command) so the start-up discontinuity counts.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    if initial is not None:
        series = np.vstack([np.asarray(initial, dtype=float).reshape(1, -1), series])
    if series.shape[0] < 2:
        return 0.0
    return float(np.abs(np.diff(series, axis=0)).max())


def settle_time(error: np.ndarray, dt: float, threshold: float = 0.1) -> float:
    """First time the error drops below the threshold and stays there.

    Returns 0.0 when it never leaves the band and inf when it never settles.
    """
    error = np.asarray(error, dtype=float)
    above = np.flatnonzero(~(error < threshold))
    if len(above) == 0:
        return 0.0
    if above[-1] == len(error) - 1:
        return math.inf
    return float((above[-1] + 1) * dt)


def lyapunov_series(trace: SimTrace, cfg: ControllerConfig,
                    transient: float = 2.0, tol: float = 1e-6):
    """Recompute both Lyapunov candidates from the raw trace columns.

    Uses the errors the controllers actually consumed (est_* columns, which
    equal the true state in noiseless runs).  Returns (v_kin, v_dyn,
    (violations_kin, violations_dyn)) where a violation is a discrete
    increase above ``tol`` between samples at or after the transient window.
    """
    e_x = trace["ref_x"] - trace["est_x"]
    e_y = trace["ref_y"] - trace["est_y"]
    e_psi = np.array([wrap_angle(a) for a in trace["ref_psi"] - trace["est_psi"]])

    ka, kb = cfg.gains.k_a, cfg.gains.k_b
    b1, b2, b3 = (ch.b for ch in cfg.kin_channels)
    b4 = np.array([ch.b for ch in cfg.dyn.bio_channels])

    v_kin = (0.5 * (e_x ** 2 + e_y ** 2 + e_psi ** 2)
             + ka / (2.0 * b1) * trace["l1"] ** 2
             + ka / (2.0 * b2) * trace["l2"] ** 2
             + kb / (2.0 * b3) * trace["l3"] ** 2)
    s = trace.columns("s_u", "s_v", "s_r")
    l4 = trace.columns("l4_x", "l4_y", "l4_n")
    v_dyn = 0.5 * (s ** 2).sum(axis=1) + (l4 ** 2 / (2.0 * b4)).sum(axis=1)

    after = trace.t[:-1] >= transient
    violations = (
        int(np.count_nonzero(np.diff(v_kin)[after] > tol)),
        int(np.count_nonzero(np.diff(v_dyn)[after] > tol)),
    )
    return v_kin, v_dyn, violations


@dataclass(frozen=True)
class RunMetrics:
    """Headline numbers for one run; chattering is per axis (surge, sway, yaw)."""

    pos_rmse: float
    heading_rmse: float
    peak_cmd_jump: float
    chattering: tuple[float, float, float]
    lyapunov_violations: int
    settle_time: float

    def as_dict(self) -> dict:
        return {
            "pos_rmse": self.pos_rmse,
            "heading_rmse": self.heading_rmse,
            "peak_cmd_jump": self.peak_cmd_jump,
            "chattering": list(self.chattering),
            "lyapunov_violations": self.lyapunov_violations,
            "settle_time": self.settle_time,
        }


def compute_run_metrics(trace: SimTrace, cfg: ControllerConfig,
                        threshold: float = 0.1, transient: float = 2.0,
                        tol: float = 1e-6) -> RunMetrics:
    """Assemble the run metrics from a trace.

    Position and heading errors are measured against the true state; the
    chattering index is computed on the applied torque; the peak command jump
    includes the step from the vehicle's initial velocity to the first
    command.
    """
    e_x = trace["ref_x"] - trace["true_x"]
    e_y = trace["ref_y"] - trace["true_y"]
    e_psi = np.array([wrap_angle(a) for a in trace["ref_psi"] - trace["true_psi"]])
    pos_err = np.hypot(e_x, e_y)

    cmds = trace.columns("cmd_u", "cmd_v", "cmd_r")
    initial_vel = trace.columns("true_u", "true_v", "true_r")[0]
    chat = chattering_index(trace.columns("tau_x", "tau_y", "tau_n"), trace.dt)

    if np.isnan(trace["lyap_kin"]).all():
        violations = 0
    else:
        _, _, (v_kin, v_dyn) = lyapunov_series(trace, cfg, transient=transient, tol=tol)
        violations = v_kin + v_dyn

    return RunMetrics(
        pos_rmse=float(np.sqrt(np.mean(pos_err ** 2))),
        heading_rmse=float(np.sqrt(np.mean(e_psi ** 2))),
        peak_cmd_jump=peak_command_jump(cmds, initial=initial_vel),
        chattering=(float(chat[0]), float(chat[1]), float(chat[2])),
        lyapunov_violations=violations,
        settle_time=settle_time(pos_err, trace.dt, threshold=threshold),
    )
