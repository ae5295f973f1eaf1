"""Inner-loop torque laws built on a PID-like sliding variable.

Per axis the sliding variable is s = edot + 2*gamma*e + gamma^2 * int(e),
where e is the velocity-command tracking error.  A model-based equivalent
torque cancels drag and supplies the commanded acceleration; the variants
differ only in the reaching term added on top:

    sign        k * sgn(s)                  (discontinuous, chatters)
    saturation  clip(slope * s, -lo, hi)    (bounded ramp)
    bioinspired shunting channel driven by s (bounded and smooth)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .shunting import ShuntingBank, ShuntingParams
from .vehicle import VehicleParams

__all__ = [
    "DynamicGains",
    "DynamicController",
    "sliding_surface",
    "tau_equivalent",
    "smc_sign",
    "smc_saturation",
    "smc_bioinspired",
]

Vec3 = tuple[float, float, float]


def _default_bio_channels() -> tuple[ShuntingParams, ShuntingParams, ShuntingParams]:
    return (ShuntingParams(3.0, 1.0, 1.0),) * 3


@dataclass(frozen=True)
class DynamicGains:
    """Gains shared by the torque laws.

    ``gamma`` shapes the sliding variable, ``k_s`` scales the error-rate term
    of the equivalent torque, ``k_switch`` is the per-axis sign gain,
    ``sat_slope`` with ``sat_upper``/``sat_lower`` defines the clipped ramp,
    and ``bio_channels`` configures the per-axis shunting reaching term.
    """

    gamma: float = 1.0
    k_s: float = 1.0
    k_switch: Vec3 = (2.0, 2.0, 0.2)
    sat_slope: float = 3.0
    sat_upper: Vec3 = (1.0, 1.0, 0.03)
    sat_lower: Vec3 = (1.0, 1.0, 0.03)
    bio_channels: tuple[ShuntingParams, ShuntingParams, ShuntingParams] = field(
        default_factory=_default_bio_channels
    )

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError("gamma must be strictly positive")
        if self.k_s < 0.0 or self.sat_slope < 0.0 or any(k < 0.0 for k in self.k_switch):
            raise ValueError("gains must be non-negative")
        if any(b <= 0.0 for b in self.sat_upper) or any(b <= 0.0 for b in self.sat_lower):
            raise ValueError("saturation bounds must be strictly positive")


def sliding_surface(e: Vec3, e_dot: Vec3, e_int: Vec3, gamma: float) -> Vec3:
    """Per-axis sliding variable edot + 2*gamma*e + gamma^2 * int(e)."""
    g2 = gamma * gamma
    return (
        e_dot[0] + 2.0 * gamma * e[0] + g2 * e_int[0],
        e_dot[1] + 2.0 * gamma * e[1] + g2 * e_int[1],
        e_dot[2] + 2.0 * gamma * e[2] + g2 * e_int[2],
    )


def tau_equivalent(params: VehicleParams, v_actual: Vec3, vc_dot: Vec3,
                   e: Vec3, e_dot: Vec3, gains: DynamicGains) -> Vec3:
    """Model-based torque: commanded acceleration plus full drag compensation.

    Per axis m*(vc_dot + k_s*e_dot/(2*gamma) + gamma*e/2) + d*v + q*v|v|.
    """
    g = gains.gamma
    ks = gains.k_s
    u, v, r = v_actual
    return (
        params.m_u * (vc_dot[0] + ks * e_dot[0] / (2.0 * g) + 0.5 * g * e[0])
        + params.d_u * u + params.q_u * u * abs(u),
        params.m_v * (vc_dot[1] + ks * e_dot[1] / (2.0 * g) + 0.5 * g * e[1])
        + params.d_v * v + params.q_v * v * abs(v),
        params.m_r * (vc_dot[2] + ks * e_dot[2] / (2.0 * g) + 0.5 * g * e[2])
        + params.d_r * r + params.q_r * r * abs(r),
    )


def _sgn(x: float) -> float:
    # exact zero maps to zero
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def smc_sign(tau_eq: Vec3, s: Vec3, k: Vec3) -> Vec3:
    """Discontinuous reaching term k * sgn(s) on top of the equivalent torque."""
    return (
        tau_eq[0] + k[0] * _sgn(s[0]),
        tau_eq[1] + k[1] * _sgn(s[1]),
        tau_eq[2] + k[2] * _sgn(s[2]),
    )


def smc_saturation(tau_eq: Vec3, s: Vec3, slope: float,
                   upper: Vec3, lower: Vec3) -> Vec3:
    """Clipped-ramp reaching term clip(slope * s, -lower, upper) per axis."""
    out = []
    for i in range(3):
        add = slope * s[i]
        if add > upper[i]:
            add = upper[i]
        elif add < -lower[i]:
            add = -lower[i]
        out.append(tau_eq[i] + add)
    return (out[0], out[1], out[2])


def smc_bioinspired(tau_eq: Vec3, bank: ShuntingBank, s: Vec3,
                    dt: float) -> tuple[Vec3, np.ndarray]:
    """Shunting reaching term: advance each axis channel with input s_i, add the result.

    Returns the torque and the channel outputs that were added.
    """
    L = bank.step(np.asarray(s, dtype=float), dt)
    return (tau_eq[0] + L[0], tau_eq[1] + L[1], tau_eq[2] + L[2]), L


@dataclass
class DynamicDiag:
    """Per-step internals surfaced for tracing."""

    s: Vec3
    L4: Vec3
    e: Vec3


class DynamicController:
    """Stateful torque law: keeps the error integral and backward differences.

    The error rate, the command rate and the error integral all start at zero
    on the first call so there is no artificial spike at t = 0.
    """

    LAWS = ("sign_smc", "sat_smc", "bio_smc")

    def __init__(self, law: str, params: VehicleParams, gains: DynamicGains,
                 model_scale: float = 1.0):
        if law not in self.LAWS:
            raise ValueError(f"unknown dynamic law {law!r}")
        self.law = law
        self.gains = gains
        self.model = params if model_scale == 1.0 else params.scaled(model_scale)
        self.bank = ShuntingBank(gains.bio_channels) if law == "bio_smc" else None
        self._prev_e: Vec3 | None = None
        self._prev_cmd: Vec3 | None = None
        self._e_int = (0.0, 0.0, 0.0)

    def step(self, v_cmd: Vec3, v_actual: Vec3, dt: float) -> tuple[Vec3, DynamicDiag]:
        e = (v_cmd[0] - v_actual[0], v_cmd[1] - v_actual[1], v_cmd[2] - v_actual[2])
        if self._prev_e is None:
            e_dot = (0.0, 0.0, 0.0)
            vc_dot = (0.0, 0.0, 0.0)
        else:
            pe, pc = self._prev_e, self._prev_cmd
            e_dot = ((e[0] - pe[0]) / dt, (e[1] - pe[1]) / dt, (e[2] - pe[2]) / dt)
            vc_dot = ((v_cmd[0] - pc[0]) / dt, (v_cmd[1] - pc[1]) / dt, (v_cmd[2] - pc[2]) / dt)
            self._e_int = (
                self._e_int[0] + 0.5 * dt * (e[0] + pe[0]),
                self._e_int[1] + 0.5 * dt * (e[1] + pe[1]),
                self._e_int[2] + 0.5 * dt * (e[2] + pe[2]),
            )
        s = sliding_surface(e, e_dot, self._e_int, self.gains.gamma)
        tau_eq = tau_equivalent(self.model, v_actual, vc_dot, e, e_dot, self.gains)
        if self.law == "sign_smc":
            tau = smc_sign(tau_eq, s, self.gains.k_switch)
            L4 = (0.0, 0.0, 0.0)
        elif self.law == "sat_smc":
            tau = smc_saturation(tau_eq, s, self.gains.sat_slope,
                                 self.gains.sat_upper, self.gains.sat_lower)
            L4 = (0.0, 0.0, 0.0)
        else:
            tau, L = smc_bioinspired(tau_eq, self.bank, s, dt)
            L4 = (float(L[0]), float(L[1]), float(L[2]))
        self._prev_e = e
        self._prev_cmd = v_cmd
        return tau, DynamicDiag(s=s, L4=L4, e=e)
