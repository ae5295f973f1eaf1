"""Bounded first-order neural-dynamics filter.

Each channel obeys

    dL/dt = -a * L + (b - L) * max(e, 0) - (d + L) * max(-e, 0)

which keeps the output strictly inside (-d, b) for any input signal e while
acting as an input-dependent low-pass: the effective decay rate is a + |e|,
and for a constant input the output settles at b*e/(a+e) (e >= 0) or
d*e/(a-e) (e <= 0), preserving the input's sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ShuntingParams",
    "ShuntingState",
    "ShuntingBank",
    "StepTooLarge",
    "shunting_derivative",
    "shunting_step",
    "equilibrium",
    "RK4_RATE_LIMIT",
]

# Real-axis stability boundary of the classical 4-stage scheme is ~2.7853;
# inside it the per-step map contracts toward the (interior) equilibrium, so
# the output bound is preserved.  Kept slightly conservative.
RK4_RATE_LIMIT = 2.78


class StepTooLarge(ValueError):
    """dt too coarse for the effective decay rate a + |e|; bound not guaranteed."""


@dataclass(frozen=True)
class ShuntingParams:
    """Channel coefficients: decay rate ``a`` [1/s] and output bounds ``b``, ``d``.

    The output lives strictly inside (-d, b).  All three must be positive.
    """

    a: float
    b: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class ShuntingState:
    """Current channel output."""

    L: float = 0.0


def shunting_derivative(params: ShuntingParams, L: float, e: float) -> float:
    """Instantaneous rate of the channel output for input e."""
    exc = max(e, 0.0)
    inh = max(-e, 0.0)
    return -params.a * L + (params.b - L) * exc - (params.d + L) * inh


def equilibrium(params: ShuntingParams, e: float) -> float:
    """Steady-state output for a constant input."""
    if e >= 0.0:
        return params.b * e / (params.a + e)
    return params.d * e / (params.a - e)


def shunting_step(state: ShuntingState, params: ShuntingParams, e: float, dt: float) -> ShuntingState:
    """Advance one RK4 step with the input held constant over the step.

    Raises StepTooLarge when (a + |e|) * dt exceeds the scheme's stable range,
    and ValueError for a non-finite input or a state already out of bounds.
    """
    if not math.isfinite(e):
        raise ValueError(f"shunting input must be finite, got {e}")
    if not dt > 0.0:
        raise ValueError("dt must be strictly positive")
    if not (-params.d < state.L < params.b):
        raise ValueError(f"state {state.L} outside (-{params.d}, {params.b})")
    if (params.a + abs(e)) * dt >= RK4_RATE_LIMIT:
        raise StepTooLarge(
            f"(a + |e|) * dt = {(params.a + abs(e)) * dt:.3g} >= {RK4_RATE_LIMIT}; "
            "reduce dt"
        )
    L = state.L
    h = 0.5 * dt
    k1 = shunting_derivative(params, L, e)
    k2 = shunting_derivative(params, L + h * k1, e)
    k3 = shunting_derivative(params, L + h * k2, e)
    k4 = shunting_derivative(params, L + dt * k3, e)
    return ShuntingState(L + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


class ShuntingBank:
    """A fixed set of independent channels advanced together.

    Used for the per-axis filter triples inside the controllers and for bulk
    randomized checks; the channel coefficients may differ per channel.
    """

    def __init__(self, channels: Sequence[ShuntingParams], initial: float | np.ndarray = 0.0):
        if len(channels) == 0:
            raise ValueError("bank needs at least one channel")
        self.a = np.array([c.a for c in channels], dtype=float)
        self.b = np.array([c.b for c in channels], dtype=float)
        self.d = np.array([c.d for c in channels], dtype=float)
        self.L = np.broadcast_to(np.asarray(initial, dtype=float), self.a.shape).copy()
        if not np.all((self.L > -self.d) & (self.L < self.b)):
            raise ValueError("initial state outside (-d, b)")

    @classmethod
    def from_arrays(cls, a, b, d, initial=0.0) -> "ShuntingBank":
        bank = cls.__new__(cls)
        bank.a = np.asarray(a, dtype=float).copy()
        bank.b = np.asarray(b, dtype=float).copy()
        bank.d = np.asarray(d, dtype=float).copy()
        if not (np.all(bank.a > 0) and np.all(bank.b > 0) and np.all(bank.d > 0)):
            raise ValueError("channel coefficients must be strictly positive")
        bank.L = np.broadcast_to(np.asarray(initial, dtype=float), bank.a.shape).copy()
        if not np.all((bank.L > -bank.d) & (bank.L < bank.b)):
            raise ValueError("initial state outside (-d, b)")
        return bank

    def _derivative(self, L: np.ndarray, e: np.ndarray) -> np.ndarray:
        exc = np.maximum(e, 0.0)
        inh = np.maximum(-e, 0.0)
        return -self.a * L + (self.b - L) * exc - (self.d + L) * inh

    def step(self, e, dt: float) -> np.ndarray:
        """Advance every channel one RK4 step; returns the new outputs."""
        e = np.asarray(e, dtype=float)
        if not np.all(np.isfinite(e)):
            raise ValueError("shunting inputs must be finite")
        if not dt > 0.0:
            raise ValueError("dt must be strictly positive")
        rate = (self.a + np.abs(e)) * dt
        if np.any(rate >= RK4_RATE_LIMIT):
            worst = float(np.max(rate))
            raise StepTooLarge(
                f"(a + |e|) * dt reaches {worst:.3g} >= {RK4_RATE_LIMIT}; reduce dt"
            )
        L = self.L
        h = 0.5 * dt
        k1 = self._derivative(L, e)
        k2 = self._derivative(L + h * k1, e)
        k3 = self._derivative(L + h * k2, e)
        k4 = self._derivative(L + dt * k3, e)
        new = L + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        assert np.all((new > -self.d) & (new < self.b)), "output bound violated"
        self.L = new
        return new.copy()
