"""Shared closed-loop runs, cached once per session.

The full scenarios dominate test wall time, so anything that needs a preset
run pulls it from here instead of resimulating.
"""
from __future__ import annotations

import pytest

from uuvtrack.cli import preset_config, run_from_config
from uuvtrack.sim import ActuatorLag, ControllerVariant, Scenario, reference_at, run


def _preset_run(preset: str, variant: str, seed: int = 0):
    cfg = preset_config(preset)
    cfg["controller"]["variant"] = variant
    cfg["seed"] = seed
    return run_from_config(cfg)


@pytest.fixture(scope="session")
def straight_traces():
    """Straight preset under each dynamic law (bio kinematic) plus the
    conventional stack; values are (trace, controller_config)."""
    names = ["bio_bs+bio_smc", "bio_bs+sign_smc", "bio_bs+sat_smc",
             "conv_bs+sign_smc"]
    return {n: _preset_run("straight", n) for n in names}


@pytest.fixture(scope="session")
def circle_traces():
    names = ["bio_bs+bio_smc", "bio_bs+sign_smc", "bio_bs+sat_smc"]
    return {n: _preset_run("circle", n) for n in names}


@pytest.fixture(scope="session")
def noisy_circle_traces():
    """Noisy circle with the filters on: proposed stack vs the conventional
    baseline, same seed so the noise realizations match."""
    names = ["bio_bs+bio_smc", "conv_bs+sat_smc"]
    return {n: _preset_run("circle_noisy", n, seed=0) for n in names}


@pytest.fixture(scope="session")
def lyapunov_traces():
    """Noiseless diagnostic runs for the Lyapunov monotonicity check: start on
    the reference with matched body velocity and a negligible actuator time
    constant, so the only transient left is the discretization one."""
    from uuvtrack.sim import Circle, StraightLine

    out = {}
    for name, traj, dur in [("straight", StraightLine(), 50.0),
                            ("circle", Circle(), 80.0)]:
        ref = reference_at(traj, 0.0)
        sc = Scenario(trajectory=traj,
                      variant=ControllerVariant.parse("bio_bs+bio_smc"),
                      initial_pose=ref.pose, initial_vel=ref.vel,
                      duration=dur, actuator=ActuatorLag(sigma=1e-9))
        out[name] = run(sc)
    return out
