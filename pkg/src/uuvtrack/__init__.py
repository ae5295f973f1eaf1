"""Trajectory-tracking control testbed for a horizontal-plane underwater vehicle.

Compares plain backstepping and sliding-mode tracking controllers against
variants whose error signals pass through bounded shunting filters, which
removes start-up velocity jumps and torque chattering.
"""

from .vehicle import (
    Pose,
    BodyVelocity,
    Torque,
    VehicleParams,
    DEFAULT_PARAMS,
    wrap_angle,
    body_to_inertial,
    inertial_to_body,
    acceleration,
    velocity_jacobian,
    plant_step,
)
from .shunting import ShuntingParams, ShuntingState, ShuntingBank, StepTooLarge, shunting_step
from .control_kinematic import (
    KinematicGains,
    ReferenceState,
    TrackingErrorInertial,
    TrackingErrorBody,
    VelocityCommand,
    reference_body_velocity,
    inertial_error,
    body_error,
    backstepping_conventional,
    backstepping_bioinspired,
)
from .control_dynamic import (
    DynamicGains,
    sliding_surface,
    tau_equivalent,
    smc_sign,
    smc_saturation,
    smc_bioinspired,
)
from .estimation import (
    NoiseConfig,
    StateEstimator,
    FilterError,
    inject_noise,
    kf_pose_step,
    ekf_velocity_step,
)
from .sim import (
    StraightLine,
    Circle,
    CustomPath,
    ActuatorLag,
    ControllerVariant,
    ControllerConfig,
    Scenario,
    SimTrace,
    SimulationError,
    reference_at,
    run,
)
from .metrics import (
    RunMetrics,
    chattering_index,
    peak_command_jump,
    settle_time,
    lyapunov_series,
    compute_run_metrics,
)

__version__ = "0.1.0"
