import math

import numpy as np
import pytest

from uuvtrack.estimation import (
    FilterError,
    NoiseConfig,
    StateEstimator,
    assert_psd,
    ekf_velocity_step,
    inject_noise,
    kf_pose_step,
    noise_streams,
    process_noise,
)
from uuvtrack.vehicle import (
    DEFAULT_PARAMS,
    BodyVelocity,
    acceleration,
    velocity_jacobian,
)


def test_noise_config_variances():
    cfg = NoiseConfig()
    assert np.allclose(cfg.process_variances(), [1e-5, 1e-5, 1e-6, 1e-3, 1e-3, 1e-4])
    assert np.allclose(cfg.measurement_variances(),
                       10.0 * np.asarray(cfg.process_variances()))


def test_noise_config_stddev_mode():
    cfg = NoiseConfig(q_pos=(0.1, 0.1, 0.01), q_vel=(0.2, 0.2, 0.02),
                      as_stddev=True)
    assert np.allclose(cfg.process_variances(),
                       np.array([0.1, 0.1, 0.01, 0.2, 0.2, 0.02]) ** 2)


def test_streams_are_independent_and_reproducible():
    cfg = NoiseConfig(seed=42)
    sys1, meas1 = noise_streams(cfg)
    sys2, meas2 = noise_streams(cfg)
    a, b = sys1.standard_normal(4), sys2.standard_normal(4)
    assert np.array_equal(a, b)
    # the two streams must not mirror each other
    assert not np.array_equal(sys1.standard_normal(4), meas1.standard_normal(4))


def test_process_noise_scales_with_variance():
    cfg = NoiseConfig(seed=1)
    rng, _ = noise_streams(cfg)
    draws = np.array([process_noise(cfg, rng) for _ in range(4000)])
    var = draws.var(axis=0)
    expect = np.asarray(cfg.process_variances())
    assert np.allclose(var, expect, rtol=0.15)


def test_inject_noise_wraps_heading():
    cfg = NoiseConfig(q_pos=(0.0, 0.0, 1.0), q_vel=(0.0, 0.0, 0.0),
                      r_scale=1.0, as_stddev=True, seed=9)
    _, rng = noise_streams(cfg)
    truth = np.array([0.0, 0.0, math.pi - 1e-3, 0.0, 0.0, 0.0])
    for _ in range(200):
        m = inject_noise(truth, cfg, rng)
        assert -math.pi < m[2] <= math.pi


def test_assert_psd_rejects_indefinite():
    with pytest.raises(AssertionError):
        assert_psd(np.diag([1.0, -0.5, 1.0]))
    with pytest.raises(AssertionError):
        assert_psd(np.array([[1.0, 0.5], [0.2, 1.0]]))  # asymmetric
    assert_psd(np.eye(3))  # no raise


def test_ekf_jacobian_matches_finite_differences():
    rng = np.random.default_rng(23)
    for _ in range(100):
        v = rng.uniform(-2.0, 2.0, 3)
        jac = velocity_jacobian(DEFAULT_PARAMS, BodyVelocity(*v))
        for i in range(3):
            h = 1e-6
            vp, vm = v.copy(), v.copy()
            vp[i] += h
            vm[i] -= h
            from uuvtrack.vehicle import Torque
            fp = acceleration(DEFAULT_PARAMS, BodyVelocity(*vp), Torque(0, 0, 0))[i]
            fm = acceleration(DEFAULT_PARAMS, BodyVelocity(*vm), Torque(0, 0, 0))[i]
            fd = (fp - fm) / (2.0 * h)
            assert abs(jac[i] - fd) <= 1e-6 * max(1.0, abs(fd))


def test_ekf_jacobian_hand_value():
    # -(d_u + 2*q_u*|u|)/m_u at u=1
    jac = velocity_jacobian(DEFAULT_PARAMS, BodyVelocity(1.0, 0.0, 0.0))
    assert jac[0] == pytest.approx(-(17.51 + 20.0) / 54.35, abs=1e-12)
    assert jac[0] == pytest.approx(-0.690156, abs=1e-6)


def test_kf_pose_step_reduces_error():
    """With informative measurements the posterior sits between the (wrong)
    prediction and the measurement."""
    q = np.array([1e-5, 1e-5, 1e-6])
    r = 10.0 * q
    cov = np.diag(10.0 * q)
    mean = np.array([0.0, 0.0, 0.0])
    vel = np.array([0.5, 0.0, 0.0])
    meas = np.array([0.02, 0.0, 0.0])
    new_mean, new_cov = kf_pose_step(mean, cov, meas, vel, (0, 0, 0),
                                     DEFAULT_PARAMS, 0.01, q, r)
    pred_x = 0.005  # 0.5 m/s over one step
    assert pred_x < new_mean[0] < meas[0]
    assert_psd(new_cov)
    assert new_cov[0, 0] < cov[0, 0] + q[0]


def test_kf_innovation_wraps_heading():
    q = np.array([1e-6, 1e-6, 1e-6])
    r = np.array([1e-2, 1e-2, 1e-2])
    cov = np.eye(3) * 1.0
    mean = np.array([0.0, 0.0, math.pi - 0.05])
    # measurement just across the wrap line: the filter must pull the heading
    # forward through pi, not backwards through zero
    meas = np.array([0.0, 0.0, -math.pi + 0.05])
    new_mean, _ = kf_pose_step(mean, cov, meas, np.zeros(3), (0, 0, 0),
                               DEFAULT_PARAMS, 0.01, q, r)
    assert abs(new_mean[2]) > math.pi - 0.06


def test_ekf_velocity_step_tracks_decay():
    q = np.array([1e-3, 1e-3, 1e-4])
    r = 10.0 * q
    cov = np.diag(10.0 * q)
    mean = np.array([1.0, 0.0, 0.0])
    truth = np.array([1.0, 0.0, 0.0])
    rng = np.random.default_rng(2)
    for _ in range(100):
        from uuvtrack.vehicle import integrate_velocity
        truth = np.array(integrate_velocity(DEFAULT_PARAMS, tuple(truth),
                                            (0.0, 0.0, 0.0), 0.01))
        meas = truth + rng.normal(0.0, np.sqrt(r))
        mean, cov = ekf_velocity_step(mean, cov, meas, (0, 0, 0),
                                      DEFAULT_PARAMS, 0.01, q, r)
    assert np.abs(mean - truth).max() < 0.1
    assert_psd(cov)


def test_zero_covariance_skips_update():
    q = np.zeros(3)
    r = np.zeros(3)
    cov = np.zeros((3, 3))
    mean = np.array([0.2, 0.0, 0.0])
    meas = np.array([999.0, 0.0, 0.0])  # must be ignored: prior is certain
    new_mean, new_cov = kf_pose_step(mean, cov, meas, np.zeros(3), (0, 0, 0),
                                     DEFAULT_PARAMS, 0.01, q, r)
    assert new_mean[0] == pytest.approx(0.2)
    assert np.allclose(new_cov, 0.0)


def test_singular_innovation_with_informative_prior_raises():
    # one axis fully degenerate while another still carries uncertainty:
    # that is a broken noise model, not the exact-observer limit
    q = np.zeros(3)
    r = np.zeros(3)
    cov = np.diag([1.0, 0.0, 0.0])
    mean = np.zeros(3)
    meas = np.array([1.0, 0.0, 0.0])
    with pytest.raises(FilterError):
        kf_pose_step(mean, cov, meas, np.zeros(3), (0, 0, 0),
                     DEFAULT_PARAMS, 0.01, q, r)


def test_estimator_exact_observer_with_zero_noise():
    cfg = NoiseConfig(q_pos=(0.0, 0.0, 0.0), q_vel=(0.0, 0.0, 0.0))
    truth = np.array([1.0, 2.0, 0.3, 0.5, 0.1, 0.05])
    est = StateEstimator(DEFAULT_PARAMS, cfg, truth.copy())
    from uuvtrack.vehicle import _step_raw

    tau = (5.0, 1.0, 0.1)
    for _ in range(300):
        truth = np.array(_step_raw(DEFAULT_PARAMS, tuple(truth), tau, 0.01))
        state = est.step(truth.copy(), tau, 0.01)
    assert np.abs(state.mean - truth).max() < 1e-9


def test_estimator_beats_measurements():
    """Variance of the filtered state stays under the measurement variance
    for a stationary vehicle observed with the stock noise levels."""
    cfg = NoiseConfig(seed=3)
    rng_sys, rng_meas = noise_streams(cfg)
    truth = np.zeros(6)
    est = StateEstimator(DEFAULT_PARAMS, cfg, truth.copy())
    errs_est, errs_meas = [], []
    from uuvtrack.vehicle import _step_raw

    for _ in range(500):
        truth = np.array(_step_raw(DEFAULT_PARAMS, tuple(truth), (0, 0, 0), 0.01))
        truth += process_noise(cfg, rng_sys)
        meas = inject_noise(truth, cfg, rng_meas)
        state = est.step(meas, (0, 0, 0), 0.01)
        errs_est.append(state.mean - truth)
        errs_meas.append(meas - truth)
    rmse_est = np.sqrt(np.mean(np.square(errs_est), axis=0))
    rmse_meas = np.sqrt(np.mean(np.square(errs_meas), axis=0))
    assert np.all(rmse_est < rmse_meas)


def test_estimator_covariance_stays_psd():
    cfg = NoiseConfig(seed=8)
    rng_sys, rng_meas = noise_streams(cfg)
    truth = np.zeros(6)
    est = StateEstimator(DEFAULT_PARAMS, cfg, truth.copy())
    from uuvtrack.vehicle import _step_raw

    for _ in range(200):
        truth = np.array(_step_raw(DEFAULT_PARAMS, tuple(truth), (1.0, 0.5, 0.01), 0.01))
        truth += process_noise(cfg, rng_sys)
        meas = inject_noise(truth, cfg, rng_meas)
        state = est.step(meas, (1.0, 0.5, 0.01), 0.01, check=True)
    assert state.cov.shape == (6, 6)
