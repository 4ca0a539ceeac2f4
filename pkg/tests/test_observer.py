import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochslam import GainSet, MeasurementFrame, NumericalError, ObserverState, Pose, correction_terms, innovation
from stochslam import landmark_gain, observer_step, sigma_upper_bound, so3_exp
from stochslam.harness.acceptance import dense_correction_terms
from stochslam.harness.config import REFERENCE_LANDMARKS
from stochslam.observer import bias_rates, sigma_rate


def state(r=np.eye(3), p=np.zeros(3), landmarks=None, bo=np.zeros(3), bv=np.zeros(3), s=np.zeros(3)):
    landmarks = np.zeros((1, 3)) if landmarks is None else landmarks
    return ObserverState(Pose(np.asarray(r, float), np.asarray(p, float)), landmarks, bo, bv, s)


def random_state(rng, n):
    return state(so3_exp(rng.uniform(-2, 2, 3)), rng.normal(size=3), rng.normal(size=(n, 3)),
                 rng.normal(size=3), rng.normal(size=3), np.abs(rng.normal(size=3)))


def test_innovation_examples():
    obs = state(landmarks=REFERENCE_LANDMARKS)
    y = REFERENCE_LANDMARKS.copy()
    np.testing.assert_array_equal(innovation(obs, y), np.zeros((4, 3)))
    np.testing.assert_array_equal(innovation(state(landmarks=np.array([[1.0, 0, 0]])), [[1.0, 0, 0]]), [[0, 0, 0]])
    np.testing.assert_array_equal(innovation(state(), [[1.5, 0, -1]]), [[-1.5, 0, 1]])


def test_innovation_length_mismatch():
    with pytest.raises(ValueError):
        innovation(state(landmarks=REFERENCE_LANDMARKS), np.zeros((3, 3)))


def test_correction_terms_examples():
    obs = state(landmarks=np.array([[1.0, 0, 0]]))
    wo, wv = correction_terms(obs, [[1.0, 0, 0]], np.zeros((1, 3)), 1.0)
    np.testing.assert_array_equal(wo, 0)
    np.testing.assert_array_equal(wv, 0)
    wo, wv = correction_terms(obs, [[1.0, 0, 0]], [[0, 0, 1.0]], 1.0)
    np.testing.assert_allclose(wo, [0, 2, 0], atol=1e-15)
    np.testing.assert_allclose(wv, [0, 0, -1], atol=1e-15)


@given(st.integers(0, 10_000), st.integers(1, 6), st.floats(0.1, 10))
def test_correction_terms_dense_and_linear(seed, n, k_w):
    rng = np.random.default_rng(seed)
    obs = random_state(rng, n)
    y, e = rng.normal(size=(n, 3)), rng.normal(size=(n, 3))
    wo, wv = correction_terms(obs, y, e, k_w)
    do, dv = dense_correction_terms(obs.pose.rotation, obs.pose.position, obs.landmarks, y, e, k_w)
    np.testing.assert_allclose(wo, do, atol=1e-12)
    np.testing.assert_allclose(wv, dv, atol=1e-12)
    wo2, wv2 = correction_terms(obs, y, e, 2 * k_w)
    np.testing.assert_allclose(wo2, 2 * wo, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(wv2, 2 * wv, rtol=1e-13, atol=1e-13)


def test_landmark_gain_monotone():
    g = GainSet(alpha=[0.04, 0.1])
    p = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 2.0]])
    base = landmark_gain(p, np.zeros(3), g)
    assert np.all(landmark_gain(p, np.full(3, 0.5), g) > base)
    assert np.all(landmark_gain(2 * p, np.zeros(3), g) > base)
    expected = g.k_p + 3 / (g.rho * g.alpha) * (1 + 2 * np.sum(p**2, axis=1)) ** 2
    np.testing.assert_allclose(base, np.repeat(expected[:, None], 3, axis=1), rtol=1e-14)


def test_sigma_upper_bound_examples():
    np.testing.assert_array_equal(sigma_upper_bound(np.zeros(3), np.zeros(3)), np.zeros(3))
    np.testing.assert_allclose(sigma_upper_bound(np.full(3, 0.1), np.full(3, 0.12)), 0.0144, rtol=1e-14)
    np.testing.assert_array_equal(sigma_upper_bound([2, 0, 0], [1, 3, 0]), [4, 9, 0])


def zero_error_case(**kw):
    lm = REFERENCE_LANDMARKS.copy()
    obs = state(landmarks=lm, **kw)
    meas = MeasurementFrame(np.zeros(3), np.zeros(3), lm.copy())
    return obs, meas


def test_sigma_decay():
    obs, meas = zero_error_case(s=np.ones(3))
    out = observer_step(obs, meas, GainSet(), 0.01)
    np.testing.assert_allclose(out.sigma, 0.99, rtol=1e-14)


def test_bias_decay():
    obs, meas = zero_error_case(bo=np.array([1.0, 0, 0]))
    out = observer_step(obs, meas, GainSet(), 0.001)
    np.testing.assert_allclose(out.bias_omega, [0.95, 0, 0], rtol=1e-14)


def test_fixed_point_matches_truth_kinematics():
    r, p = so3_exp([0.1, 0.2, -0.3]), np.array([0.5, 0.0, 1.0])
    lm = REFERENCE_LANDMARKS
    obs = state(r, p, lm.copy())
    omega, v = np.array([0, 0, 0.1]), np.array([1.5, 0, 0])
    y = (lm - p) @ r
    out = observer_step(obs, MeasurementFrame(omega, v, y), GainSet(), 1e-3)
    # y carries rounding of order 1e-16, so e and hence the corrections are that small
    np.testing.assert_allclose(out.pose.rotation, r @ so3_exp(omega * 1e-3), atol=1e-15)
    np.testing.assert_allclose(out.pose.position, p + r @ v * 1e-3, atol=1e-15)
    np.testing.assert_allclose(out.landmarks, lm, atol=1e-15)
    assert np.all(np.abs(out.sigma) < 1e-40)


def oracle_step(obs, meas, g, dt):
    """Straight-line transcription of the two-stage update with explicit loops."""
    r, p = obs.pose.rotation, obs.pose.position
    lm = obs.landmarks.copy()
    n = len(lm)
    for i in range(n):
        e0 = lm[i] - r @ meas.y[i] - p
        shape = (1 + 2 * lm[i] @ lm[i]) ** 2
        for j in range(3):
            c = g.k_p + 5 / g.alpha[i] * obs.sigma[j] + 3 / (g.rho * g.alpha[i]) * shape
            lm[i, j] -= c * dt / (1 + c * dt) * e0[j]
    wo, wv, dbo, dbv, ds = np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), 0.0
    for i in range(n):
        e = lm[i] - r @ meas.y[i] - p
        b = r @ meas.y[i] + lm[i]
        wo += -g.k_w * r.T @ np.cross(b, e)
        wv += g.k_w * r.T @ (np.cross(p, np.cross(b, e)) - e)
        dbo += -g.gamma / g.alpha[i] * r.T @ np.cross(b - p, e)
        dbv += -g.gamma / g.alpha[i] * r.T @ e
        ds += 5 * g.gamma_sigma / g.alpha[i] ** 2 * (e @ e) ** 2
    r_new = r @ so3_exp((meas.omega_m - obs.bias_omega - wo) * dt)
    p_new = p + r @ (meas.v_m - obs.bias_v - wv) * dt
    bo = obs.bias_omega + (dbo - g.k_b * g.gamma * obs.bias_omega) * dt
    bv = obs.bias_v + (dbv - g.k_b * g.gamma * obs.bias_v) * dt
    s = obs.sigma + (ds - g.k_sigma * g.gamma_sigma * obs.sigma) * dt
    return r_new, p_new, lm, bo, bv, s


@given(st.integers(0, 10_000))
def test_observer_step_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 6))
    obs = random_state(rng, n)
    g = GainSet(alpha=rng.uniform(0.02, 0.5, n), k_p=rng.uniform(1, 20))
    meas = MeasurementFrame(rng.normal(size=3), rng.normal(size=3), rng.normal(size=(n, 3)))
    out = observer_step(obs, meas, g, 1e-3)
    expect = oracle_step(obs, meas, g, 1e-3)
    got = (out.pose.rotation, out.pose.position, out.landmarks, out.bias_omega, out.bias_v, out.sigma)
    for a, b in zip(got, expect):
        np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-11)


def test_bias_variant_switch():
    rng = np.random.default_rng(5)
    obs = random_state(rng, 4)
    y, e = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    g = GainSet()
    with_p, _ = bias_rates(obs, y, e, g, bias_skew_includes_position=True)
    without, _ = bias_rates(obs, y, e, g, bias_skew_includes_position=False)
    r, p = obs.pose.rotation, obs.pose.position
    shift = -np.sum([g.gamma / a * r.T @ np.cross(-p, ei) for a, ei in zip(g.alpha, e)], axis=0)
    np.testing.assert_allclose(with_p - without, shift, atol=1e-12)


def test_sigma_rate_scalar_on_all_components():
    e = np.array([[1.0, 0, 0], [0, 2.0, 0]])
    g = GainSet(alpha=np.array([0.5, 1.0]))
    rate = sigma_rate(np.array([1.0, 2.0, 3.0]), e, g)
    drive = 5 * (1 / 0.25 + 16)
    np.testing.assert_allclose(rate, drive - np.array([1.0, 2.0, 3.0]))


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        GainSet(k_w=0)
    with pytest.raises(ValueError):
        GainSet(alpha=[0.04, -1])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_step_names_equation():
    obs, meas = zero_error_case()
    bad = MeasurementFrame(np.array([np.inf, 0, 0]), np.zeros(3), meas.y)
    with pytest.raises(NumericalError) as info:
        observer_step(obs, bad, GainSet(), 1e-3)
    assert info.value.equation == "pose_update"
    bad_y = MeasurementFrame(np.zeros(3), np.zeros(3), np.full((4, 3), np.nan))
    with pytest.raises(NumericalError) as info:
        observer_step(obs, bad_y, GainSet(), 1e-3)
    assert info.value.equation == "innovation"


def test_explicit_variant_is_literal_euler():
    rng = np.random.default_rng(8)
    obs = random_state(rng, 4)
    obs = ObserverState(obs.pose, 0.1 * obs.landmarks, obs.bias_omega, obs.bias_v, obs.sigma)
    meas = MeasurementFrame(rng.normal(size=3), rng.normal(size=3), rng.normal(size=(4, 3)))
    g, dt = GainSet(), 1e-5
    out = observer_step(obs, meas, g, dt, landmark_update="explicit")
    e = innovation(obs, meas.y)
    np.testing.assert_allclose(out.landmarks, obs.landmarks - landmark_gain(obs.landmarks, obs.sigma, g) * e * dt,
                               rtol=1e-14)
    with pytest.raises(ValueError):
        observer_step(obs, meas, g, dt, landmark_update="rk4")
