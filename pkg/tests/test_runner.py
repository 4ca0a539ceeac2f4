import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochslam import DivergenceError, GainSet, NoiseModel, ObserverState, Pose, so3_exp
from stochslam.harness import default_paper_scenario, run_ensemble, run_single
from stochslam.harness.acceptance import clean_fixed_point_config

from conftest import assert_bit_equal

FIELDS = ("rotation", "position", "landmarks", "bias_omega", "bias_v", "sigma", "lyapunov")


def short(cfg=None, duration=2.0, **kw):
    return (cfg or default_paper_scenario()).replace(duration=duration, **kw)


def test_sample_count_contract():
    cfg = short(duration=1.0, decimation=7)
    out = run_single(cfg)
    assert out.sample_count == 1000 // 7 + 1
    np.testing.assert_allclose(out.t[1] - out.t[0], 7e-3)


def test_fast_engine_matches_reference():
    cfg = short()
    fast, ref = run_single(cfg), run_single(cfg, engine="reference")
    for name in FIELDS:
        np.testing.assert_allclose(getattr(fast.errors, name), getattr(ref.errors, name), rtol=1e-12, atol=1e-13,
                                   err_msg=name)
    np.testing.assert_allclose(fast.measurements.y, ref.measurements.y, rtol=0, atol=1e-13)
    np.testing.assert_array_equal(fast.measurements.omega_m, ref.measurements.omega_m)


def test_fast_engine_matches_reference_on_variants():
    base = default_paper_scenario()
    cfg = short(duration=0.5, bias_skew_includes_position=False,
                velocity=type(base.velocity)(omega_amp=np.array([0.05, 0, 0]), frequency=0.5))
    fast, ref = run_single(cfg), run_single(cfg, engine="reference")
    np.testing.assert_allclose(fast.errors.lyapunov, ref.errors.lyapunov, rtol=1e-12)


def test_determinism_bit_identical():
    a, b = run_single(short()), run_single(short())
    for name in FIELDS:
        assert_bit_equal(getattr(a.errors, name), getattr(b.errors, name))
    c = run_single(short(), seed=1)
    assert not np.array_equal(a.errors.position, c.errors.position)


def test_chunk_size_does_not_change_output():
    a = run_single(short(duration=1.0))
    b = run_single(short(duration=1.0), chunk=37)
    assert_bit_equal(a.errors.lyapunov, b.errors.lyapunov)
    assert_bit_equal(a.estimate.pose.rotation, b.estimate.pose.rotation)


def test_landmark_stream_leaves_velocity_noise_alone():
    a = run_single(short(duration=0.5))
    b = run_single(short(duration=0.5), landmark_stream=99)
    assert_bit_equal(a.measurements.omega_m, b.measurements.omega_m)
    assert_bit_equal(a.measurements.v_m, b.measurements.v_m)
    assert not np.array_equal(a.measurements.y, b.measurements.y)


def test_zero_noise_fixed_point_summaries():
    out = run_single(clean_fixed_point_config(2000))
    for name, stats in out.summary.items():
        assert np.all(np.asarray(stats["mean"]) < 1e-9), name


def test_first_sample_is_initial_condition(scenario):
    out = run_single(short(duration=0.1))
    np.testing.assert_array_equal(out.truth.pose.position[0], [0, 0, 1])
    np.testing.assert_array_equal(out.estimate.landmarks[0], np.zeros((4, 3)))
    assert out.errors.lyapunov[0] > 0


@given(st.integers(0, 1000))
def test_gauge_invariance_of_innovation(seed):
    """Rotating truth and estimate together about the origin rotates every innovation.

    The measurements cannot see the rotation, and every gain is built from
    rotation-invariant quantities.  Translations are not a symmetry because
    the landmark gain depends on the norm of the landmark estimates.
    """
    rng = np.random.default_rng(seed)
    base = short(duration=0.05)
    g_rot, g_pos = so3_exp(rng.uniform(-1, 1, 3)), np.zeros(3)
    tr = base.initial_truth
    moved = type(tr)(Pose(g_rot @ tr.pose.rotation, g_rot @ tr.pose.position + g_pos),
                     tr.landmarks @ g_rot.T + g_pos, tr.landmark_velocities)
    es = base.initial_estimate
    est = ObserverState(Pose(g_rot @ es.pose.rotation, g_rot @ es.pose.position + g_pos),
                        es.landmarks @ g_rot.T + g_pos, es.bias_omega, es.bias_v, es.sigma)
    a = run_single(base, engine="reference")
    cfg = base.replace(initial_truth=moved, initial_estimate=est, gains=GainSet(alpha=base.gains.alpha))
    b = run_single(cfg, engine="reference")
    # e is expressed in the inertial frame, so it rotates with the gauge
    np.testing.assert_allclose(b.errors.e, a.errors.e @ g_rot.T, atol=1e-9)


def test_divergence_reports_step_and_quantity():
    cfg = short(duration=0.05, landmark_update="explicit")
    with pytest.raises(DivergenceError) as info:
        run_single(cfg)
    assert info.value.step > 0
    assert info.value.quantity
    with pytest.raises(DivergenceError) as ref_info:
        run_single(cfg, engine="reference")
    assert ref_info.value.step == info.value.step


def test_ensemble_of_identical_zero_noise_runs():
    # no noise, so every seed produces the same run
    cfg = short(duration=0.5, initial_estimate=ObserverState.initial(4), noise=NoiseModel.clean(4))
    single = run_single(cfg)
    res = run_ensemble(cfg, ensemble_size=5)
    assert_bit_equal(res.mean_lyapunov, single.errors.lyapunov)
    assert res.fit.k_over_c >= 0


def test_ensemble_size_one_equals_single_run():
    cfg = short(duration=1.0, decimation=10)
    res = run_ensemble(cfg, ensemble_size=1)
    assert_bit_equal(res.mean_lyapunov, run_single(cfg).errors.lyapunov)


def test_ensemble_order_independent():
    cfg = short(duration=1.0)
    a = run_ensemble(cfg, ensemble_size=4)
    b = run_ensemble(cfg, ensemble_size=4, order=[2, 0, 3, 1])
    assert_bit_equal(a.mean_lyapunov, b.mean_lyapunov)
    assert_bit_equal(a.percentiles["position"][95], b.percentiles["position"][95])


def test_ensemble_parallel_matches_serial():
    cfg = short(duration=0.5)
    a = run_ensemble(cfg, ensemble_size=3, workers=1)
    b = run_ensemble(cfg, ensemble_size=3, workers=2)
    assert_bit_equal(a.mean_lyapunov, b.mean_lyapunov)


def test_ensemble_rejects_bad_order():
    with pytest.raises(ValueError):
        run_ensemble(short(duration=0.1), ensemble_size=3, order=[0, 0, 1])
