import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochslam import ConfigError, assert_noncollinear
from stochslam.harness import default_paper_scenario, dump, load, parse, serialize


def test_reference_scenario_values(scenario):
    assert scenario.gains.k_b == 10
    assert scenario.gains.k_w == 10
    assert scenario.gains.gamma == 5
    np.testing.assert_array_equal(scenario.initial_estimate.pose.position, [0, 0, 0])
    np.testing.assert_array_equal(scenario.initial_truth.pose.position, [0, 0, 1])
    np.testing.assert_array_equal(scenario.noise.bias_v, [0.04, 0.06, -0.08])
    assert assert_noncollinear(scenario.initial_truth.landmarks)
    assert (scenario.duration, scenario.dt, scenario.gains.k_p) == (60.0, 1e-3, 10.0)
    assert scenario.n_steps == 60_000
    assert scenario.sample_count == 6001
    # rate-noise stds 0.1 rad/s and 0.12 m/s at the nominal step
    np.testing.assert_allclose(scenario.noise.q_omega / np.sqrt(scenario.dt), 0.1, rtol=1e-15)
    np.testing.assert_allclose(scenario.noise.q_v / np.sqrt(scenario.dt), 0.12, rtol=1e-15)


def test_roundtrip(scenario):
    text = serialize(scenario)
    again = parse(text)
    assert again == scenario
    assert serialize(again) == text


@given(st.floats(0.5, 100), st.floats(1e-4, 0.1), st.integers(0, 2**64 - 1), st.integers(1, 500),
       st.floats(0.01, 50), st.booleans())
def test_roundtrip_property(duration, dt, seed, n, k_p, variant):
    from stochslam import GainSet

    base = default_paper_scenario()
    cfg = base.replace(duration=duration, dt=dt, seed=seed, ensemble_size=n,
                       gains=GainSet(k_p=k_p, alpha=base.gains.alpha), bias_skew_includes_position=variant)
    assert parse(serialize(cfg)) == cfg


def test_file_roundtrip(tmp_path, scenario):
    dump(scenario, tmp_path / "c.cfg")
    assert load(tmp_path / "c.cfg") == scenario


def test_partial_file_overlays_defaults(scenario):
    cfg = parse("run.seed = 7\n# comment\n\nnoise.omega_rate_std = 0.2\n")
    assert cfg.seed == 7
    np.testing.assert_allclose(cfg.noise.q_omega, 0.2 * np.sqrt(1e-3))
    assert cfg.gains == scenario.gains


def test_five_landmarks_broadcast_defaults():
    cfg = parse("truth.landmarks = 1 0 0; -1 0 0; 0 1 0; 0 -1 0; 0 0 2\n")
    assert cfg.n_landmarks == 5
    assert cfg.gains.alpha.shape == (5,)
    assert cfg.initial_estimate.landmarks.shape == (5, 3)


@pytest.mark.parametrize("text, constraint", [
    ("gains.k_w = 0", "gains_positive"),
    ("gains.alpha = 0.04 0.04 -1 0.04", "gains_positive"),
    ("truth.landmarks = 1 0 0; 2 0 0", "min_landmarks"),
    ("truth.landmarks = 0 0 0; 1 0 0; 2 0 0", "noncollinear_landmarks"),
    ("run.duration = -1", "duration_positive"),
    ("run.dt = 0", "dt_positive"),
    ("run.dt = 100", "dt_le_duration"),
    ("run.ensemble_size = 0", "ensemble_size"),
    ("run.bogus = 1", "unknown_key"),
    ("run.seed = 1\nrun.seed = 2", "duplicate_key"),
    ("truth.rotation = 1 0 0; 0 1 0; 0 0 2", "rotation_valid"),
    ("noise.q_omega = 0.1 0.1 0.1\nnoise.omega_rate_std = 0.1", "noise_style"),
])
def test_invalid_configs_name_constraint(text, constraint):
    with pytest.raises(ConfigError) as info:
        parse(text)
    assert info.value.constraint == constraint


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.cfg")


def test_replace_revalidates(scenario):
    with pytest.raises(ConfigError):
        scenario.replace(duration=0.0)
