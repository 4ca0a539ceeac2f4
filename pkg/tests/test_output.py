import csv

import numpy as np
import pytest

from stochslam.harness import default_paper_scenario, emit_csv, emit_ensemble_csv, run_ensemble, run_single
from stochslam.harness.output import OutputError


def read(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.fixture
def three_steps(tmp_path):
    cfg = default_paper_scenario().replace(duration=3.0, dt=1.0, decimation=1)
    return run_single(cfg), emit_csv(run_single(cfg), tmp_path)


def test_row_counts(three_steps):
    _, files = three_steps
    assert sorted(f.name for f in files) == ["errors.csv", "estimate.csv", "measurements.csv", "truth.csv"]
    for f in files:
        _, data = read(f)
        assert data.shape[0] == 4


def test_first_truth_row(three_steps):
    _, files = three_steps
    header, data = read(files[0])
    assert header[:4] == ["t", "P_x", "P_y", "P_z"]
    np.testing.assert_array_equal(data[0, :4], [0, 0, 0, 1])
    np.testing.assert_array_equal(data[0, 4:13], np.eye(3).ravel())
    assert data.shape[1] == 1 + 3 + 9 + 12


def test_error_schema(three_steps):
    out, files = three_steps
    header, data = read([f for f in files if f.name == "errors.csv"][0])
    n = 4
    expected = (["t", "position_err", "rotation_err"] + [f"landmark{i}_err" for i in range(1, n + 1)]
                + ["bias_omega_err", "bias_v_err", "sigma_err", "lyapunov"])
    assert header[:len(expected)] == expected
    assert header[len(expected):] == ["orthonormality_est", "sigma_hat_min"]
    assert len(header) - 1 == 8 + n
    assert data.shape[1] - 1 == 12
    np.testing.assert_array_equal(data[:, header.index("lyapunov")], out.errors.lyapunov)


def test_full_precision_roundtrip(tmp_path):
    out = run_single(default_paper_scenario().replace(duration=0.2))
    files = emit_csv(out, tmp_path)
    _, data = read([f for f in files if f.name == "estimate.csv"][0])
    assert data[:, 1:4].tobytes() == out.estimate.pose.position.tobytes()


def test_measurement_columns(three_steps):
    out, files = three_steps
    header, data = read([f for f in files if f.name == "measurements.csv"][0])
    assert len(header) == 13
    np.testing.assert_array_equal(data[:, 10:13], out.true_v)


def test_ensemble_csv(tmp_path):
    res = run_ensemble(default_paper_scenario().replace(duration=0.5), ensemble_size=2)
    header, data = read(emit_ensemble_csv(res, tmp_path))
    assert header[:3] == ["t", "mean_lyapunov", "envelope"]
    assert data.shape == (len(res.t), 7)


def test_io_failure_names_path(tmp_path):
    out = run_single(default_paper_scenario().replace(duration=0.05))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OutputError) as info:
        emit_csv(out, blocker / "sub")
    assert str(blocker) in str(info.value)
