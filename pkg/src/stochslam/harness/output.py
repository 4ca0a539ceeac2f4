"""CSV emission for runs and ensembles.

Every file has one fixed header row; numbers are written with Python's
shortest round-trip ``repr`` so a file reproduces the logged doubles exactly.

``truth.csv`` / ``estimate.csv``
    ``t, P_x, P_y, P_z, R_00 .. R_22`` (row-major), then ``p<i>_x, p<i>_y, p<i>_z``
    for each landmark (true or estimated).
``errors.csv``
    ``t, position_err, rotation_err, landmark<i>_err .., bias_omega_err,
    bias_v_err, sigma_err, lyapunov, orthonormality_est, sigma_hat_min``.
    Norms are Euclidean, ``rotation_err`` is ``||I - R_err||_F``;
    ``sigma_hat_min`` is the smallest component of the covariance-bound
    estimate at that sample.
``measurements.csv``
    ``t, omega_m_x/y/z, v_m_x/y/z, omega_x/y/z, v_x/y/z``.
``ensemble.csv`` (ensembles only)
    ``t, mean_lyapunov, envelope, position_p50, position_p95, rotation_p50,
    rotation_p95``.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..exceptions import StochSlamError
from ..liegroup import orthonormality_error

AXES = ("x", "y", "z")


class OutputError(StochSlamError, OSError):
    def __init__(self, path, cause: OSError):
        super().__init__(f"cannot write {path}: {cause.strerror or cause}")
        self.path = str(path)


def _pose_header(n: int) -> list[str]:
    return (["t"] + [f"P_{a}" for a in AXES] + [f"R_{i}{j}" for i in range(3) for j in range(3)]
            + [f"p{i + 1}_{a}" for i in range(n) for a in AXES])


def error_header(n: int) -> list[str]:
    return (["t", "position_err", "rotation_err"] + [f"landmark{i + 1}_err" for i in range(n)]
            + ["bias_omega_err", "bias_v_err", "sigma_err", "lyapunov", "orthonormality_est", "sigma_hat_min"])


MEASUREMENT_HEADER = (["t"] + [f"omega_m_{a}" for a in AXES] + [f"v_m_{a}" for a in AXES]
                      + [f"omega_{a}" for a in AXES] + [f"v_{a}" for a in AXES])
ENSEMBLE_HEADER = ["t", "mean_lyapunov", "envelope", "position_p50", "position_p95", "rotation_p50", "rotation_p95"]


def _write(path: Path, header, columns) -> None:
    table = np.column_stack([np.asarray(c, dtype=float).reshape(len(columns[0]), -1) for c in columns])
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in table:
                w.writerow([repr(float(x)) for x in row])
    except OSError as exc:
        raise OutputError(path, exc) from exc


def emit_csv(output, path) -> list[Path]:
    """Write ``truth.csv``, ``estimate.csv``, ``errors.csv`` and ``measurements.csv`` into ``path``."""
    out_dir = Path(path)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(out_dir, exc) from exc
    n = output.config.n_landmarks
    t = output.t
    tr, es, er, me = output.truth, output.estimate, output.errors, output.measurements
    norms = er.norms()
    files = {
        "truth.csv": (_pose_header(n), [t, tr.pose.position, tr.pose.rotation, tr.landmarks]),
        "estimate.csv": (_pose_header(n), [t, es.pose.position, es.pose.rotation, es.landmarks]),
        "errors.csv": (error_header(n), [
            t, norms["position"], norms["rotation"], norms["landmarks"], norms["bias_omega"], norms["bias_v"],
            norms["sigma"], norms["lyapunov"], orthonormality_error(es.pose.rotation), np.min(es.sigma, axis=-1),
        ]),
        "measurements.csv": (MEASUREMENT_HEADER, [t, me.omega_m, me.v_m, output.true_omega, output.true_v]),
    }
    written = []
    for name, (header, cols) in files.items():
        _write(out_dir / name, header, cols)
        written.append(out_dir / name)
    return written


def emit_ensemble_csv(result, path) -> Path:
    out_dir = Path(path)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(out_dir, exc) from exc
    pct = result.percentiles
    cols = [result.t, result.mean_lyapunov, result.fit(result.t, result.v0),
            pct["position"][50], pct["position"][95], pct["rotation"][50], pct["rotation"][95]]
    target = out_dir / "ensemble.csv"
    _write(target, ENSEMBLE_HEADER, cols)
    return target
