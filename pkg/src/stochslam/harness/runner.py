"""Single-run and Monte Carlo drivers."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..analysis import EnvelopeFit, ErrorRecord, compute_errors, fit_envelope, summary_statistics
from ..dynamics import WorldState, truth_step
from ..exceptions import DivergenceError, NumericalError
from ..liegroup import Pose
from ..observer import ObserverState, observer_step, sigma_upper_bound
from ..sensors import LANDMARK_STREAM, MeasurementFrame, SensorStreams, measure_landmarks, measure_velocities
from . import _engine
from .config import ExperimentConfig

ENGINES = ("fast", "reference")
TAIL_FRACTION = 0.2


@dataclass
class RunOutput:
    """Logged time series of one run.

    ``truth``, ``estimate`` and ``measurements`` are the ordinary state
    types with a leading time axis on every array.  Sample ``m`` is taken at
    step ``m * decimation``; the measurement in a sample is the one the
    observer consumes at that step.
    """

    config: ExperimentConfig
    run_index: int
    decimation: int
    t: np.ndarray
    truth: WorldState
    estimate: ObserverState
    measurements: MeasurementFrame
    true_omega: np.ndarray
    true_v: np.ndarray
    errors: ErrorRecord
    sigma_min: float
    final_truth: WorldState
    final_estimate: ObserverState
    summary: dict = field(default_factory=dict)

    @property
    def sample_count(self) -> int:
        return len(self.t)


def _logged_indices(n_steps: int, decimation: int) -> int:
    return n_steps // decimation + 1


def _fast(cfg: ExperimentConfig, streams: SensorStreams, decimation: int, n_steps: int, chunk: int) -> dict:
    n = cfg.n_landmarks
    s_count = _logged_indices(n_steps, decimation)
    tr, es, nz, g, vp = cfg.initial_truth, cfg.initial_estimate, cfg.noise, cfg.gains, cfg.velocity
    R = tr.pose.rotation.copy()
    P = tr.pose.position.copy()
    p = tr.landmarks.copy()
    lv = tr.landmark_velocities.copy()
    Rh = es.pose.rotation.copy()
    Ph = es.pose.position.copy()
    ph = es.landmarks.copy()
    bo = es.bias_omega.copy()
    bv = es.bias_v.copy()
    s = es.sigma.copy()
    logs = {
        "t": np.empty(s_count),
        "R": np.empty((s_count, 3, 3)), "P": np.empty((s_count, 3)), "p": np.empty((s_count, n, 3)),
        "Rh": np.empty((s_count, 3, 3)), "Ph": np.empty((s_count, 3)), "ph": np.empty((s_count, n, 3)),
        "bo": np.empty((s_count, 3)), "bv": np.empty((s_count, 3)), "s": np.empty((s_count, 3)),
        "om_m": np.empty((s_count, 3)), "v_m": np.empty((s_count, 3)), "y": np.empty((s_count, n, 3)),
        "om": np.empty((s_count, 3)), "v": np.empty((s_count, 3)),
    }
    vel = np.stack([vp.omega, vp.v, vp.omega_amp, vp.v_amp])
    gk = np.array([g.k_p, g.k_w, g.k_b, g.k_sigma, g.gamma_sigma, g.gamma, g.rho])
    diag = np.array([float(np.min(s)), 0.0])
    status = np.zeros(2, dtype=np.int64)
    for k0, k1, z_om, z_v, z_y in _engine.stream_chunks(streams, n_steps + 1, n, chunk):
        _engine.run_chunk(
            k0, k1, n_steps, decimation, cfg.dt,
            R, P, p, lv, Rh, Ph, ph, bo, bv, s,
            vel, vp.frequency,
            nz.bias_omega, nz.bias_v, nz.bias_y, nz.q_omega, nz.q_v, nz.landmark_std,
            gk, g.alpha, cfg.bias_skew_includes_position, cfg.landmark_update == "implicit",
            z_om, z_v, z_y,
            logs["t"], logs["R"], logs["P"], logs["p"], logs["Rh"], logs["Ph"], logs["ph"],
            logs["bo"], logs["bv"], logs["s"], logs["om_m"], logs["v_m"], logs["y"], logs["om"], logs["v"],
            diag, status,
        )
        if status[0]:
            raise DivergenceError(int(status[1]), _engine.QUANTITIES[status[0]], float(diag[1]))
    logs["final"] = (WorldState(Pose(R, P), p, lv), ObserverState(Pose(Rh, Ph), ph, bo, bv, s))
    logs["sigma_min"] = float(diag[0])
    return logs


def _check_divergence(k: int, truth: WorldState, obs: ObserverState):
    checks = (
        ("truth position", np.linalg.norm(truth.pose.position)),
        ("estimated position", np.linalg.norm(obs.pose.position)),
        ("landmark estimates", np.max(np.linalg.norm(obs.landmarks, axis=-1))),
        ("bias_omega estimate", np.linalg.norm(obs.bias_omega)),
        ("bias_v estimate", np.linalg.norm(obs.bias_v)),
        ("sigma estimate", np.linalg.norm(obs.sigma)),
    )
    for name, val in checks:
        if not val <= _engine.DIVERGENCE_LIMIT:
            raise DivergenceError(k, name, float(val))


def _reference(cfg: ExperimentConfig, streams: SensorStreams, decimation: int, n_steps: int) -> dict:
    """Plain-Python loop over the public step functions."""
    truth, obs = cfg.initial_truth, cfg.initial_estimate
    keys = ("t", "R", "P", "p", "Rh", "Ph", "ph", "bo", "bv", "s", "om_m", "v_m", "y", "om", "v")
    logs = {k: [] for k in keys}
    sigma_min = float(np.min(obs.sigma))
    for k in range(n_steps + 1):
        t = k * cfg.dt
        omega, v = cfg.velocity(t)
        om_m, v_m = measure_velocities(omega, v, cfg.noise, streams, cfg.dt)
        y = measure_landmarks(truth.pose, truth.landmarks, cfg.noise, streams)
        if k % decimation == 0:
            for key, val in zip(keys, (t, truth.pose.rotation, truth.pose.position, truth.landmarks,
                                       obs.pose.rotation, obs.pose.position, obs.landmarks, obs.bias_omega,
                                       obs.bias_v, obs.sigma, om_m, v_m, y, omega, v)):
                logs[key].append(val)
        if k == n_steps:
            break
        try:
            obs = observer_step(obs, MeasurementFrame(om_m, v_m, y, t), cfg.gains, cfg.dt,
                                bias_skew_includes_position=cfg.bias_skew_includes_position,
                                landmark_update=cfg.landmark_update)
            truth = truth_step(truth, omega, v, cfg.dt)
        except NumericalError as exc:
            raise DivergenceError(k + 1, exc.equation, float("nan")) from exc
        sigma_min = min(sigma_min, float(np.min(obs.sigma)))
        _check_divergence(k + 1, truth, obs)
    out = {k: np.array(v, dtype=float) for k, v in logs.items()}
    out["final"] = (truth, obs)
    out["sigma_min"] = sigma_min
    return out


def run_single(
    cfg: ExperimentConfig,
    *,
    run_index: int = 0,
    seed: int | None = None,
    decimation: int | None = None,
    engine: str = "fast",
    chunk: int = 8192,
    landmark_stream: int = LANDMARK_STREAM,
) -> RunOutput:
    """Simulate one run of ``cfg``.

    Noise comes from the streams ``(seed, run_index, stream)``; the output is
    a deterministic function of the configuration, seed and run index.

    Raises
    ------
    DivergenceError
        If any tracked quantity exceeds 1e9 in norm or becomes non-finite.
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}")
    seed = cfg.seed if seed is None else seed
    dec = cfg.decimation if decimation is None else int(decimation)
    streams = SensorStreams.for_run(seed, run_index, landmark_key=landmark_stream)
    n_steps = cfg.n_steps
    try:
        logs = _fast(cfg, streams, dec, n_steps, chunk) if engine == "fast" else _reference(cfg, streams, dec, n_steps)
    except DivergenceError as exc:
        raise DivergenceError(exc.step, exc.quantity, exc.value, run_index=run_index) from None
    return _assemble(cfg, run_index, dec, logs)


def _assemble(cfg: ExperimentConfig, run_index: int, dec: int, logs: dict) -> RunOutput:
    lv = np.broadcast_to(cfg.initial_truth.landmark_velocities, logs["p"].shape)
    truth = WorldState(Pose(logs["R"], logs["P"]), logs["p"], lv)
    estimate = ObserverState(Pose(logs["Rh"], logs["Ph"]), logs["ph"], logs["bo"], logs["bv"], logs["s"])
    meas = MeasurementFrame(logs["om_m"], logs["v_m"], logs["y"], logs["t"])
    sigma_true = sigma_upper_bound(cfg.noise.q_omega, cfg.noise.q_v)
    errors = compute_errors(truth, estimate, cfg.noise, sigma_true, gains=cfg.gains, t=logs["t"])
    final_truth, final_est = logs["final"]
    return RunOutput(
        config=cfg, run_index=run_index, decimation=dec, t=logs["t"], truth=truth, estimate=estimate,
        measurements=meas, true_omega=logs["om"], true_v=logs["v"], errors=errors,
        sigma_min=logs["sigma_min"], final_truth=final_truth, final_estimate=final_est,
        summary=summary_statistics(errors, TAIL_FRACTION),
    )


# -- ensembles -----------------------------------------------------------------

@dataclass
class RunDigest:
    """What an ensemble keeps from each run."""

    run_index: int
    lyapunov: np.ndarray
    position: np.ndarray
    rotation: np.ndarray
    landmarks: np.ndarray
    sigma_min: float
    summary: dict


@dataclass
class EnsembleResult:
    t: np.ndarray
    mean_lyapunov: np.ndarray
    v0: float
    fit: EnvelopeFit
    slack: float
    mean: dict
    percentiles: dict
    sigma_min: float
    runs: list

    @property
    def size(self) -> int:
        return len(self.runs)

    def tail_mean_lyapunov(self, tail_fraction: float = TAIL_FRACTION) -> float:
        n = len(self.mean_lyapunov)
        return float(np.mean(self.mean_lyapunov[n - max(1, int(np.ceil(tail_fraction * n))):]))


def _digest(args) -> RunDigest:
    cfg, index = args
    out = run_single(cfg, run_index=index)
    norms = out.errors.norms()
    return RunDigest(index, norms["lyapunov"], norms["position"], norms["rotation"], norms["landmarks"],
                     out.sigma_min, out.summary)


def _exact_mean(stack: np.ndarray) -> np.ndarray:
    # Shifted mean: identical runs reproduce the single-run series bit for bit.
    ref = stack[0]
    return ref + np.mean(stack - ref, axis=0)


def envelope_slack(ensemble_size: int, base: float = 0.05, reference_size: int = 100) -> float:
    """Acceptance slack for the envelope fit, scaled as ``1/sqrt(N)``."""
    return base * np.sqrt(reference_size / ensemble_size)


def run_ensemble(
    cfg: ExperimentConfig,
    *,
    ensemble_size: int | None = None,
    workers: int | None = None,
    order=None,
) -> EnsembleResult:
    """Run independent seeds ``(cfg.seed, i)`` for ``i < N`` and reduce them.

    The reduction is sorted by run index, so the result does not depend on
    ``order`` (execution order) or on the number of ``workers``.
    """
    size = cfg.ensemble_size if ensemble_size is None else int(ensemble_size)
    if size < 1:
        raise ValueError("ensemble_size must be >= 1")
    indices = list(range(size)) if order is None else [int(i) for i in order]
    if sorted(indices) != list(range(size)):
        raise ValueError("order must be a permutation of range(ensemble_size)")
    workers = min(os.cpu_count() or 1, size) if workers is None else int(workers)
    jobs = [(cfg, i) for i in indices]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            digests = list(pool.map(_digest, jobs))
    else:
        digests = [_digest(j) for j in jobs]
    digests.sort(key=lambda d: d.run_index)

    lyap = np.stack([d.lyapunov for d in digests])
    series = {
        "lyapunov": lyap,
        "position": np.stack([d.position for d in digests]),
        "rotation": np.stack([d.rotation for d in digests]),
        "landmarks": np.stack([d.landmarks for d in digests]),
    }
    mean = {k: _exact_mean(v) for k, v in series.items()}
    pct = {k: {q: np.percentile(v, q, axis=0) for q in (5, 50, 95)} for k, v in series.items()}
    dec = cfg.decimation
    t = np.arange(lyap.shape[1]) * dec * cfg.dt
    v0 = float(mean["lyapunov"][0])
    slack = envelope_slack(size)
    fit = fit_envelope(t, mean["lyapunov"], v0, slack=slack)
    return EnsembleResult(
        t=t, mean_lyapunov=mean["lyapunov"], v0=v0, fit=fit, slack=slack, mean=mean, percentiles=pct,
        sigma_min=min(d.sigma_min for d in digests), runs=digests,
    )
