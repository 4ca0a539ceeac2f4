"""Experiment configuration and its text format.

The format is line oriented, one ``section.key = value`` pair per line::

    # comment
    run.duration = 60.0
    truth.position = 0.0 0.0 1.0
    truth.landmarks = 1.5 0.0 0.0; -1.5 0.0 0.0; 0.0 1.5 0.0; 0.0 -1.5 0.0
    variant.bias_skew_includes_p = true

Vectors are whitespace-separated numbers; lists of vectors (and the 3x3
rotations, row by row) separate rows with ``;``.  Per-landmark fields
(``truth.landmark_velocities``, ``noise.bias_y``, ``estimate.landmarks``,
``gains.alpha``) also accept a single number, broadcast to every landmark.
Keys not given keep the reference-scenario value.  Noise levels are given
either as diffusion diagonals (``noise.q_omega``, ``noise.q_v``) or as
per-sample rate-noise standard deviations at ``run.dt``
(``noise.omega_rate_std``, ``noise.v_rate_std``); serialization always
writes the diffusion form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..dynamics import VelocityProfile, WorldState, assert_noncollinear
from ..exceptions import ConfigError
from ..liegroup import Pose, orthonormality_error
from ..observer import LANDMARK_UPDATES, GainSet, ObserverState
from ..sensors import NoiseModel

OUTPUT_ENV = "STOCHSLAM_OUT"

REFERENCE_LANDMARKS = np.array([[1.5, 0.0, 0.0], [-1.5, 0.0, 0.0], [0.0, 1.5, 0.0], [0.0, -1.5, 0.0]])


@dataclass(frozen=True)
class ExperimentConfig:
    initial_truth: WorldState
    initial_estimate: ObserverState
    velocity: VelocityProfile
    noise: NoiseModel
    gains: GainSet
    duration: float = 60.0
    dt: float = 1e-3
    seed: int = 0
    ensemble_size: int = 100
    decimation: int = 10
    output_dir: str | None = None
    bias_skew_includes_position: bool = True
    landmark_update: str = "implicit"

    @property
    def n_landmarks(self) -> int:
        return self.initial_truth.n_landmarks

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    @property
    def sample_count(self) -> int:
        return self.n_steps // self.decimation + 1

    def replace(self, **kw) -> "ExperimentConfig":
        return validate(replace(self, **kw))

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return serialize(self) == serialize(other)


def default_paper_scenario() -> ExperimentConfig:
    """Reference circle-flight scenario with four static landmarks.

    Gaps in the published setup are filled with library defaults: 60 s at
    ``dt = 1e-3``, ``k_p = 10``, landmark noise std 0.01 m without bias, and
    rate-noise standard deviations 0.1 rad/s and 0.12 m/s.
    """
    dt = 1e-3
    n = len(REFERENCE_LANDMARKS)
    truth = WorldState(Pose(np.eye(3), [0.0, 0.0, 1.0]), REFERENCE_LANDMARKS.copy())
    estimate = ObserverState.initial(n)
    noise = NoiseModel.from_rate_std(
        0.1, 0.12, dt,
        bias_omega=[0.05, -0.06, -0.07],
        bias_v=[0.04, 0.06, -0.08],
        bias_y=np.zeros((n, 3)),
        landmark_std=0.01,
    )
    gains = GainSet(k_p=10.0, k_w=10.0, k_b=10.0, k_sigma=1.0, gamma_sigma=1.0, gamma=5.0, rho=0.3,
                    alpha=np.full(n, 0.04))
    return validate(ExperimentConfig(truth, estimate, VelocityProfile(), noise, gains, duration=60.0, dt=dt))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check every configuration invariant, raising :class:`ConfigError` on the first violation."""
    if not (math.isfinite(cfg.duration) and cfg.duration > 0):
        raise ConfigError("duration_positive", f"duration must be > 0, got {cfg.duration}")
    if not (math.isfinite(cfg.dt) and cfg.dt > 0):
        raise ConfigError("dt_positive", f"dt must be > 0, got {cfg.dt}")
    if cfg.dt > cfg.duration:
        raise ConfigError("dt_le_duration", f"dt {cfg.dt} exceeds duration {cfg.duration}")
    if int(cfg.ensemble_size) != cfg.ensemble_size or cfg.ensemble_size < 1:
        raise ConfigError("ensemble_size", f"ensemble_size must be a positive integer, got {cfg.ensemble_size}")
    if int(cfg.decimation) != cfg.decimation or cfg.decimation < 1:
        raise ConfigError("decimation", f"decimation must be a positive integer, got {cfg.decimation}")
    if int(cfg.seed) != cfg.seed or cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("seed", f"seed must be an integer in [0, 2^64), got {cfg.seed}")
    if cfg.landmark_update not in LANDMARK_UPDATES:
        raise ConfigError("landmark_update", f"must be one of {LANDMARK_UPDATES}, got {cfg.landmark_update!r}")

    truth, est = cfg.initial_truth, cfg.initial_estimate
    n = truth.landmarks.shape[0] if truth.landmarks.ndim == 2 else 0
    if n < 3:
        raise ConfigError("min_landmarks", f"at least 3 landmarks required, got {n}")
    if not assert_noncollinear(truth.landmarks):
        raise ConfigError("noncollinear_landmarks", "landmarks are collinear; no triple spans a plane")
    for name, arr in (("estimate.landmarks", est.landmarks), ("noise.bias_y", cfg.noise.bias_y),
                      ("truth.landmark_velocities", truth.landmark_velocities)):
        if arr.shape != (n, 3):
            raise ConfigError("landmark_count", f"{name} has shape {arr.shape}, expected {(n, 3)}")
    if cfg.gains.alpha.shape != (n,):
        raise ConfigError("landmark_count", f"gains.alpha has {cfg.gains.alpha.size} entries, expected {n}")
    for name, r in (("truth.rotation", truth.pose.rotation), ("estimate.rotation", est.pose.rotation)):
        if r.shape != (3, 3) or orthonormality_error(r) > 1e-9 or np.linalg.det(r) <= 0:
            raise ConfigError("rotation_valid", f"{name} is not a rotation matrix")
    arrays = [truth.pose.position, truth.landmarks, truth.landmark_velocities, est.pose.position, est.landmarks,
              est.bias_omega, est.bias_v, est.sigma]
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise ConfigError("finite_state", "initial states must be finite")
    if np.any(est.sigma < 0):
        raise ConfigError("sigma_nonnegative", "estimate.sigma must be non-negative")
    return cfg


# -- text format ---------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def _vec(a) -> str:
    return " ".join(_fmt(x) for x in np.ravel(a))


def _rows(a) -> str:
    return "; ".join(_vec(row) for row in np.asarray(a))


def serialize(cfg: ExperimentConfig) -> str:
    t, e, v, nz, g = cfg.initial_truth, cfg.initial_estimate, cfg.velocity, cfg.noise, cfg.gains
    lines = [
        "# stochslam experiment configuration",
        f"run.duration = {_fmt(cfg.duration)}",
        f"run.dt = {_fmt(cfg.dt)}",
        f"run.seed = {int(cfg.seed)}",
        f"run.ensemble_size = {int(cfg.ensemble_size)}",
        f"run.decimation = {int(cfg.decimation)}",
        f"run.output_dir = {cfg.output_dir or ''}",
        f"truth.rotation = {_rows(t.pose.rotation)}",
        f"truth.position = {_vec(t.pose.position)}",
        f"truth.landmarks = {_rows(t.landmarks)}",
        f"truth.landmark_velocities = {_rows(t.landmark_velocities)}",
        f"velocity.omega = {_vec(v.omega)}",
        f"velocity.v = {_vec(v.v)}",
        f"velocity.omega_amp = {_vec(v.omega_amp)}",
        f"velocity.v_amp = {_vec(v.v_amp)}",
        f"velocity.frequency = {_fmt(v.frequency)}",
        f"noise.bias_omega = {_vec(nz.bias_omega)}",
        f"noise.bias_v = {_vec(nz.bias_v)}",
        f"noise.bias_y = {_rows(nz.bias_y)}",
        f"noise.q_omega = {_vec(nz.q_omega)}",
        f"noise.q_v = {_vec(nz.q_v)}",
        f"noise.landmark_std = {_fmt(nz.landmark_std)}",
        *(f"gains.{k} = {_fmt(getattr(g, k))}" for k in ("k_p", "k_w", "k_b", "k_sigma", "gamma_sigma", "gamma", "rho")),
        f"gains.alpha = {_vec(g.alpha)}",
        f"estimate.rotation = {_rows(e.pose.rotation)}",
        f"estimate.position = {_vec(e.pose.position)}",
        f"estimate.landmarks = {_rows(e.landmarks)}",
        f"estimate.bias_omega = {_vec(e.bias_omega)}",
        f"estimate.bias_v = {_vec(e.bias_v)}",
        f"estimate.sigma = {_vec(e.sigma)}",
        f"variant.bias_skew_includes_p = {'true' if cfg.bias_skew_includes_position else 'false'}",
        f"variant.landmark_update = {cfg.landmark_update}",
    ]
    return "\n".join(lines) + "\n"


_SCALARS = {"run.duration", "run.dt", "velocity.frequency", "noise.landmark_std"} | {
    f"gains.{k}" for k in ("k_p", "k_w", "k_b", "k_sigma", "gamma_sigma", "gamma", "rho")
}
_INTS = {"run.seed", "run.ensemble_size", "run.decimation"}
_VEC3 = {
    "truth.position", "velocity.omega", "velocity.v", "velocity.omega_amp", "velocity.v_amp",
    "noise.bias_omega", "noise.bias_v", "noise.q_omega", "noise.q_v", "noise.omega_rate_std", "noise.v_rate_std",
    "estimate.position", "estimate.bias_omega", "estimate.bias_v", "estimate.sigma",
}
_MATRICES = {"truth.rotation", "estimate.rotation"}
_PER_LANDMARK = {"truth.landmark_velocities", "noise.bias_y", "estimate.landmarks"}
_STRINGS = {"run.output_dir", "variant.landmark_update"}
_BOOLS = {"variant.bias_skew_includes_p"}
KNOWN_KEYS = _SCALARS | _INTS | _VEC3 | _MATRICES | _PER_LANDMARK | _STRINGS | _BOOLS | {
    "truth.landmarks", "gains.alpha"
}


def _numbers(key: str, text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.replace(";", " ").split()])
    except ValueError as exc:
        raise ConfigError("parse_number", f"{key}: {exc}") from None


def _parse_value(key: str, text: str):
    if key in _STRINGS:
        return text or None
    if key in _BOOLS:
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError("parse_bool", f"{key}: expected true/false, got {text!r}")
        return low in ("true", "1", "yes")
    if key in _INTS:
        try:
            return int(text)
        except ValueError:
            raise ConfigError("parse_int", f"{key}: expected an integer, got {text!r}") from None
    nums = _numbers(key, text)
    if key in _SCALARS:
        if nums.size != 1:
            raise ConfigError("parse_shape", f"{key}: expected one number, got {nums.size}")
        return float(nums[0])
    if key in _VEC3:
        if nums.size == 1:
            return np.full(3, nums[0])
        if nums.size != 3:
            raise ConfigError("parse_shape", f"{key}: expected 3 numbers, got {nums.size}")
        return nums
    if key in _MATRICES:
        if nums.size != 9:
            raise ConfigError("parse_shape", f"{key}: expected 9 numbers, got {nums.size}")
        return nums.reshape(3, 3)
    if key == "gains.alpha":
        return nums
    if nums.size == 1 and key in _PER_LANDMARK:
        return float(nums[0])
    if nums.size % 3:
        raise ConfigError("parse_shape", f"{key}: expected rows of 3 numbers, got {nums.size} values")
    return nums.reshape(-1, 3)


def parse(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse configuration text on top of ``base`` (default: the reference scenario)."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("parse_line", f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown_key", f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError("duplicate_key", f"line {lineno}: {key!r} given twice")
        values[key] = _parse_value(key, val)
    return _build(values, base or default_paper_scenario())


def _build(values: dict, base: ExperimentConfig) -> ExperimentConfig:
    get = values.get
    bt, be, bv, bn, bg = base.initial_truth, base.initial_estimate, base.velocity, base.noise, base.gains
    landmarks = get("truth.landmarks", bt.landmarks)
    n = len(landmarks)
    resized = len(landmarks) != len(bt.landmarks)

    def per_landmark(key, default):
        val = get(key)
        if val is None:
            if resized and np.all(default == default.flat[0]):
                return np.full((n, 3), default.flat[0])
            return default  # validate() reports a count mismatch
        if isinstance(val, float):
            return np.full((n, 3), val)
        return val

    dt = get("run.dt", base.dt)
    if ("noise.q_omega" in values and "noise.omega_rate_std" in values) or (
        "noise.q_v" in values and "noise.v_rate_std" in values
    ):
        raise ConfigError("noise_style", "give either diffusion (q_*) or rate std (*_rate_std), not both")
    q_omega = get("noise.q_omega", bn.q_omega)
    q_v = get("noise.q_v", bn.q_v)
    if "noise.omega_rate_std" in values:
        q_omega = values["noise.omega_rate_std"] * math.sqrt(dt)
    if "noise.v_rate_std" in values:
        q_v = values["noise.v_rate_std"] * math.sqrt(dt)

    alpha = get("gains.alpha")
    if alpha is None:
        alpha = bg.alpha if not resized else np.full(n, bg.alpha[0])
    elif alpha.size == 1:
        alpha = np.full(n, alpha[0])

    try:
        truth = WorldState(
            Pose(get("truth.rotation", bt.pose.rotation), get("truth.position", bt.pose.position)),
            landmarks,
            per_landmark("truth.landmark_velocities", bt.landmark_velocities),
        )
        estimate = ObserverState(
            Pose(get("estimate.rotation", be.pose.rotation), get("estimate.position", be.pose.position)),
            per_landmark("estimate.landmarks", be.landmarks),
            get("estimate.bias_omega", be.bias_omega),
            get("estimate.bias_v", be.bias_v),
            get("estimate.sigma", be.sigma),
        )
        velocity = VelocityProfile(
            get("velocity.omega", bv.omega), get("velocity.v", bv.v), get("velocity.omega_amp", bv.omega_amp),
            get("velocity.v_amp", bv.v_amp), get("velocity.frequency", bv.frequency),
        )
        noise = NoiseModel(
            get("noise.bias_omega", bn.bias_omega), get("noise.bias_v", bn.bias_v),
            per_landmark("noise.bias_y", bn.bias_y), q_omega, q_v, get("noise.landmark_std", bn.landmark_std),
        )
    except ValueError as exc:
        raise ConfigError("invalid_value", str(exc)) from None
    try:
        gains = GainSet(**{k: get(f"gains.{k}", getattr(bg, k))
                           for k in ("k_p", "k_w", "k_b", "k_sigma", "gamma_sigma", "gamma", "rho")}, alpha=alpha)
    except ValueError as exc:
        raise ConfigError("gains_positive", str(exc)) from None
    cfg = ExperimentConfig(
        truth, estimate, velocity, noise, gains,
        duration=get("run.duration", base.duration), dt=dt, seed=get("run.seed", base.seed),
        ensemble_size=get("run.ensemble_size", base.ensemble_size),
        decimation=get("run.decimation", base.decimation),
        output_dir=values["run.output_dir"] if "run.output_dir" in values else base.output_dir,
        bias_skew_includes_position=get("variant.bias_skew_includes_p", base.bias_skew_includes_position),
        landmark_update=get("variant.landmark_update", base.landmark_update),
    )
    return validate(cfg)


def load(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config_read", f"{path}: {exc.strerror or exc}") from None
    return parse(text)


def dump(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(serialize(cfg))
