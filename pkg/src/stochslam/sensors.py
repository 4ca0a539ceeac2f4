"""Corrupted sensor models: biased noisy velocities and body-frame landmarks.

Velocity noise is Brownian: per step the increment ``Q sqrt(dt) z`` is drawn
and the rate noise injected into the measurement is ``increment / dt``
(Euler-Maruyama convention).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .liegroup import Pose

GYRO_STREAM = 0
VELOCITY_STREAM = 1
LANDMARK_STREAM = 2


class RandomSource:
    """Seeded standard-normal stream.

    A source is identified by ``(seed, key)``; sources with different keys are
    statistically independent, and the same ``(seed, key)`` always reproduces
    the same sequence regardless of how draws are chunked.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def standard_normal(self, shape=3) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def substream(self, *key: int) -> "RandomSource":
        return RandomSource(self.seed, self.key + key)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, key={self.key})"


@dataclass
class SensorStreams:
    """The three independent noise streams used by one simulation run."""

    gyro: RandomSource
    velocity: RandomSource
    landmark: RandomSource

    @classmethod
    def for_run(cls, seed: int, run_index: int = 0, landmark_key: int = LANDMARK_STREAM) -> "SensorStreams":
        return cls(
            RandomSource(seed, (run_index, GYRO_STREAM)),
            RandomSource(seed, (run_index, VELOCITY_STREAM)),
            RandomSource(seed, (run_index, landmark_key)),
        )


@dataclass(frozen=True)
class NoiseModel:
    """Biases and diffusion levels corrupting the measurements.

    ``q_omega`` / ``q_v`` are the diagonals of the diffusion matrices in units
    per sqrt(second); ``bias_y`` holds one bias vector per landmark.
    """

    bias_omega: np.ndarray
    bias_v: np.ndarray
    bias_y: np.ndarray
    q_omega: np.ndarray
    q_v: np.ndarray
    landmark_std: float = 0.01

    def __post_init__(self):
        for name in ("bias_omega", "bias_v", "q_omega", "q_v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        object.__setattr__(self, "bias_y", np.asarray(self.bias_y, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "landmark_std", float(self.landmark_std))
        if np.any(self.q_omega < 0) or np.any(self.q_v < 0) or self.landmark_std < 0:
            raise ValueError("diffusion entries and landmark noise std must be non-negative")
        for name in ("bias_omega", "bias_v", "bias_y"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_rate_std(cls, omega_std, v_std, dt_nominal: float, **kw) -> "NoiseModel":
        """Build a model whose per-sample rate noise has the given std at ``dt_nominal``."""
        root = np.sqrt(dt_nominal)
        return cls(q_omega=np.broadcast_to(omega_std, 3) * root, q_v=np.broadcast_to(v_std, 3) * root, **kw)

    @classmethod
    def clean(cls, n_landmarks: int) -> "NoiseModel":
        z = np.zeros(3)
        return cls(z, z, np.zeros((n_landmarks, 3)), z, z, 0.0)

    def __eq__(self, other):
        if not isinstance(other, NoiseModel):
            return NotImplemented
        return self.landmark_std == other.landmark_std and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("bias_omega", "bias_v", "bias_y", "q_omega", "q_v")
        )


@dataclass(frozen=True)
class MeasurementFrame:
    omega_m: np.ndarray
    v_m: np.ndarray
    y: np.ndarray
    t: float = 0.0


def sample_brownian_increment(rng: RandomSource, q, dt: float) -> np.ndarray:
    """One Brownian increment ``Q sqrt(dt) z`` for diagonal ``Q``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return np.asarray(q, dtype=float) * np.sqrt(dt) * rng.standard_normal(3)


def measure_velocities(omega, v, noise: NoiseModel, rng, dt: float):
    """Return ``(omega_m, v_m)``.

    ``rng`` is either a :class:`SensorStreams` (gyro and velocity noise come
    from their own streams) or a single :class:`RandomSource` used for both.
    """
    gyro = getattr(rng, "gyro", rng)
    vel = getattr(rng, "velocity", rng)
    omega_m = np.asarray(omega, dtype=float) + noise.bias_omega + sample_brownian_increment(gyro, noise.q_omega, dt) / dt
    v_m = np.asarray(v, dtype=float) + noise.bias_v + sample_brownian_increment(vel, noise.q_v, dt) / dt
    return omega_m, v_m


def measure_landmarks(pose: Pose, landmarks, noise: NoiseModel, rng) -> np.ndarray:
    """Body-frame landmark vectors ``R^T (p_i - P) + b_i + eta_i``."""
    src = getattr(rng, "landmark", rng)
    p = np.asarray(landmarks, dtype=float)
    clean = (p - pose.position) @ pose.rotation
    eta = noise.landmark_std * src.standard_normal(p.shape)
    return clean + noise.bias_y + eta

