"""Ground-truth kinematics of the vehicle and the landmarks.

Truth is integrated with a first-order geometric Euler scheme: the rotation
is retracted through the exponential map, positions are advanced with the
pre-update attitude.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ConfigError, NumericalError
from .liegroup import Pose, so3_exp

COLLINEAR_TOL = 1e-9


@dataclass(frozen=True)
class WorldState:
    """True vehicle pose plus landmark positions and body-frame landmark velocities."""

    pose: Pose
    landmarks: np.ndarray
    landmark_velocities: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.landmarks, dtype=float)
        object.__setattr__(self, "landmarks", p)
        if self.landmark_velocities is None:
            object.__setattr__(self, "landmark_velocities", np.zeros_like(p))
        else:
            v = np.asarray(self.landmark_velocities, dtype=float)
            if v.shape != p.shape:
                raise ValueError(f"landmark velocities {v.shape} do not match landmarks {p.shape}")
            object.__setattr__(self, "landmark_velocities", v)

    @property
    def n_landmarks(self) -> int:
        return self.landmarks.shape[-2]


@dataclass(frozen=True)
class VelocityProfile:
    """True body-frame velocities ``omega(t), v(t)``.

    Each is a constant plus an optional sinusoid of common ``frequency`` (Hz).
    The defaults give the constant-rate circle used by the reference scenario.
    """

    omega: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.1]))
    v: np.ndarray = field(default_factory=lambda: np.array([1.5, 0.0, 0.0]))
    omega_amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frequency: float = 0.0

    def __post_init__(self):
        for name in ("omega", "v", "omega_amp", "v_amp"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        object.__setattr__(self, "frequency", float(self.frequency))

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        s = np.sin(2.0 * np.pi * self.frequency * t)
        return self.omega + self.omega_amp * s, self.v + self.v_amp * s

    def __eq__(self, other):
        if not isinstance(other, VelocityProfile):
            return NotImplemented
        return self.frequency == other.frequency and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("omega", "v", "omega_amp", "v_amp")
        )


def truth_step(state: WorldState, omega, v, dt: float) -> WorldState:
    """Advance the true state by one step of length ``dt``."""
    omega = np.asarray(omega, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(v))):
        raise NumericalError("truth kinematics", f"non-finite velocity omega={omega}, v={v}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    r = state.pose.rotation
    rot = r @ so3_exp(omega * dt)
    pos = state.pose.position + r @ v * dt
    lv = state.landmark_velocities
    if np.any(lv):
        landmarks = state.landmarks + (lv @ r.T) * dt
    else:
        landmarks = state.landmarks
    return replace(state, pose=Pose(rot, pos), landmarks=landmarks)


def assert_noncollinear(landmarks, tol: float = COLLINEAR_TOL) -> bool:
    """True iff some landmark triple spans a plane.

    Raises
    ------
    ConfigError
        With fewer than three landmarks.
    """
    p = np.asarray(landmarks, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ConfigError("landmark_shape", f"expected (n, 3) landmarks, got {p.shape}")
    if len(p) < 3:
        raise ConfigError("min_landmarks", f"at least 3 landmarks required, got {len(p)}")
    for i, j, k in itertools.combinations(range(len(p)), 3):
        if np.linalg.norm(np.cross(p[j] - p[i], p[k] - p[i])) > tol:
            return True
    return False
