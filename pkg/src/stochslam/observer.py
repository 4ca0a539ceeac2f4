"""Nonlinear stochastic SLAM observer on SE(3) x R^3n.

The observer only ever sees a :class:`~stochslam.sensors.MeasurementFrame`,
its gains and its own state; truth, true biases and diffusion levels are
never passed in.

Discretization
--------------
One step is a two-stage split of the continuous observer:

1. Landmark relaxation.  ``dp_i/dt = -c_i e_i`` is stiff (``c_i`` grows with
   ``||p_i||^4`` and with the covariance-bound estimate), so it is solved by
   backward Euler with the pose held fixed:
   ``p_i <- p_i - c_i dt / (1 + c_i dt) * e_i``.
2. Pose, bias and covariance-bound propagation with forward Euler, driven by
   the innovation recomputed after stage 1; the attitude is retracted through
   the exponential map.

``landmark_update="explicit"`` replaces stage 1 by plain forward Euler on the
un-relaxed innovation; it is kept for comparison and diverges with the
reference gains at ``dt = 1e-3``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import NumericalError
from .liegroup import Pose, so3_exp
from .sensors import MeasurementFrame

LANDMARK_UPDATES = ("implicit", "explicit")


@dataclass(frozen=True)
class GainSet:
    """Observer design parameters; ``gamma`` multiplies identity on each bias block."""

    k_p: float = 10.0
    k_w: float = 10.0
    k_b: float = 10.0
    k_sigma: float = 1.0
    gamma_sigma: float = 1.0
    gamma: float = 5.0
    rho: float = 0.3
    alpha: np.ndarray = field(default_factory=lambda: np.full(4, 0.04))

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, dtype=float)))
        for name in ("k_p", "k_w", "k_b", "k_sigma", "gamma_sigma", "gamma", "rho"):
            val = float(getattr(self, name))
            object.__setattr__(self, name, val)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"gain {name} must be positive, got {val}")
        if not np.all(self.alpha > 0) or not np.all(np.isfinite(self.alpha)):
            raise ValueError(f"gains alpha must be positive, got {self.alpha}")

    def __eq__(self, other):
        if not isinstance(other, GainSet):
            return NotImplemented
        scalars = ("k_p", "k_w", "k_b", "k_sigma", "gamma_sigma", "gamma", "rho")
        return all(getattr(self, k) == getattr(other, k) for k in scalars) and np.array_equal(
            self.alpha, other.alpha
        )


@dataclass(frozen=True)
class ObserverState:
    pose: Pose
    landmarks: np.ndarray
    bias_omega: np.ndarray
    bias_v: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "landmarks", np.asarray(self.landmarks, dtype=float))
        for name in ("bias_omega", "bias_v", "sigma"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def initial(cls, n_landmarks: int, pose: Pose | None = None) -> "ObserverState":
        z = np.zeros(3)
        return cls(pose or Pose.identity(), np.zeros((n_landmarks, 3)), z, z, z)


def innovation(obs: ObserverState, y) -> np.ndarray:
    """``e_i = p_i - R y_i - P`` for every landmark, shape ``(n, 3)``."""
    y = np.asarray(y, dtype=float)
    if y.shape != obs.landmarks.shape:
        raise ValueError(f"measurement shape {y.shape} does not match landmark estimates {obs.landmarks.shape}")
    return obs.landmarks - y @ obs.pose.rotation.T - obs.pose.position


def correction_terms(obs: ObserverState, y, e, k_w: float) -> tuple[np.ndarray, np.ndarray]:
    """Pose correction factors ``(W_omega, W_v)``.

    With ``b_i = R y_i + p_i``::

        W_omega = -k_w R^T sum_i [b_i]x e_i
        W_v     =  k_w R^T sum_i ([P]x [b_i]x - I) e_i
    """
    r = obs.pose.rotation
    b = np.asarray(y) @ r.T + obs.landmarks
    be = np.cross(b, e).sum(axis=0)
    w_omega = -k_w * (r.T @ be)
    w_v = k_w * (r.T @ (np.cross(obs.pose.position, be) - np.sum(e, axis=0)))
    return w_omega, w_v


def landmark_gain(landmarks, sigma, gains: GainSet) -> np.ndarray:
    """Per-landmark, per-axis relaxation rate, shape ``(n, 3)``.

    ``1 - Tr([p]x^2)`` is evaluated as ``1 + 2 ||p||^2``.
    """
    alpha = gains.alpha[:, None]
    shape = 1.0 + 2.0 * np.sum(np.asarray(landmarks) ** 2, axis=-1, keepdims=True)
    return gains.k_p + 5.0 / alpha * np.asarray(sigma)[None, :] + 3.0 / (gains.rho * alpha) * shape**2


def bias_rates(obs: ObserverState, y, e, gains: GainSet, bias_skew_includes_position: bool = True):
    r = obs.pose.rotation
    arm = np.asarray(y) @ r.T + obs.landmarks
    if bias_skew_includes_position:
        arm = arm - obs.pose.position
    w = (gains.gamma / gains.alpha)[:, None]
    d_omega = -(r.T @ np.sum(w * np.cross(arm, e), axis=0)) - gains.k_b * gains.gamma * obs.bias_omega
    d_v = -(r.T @ np.sum(w * e, axis=0)) - gains.k_b * gains.gamma * obs.bias_v
    return d_omega, d_v


def sigma_rate(sigma, e, gains: GainSet) -> np.ndarray:
    """Scalar drive applied identically to every component, minus linear decay."""
    e2 = np.sum(np.asarray(e) ** 2, axis=-1)
    drive = 5.0 * gains.gamma_sigma * np.sum(e2**2 / gains.alpha**2)
    return drive - gains.k_sigma * gains.gamma_sigma * np.asarray(sigma)


def sigma_upper_bound(q_omega, q_v) -> np.ndarray:
    """Componentwise ``max(Q_omega^2, Q_v^2)`` of the diffusion diagonals.

    Reference value for judging the observer's estimate; never fed to it.
    """
    q_omega = np.asarray(q_omega, dtype=float)
    q_v = np.asarray(q_v, dtype=float)
    if np.any(q_omega < 0) or np.any(q_v < 0):
        raise ValueError("diffusion diagonals must be non-negative")
    return np.maximum(q_omega**2, q_v**2)


def _finite(equation: str, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError(equation)


def observer_step(
    obs: ObserverState,
    meas: MeasurementFrame,
    gains: GainSet,
    dt: float,
    *,
    bias_skew_includes_position: bool = True,
    landmark_update: str = "implicit",
) -> ObserverState:
    """Advance the estimate by ``dt`` using one measurement frame."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if landmark_update not in LANDMARK_UPDATES:
        raise ValueError(f"landmark_update must be one of {LANDMARK_UPDATES}")
    y = meas.y
    e = innovation(obs, y)
    _finite("innovation", e)

    c = landmark_gain(obs.landmarks, obs.sigma, gains)
    if landmark_update == "implicit":
        p_hat = obs.landmarks - (c * dt / (1.0 + c * dt)) * e
        obs = replace(obs, landmarks=p_hat)
        e = innovation(obs, y)
    else:
        p_hat = obs.landmarks - c * dt * e
    _finite("landmark_update", p_hat)

    w_omega, w_v = correction_terms(obs, y, e, gains.k_w)
    _finite("correction_terms", w_omega, w_v)
    d_bo, d_bv = bias_rates(obs, y, e, gains, bias_skew_includes_position)
    _finite("bias_update", d_bo, d_bv)
    d_sigma = sigma_rate(obs.sigma, e, gains)
    _finite("sigma_update", d_sigma)

    r = obs.pose.rotation
    rot = r @ so3_exp((meas.omega_m - obs.bias_omega - w_omega) * dt)
    pos = obs.pose.position + r @ (meas.v_m - obs.bias_v - w_v) * dt
    _finite("pose_update", rot, pos)
    return ObserverState(
        pose=Pose(rot, pos),
        landmarks=p_hat,
        bias_omega=obs.bias_omega + d_bo * dt,
        bias_v=obs.bias_v + d_bv * dt,
        sigma=obs.sigma + d_sigma * dt,
    )
