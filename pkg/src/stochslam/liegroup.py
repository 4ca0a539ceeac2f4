"""SO(3) / SE(3) primitives.

Rotations are plain ``(..., 3, 3)`` arrays and vectors ``(..., 3)`` arrays;
every function broadcasts over leading axes so whole time series can be
processed at once.  Poses are ``(rotation, position)`` pairs; the 4x4
homogeneous matrix is never built.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NotSkewSymmetricError

SMALL_ANGLE = 1e-8
SKEW_TOL = 1e-9

_EYE3 = np.eye(3)


def skew(v) -> np.ndarray:
    """Map ``v`` to the skew-symmetric matrix ``[v]x`` with ``[v]x w = v x w``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def vex(m) -> np.ndarray:
    """Inverse of :func:`skew`.

    Raises
    ------
    NotSkewSymmetricError
        If ``||M + M^T||_F`` exceeds ``SKEW_TOL`` for any matrix in the stack.
    """
    m = np.asarray(m, dtype=float)
    asym = np.linalg.norm(m + np.swapaxes(m, -1, -2), axis=(-2, -1))
    if np.any(asym > SKEW_TOL):
        raise NotSkewSymmetricError(f"||M + M^T||_F = {np.max(asym):.3e} > {SKEW_TOL}")
    return np.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], axis=-1)


def so3_exp(v) -> np.ndarray:
    """Rodrigues exponential of a rotation vector.

    Below ``SMALL_ANGLE`` the second-order series ``I + K + K^2/2`` is used;
    both branches agree to rounding at the switch.
    """
    v = np.asarray(v, dtype=float)
    theta = np.sqrt(np.sum(v * v, axis=-1))[..., None, None]
    k = skew(v)
    k2 = k @ k
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0, np.sin(safe) / safe)
    b = np.where(small, 0.5, (1.0 - np.cos(safe)) / (safe * safe))
    return _EYE3 + a * k + b * k2


def orthonormality_error(r) -> np.ndarray | float:
    """Frobenius norm of ``R R^T - I``."""
    r = np.asarray(r, dtype=float)
    err = np.linalg.norm(r @ np.swapaxes(r, -1, -2) - _EYE3, axis=(-2, -1))
    return float(err) if err.ndim == 0 else err


@dataclass(frozen=True)
class Pose:
    """Rigid transform ``x -> rotation @ x + position``."""

    rotation: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 form, for display and testing only."""
        t = np.eye(4)
        t[:3, :3] = self.rotation
        t[:3, 3] = self.position
        return t

    def apply(self, x) -> np.ndarray:
        return np.asarray(x) @ self.rotation.T + self.position


def pose_compose(a: Pose, b: Pose) -> Pose:
    """``a * b``, i.e. ``(R_a R_b, R_a P_b + P_a)``."""
    rot = a.rotation @ b.rotation
    pos = np.einsum("...ij,...j->...i", a.rotation, b.position) + a.position
    return Pose(rot, pos)


def pose_inverse(a: Pose) -> Pose:
    rt = np.swapaxes(a.rotation, -1, -2)
    return Pose(rt, -np.einsum("...ij,...j->...i", rt, a.position))
