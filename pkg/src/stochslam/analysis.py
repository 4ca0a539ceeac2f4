"""Ground-truth errors, the Lyapunov candidate and ultimate-bound diagnostics.

All functions broadcast over a leading time axis; an :class:`ErrorRecord`
built from stacked states is a whole error time series.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .dynamics import WorldState
from .observer import GainSet, ObserverState
from .sensors import NoiseModel

_EYE3 = np.eye(3)


@dataclass(frozen=True)
class ErrorRecord:
    t: np.ndarray
    rotation: np.ndarray
    position: np.ndarray
    landmarks: np.ndarray
    bias_omega: np.ndarray
    bias_v: np.ndarray
    sigma: np.ndarray
    e: np.ndarray
    lyapunov: np.ndarray

    @property
    def rotation_error(self) -> np.ndarray:
        """``||I - R_err||_F``."""
        return np.linalg.norm(_EYE3 - self.rotation, axis=(-2, -1))

    def norms(self) -> dict[str, np.ndarray]:
        """Scalar error magnitudes; ``landmarks`` has a trailing per-landmark axis."""
        return {
            "position": np.linalg.norm(self.position, axis=-1),
            "rotation": self.rotation_error,
            "landmarks": np.linalg.norm(self.landmarks, axis=-1),
            "bias_omega": np.linalg.norm(self.bias_omega, axis=-1),
            "bias_v": np.linalg.norm(self.bias_v, axis=-1),
            "sigma": np.linalg.norm(self.sigma, axis=-1),
            "lyapunov": np.asarray(self.lyapunov),
        }


def lyapunov_value(e, bias_omega_err, bias_v_err, sigma_err, gains: GainSet) -> np.ndarray | float:
    """Quartic-in-innovation Lyapunov candidate.

    ``sum_i ||e_i||^4 / (4 alpha_i) + b_w^T b_w / (2 Gamma) + b_v^T b_v / (2 Gamma)
    + ||s||^2 / (2 gamma_sigma)``.
    """
    e = np.asarray(e, dtype=float)
    e2 = np.sum(e**2, axis=-1)
    v = np.sum(e2**2 / (4.0 * gains.alpha), axis=-1)
    v = v + 0.5 / gains.gamma * (np.sum(np.square(bias_omega_err), axis=-1) + np.sum(np.square(bias_v_err), axis=-1))
    v = v + np.sum(np.square(sigma_err), axis=-1) / (2.0 * gains.gamma_sigma)
    return float(v) if np.ndim(v) == 0 else v


def compute_errors(
    truth: WorldState, obs: ObserverState, noise: NoiseModel, sigma_true, *, gains: GainSet, t=0.0
) -> ErrorRecord:
    r = truth.pose.rotation
    r_err = obs.pose.rotation @ np.swapaxes(r, -1, -2)
    p_err = obs.pose.position - np.einsum("...ij,...j->...i", r_err, truth.pose.position)
    lm_err = obs.landmarks - np.einsum("...ij,...nj->...ni", r_err, truth.landmarks)
    bo_err = noise.bias_omega - obs.bias_omega
    bv_err = noise.bias_v - obs.bias_v
    s_err = np.asarray(sigma_true, dtype=float) - obs.sigma
    e = lm_err - p_err[..., None, :]
    return ErrorRecord(
        t=np.asarray(t, dtype=float),
        rotation=r_err,
        position=p_err,
        landmarks=lm_err,
        bias_omega=bo_err,
        bias_v=bv_err,
        sigma=s_err,
        e=e,
        lyapunov=np.asarray(lyapunov_value(e, bo_err, bv_err, s_err, gains)),
    )


@dataclass(frozen=True)
class EnvelopeFit:
    """Fitted ``V0 exp(-c t) + k/c`` bound and its acceptance verdict."""

    c: float
    k_over_c: float
    residual: float
    accepted: bool
    max_ratio: float

    def __call__(self, t, v0: float):
        return v0 * np.exp(-self.c * np.asarray(t)) + self.k_over_c


def fit_envelope(
    t, mean_v, v0: float, *, slack: float = 0.05, warmup_fraction: float = 0.05, c_max: float = 1e6
) -> EnvelopeFit:
    """Least-squares fit of ``(c, k/c)`` to an ensemble-mean Lyapunov series.

    The first ``warmup_fraction`` of the samples is excluded from both the fit
    and the acceptance test.  Residuals are relative to the data so the decay
    and the floor weigh comparably.  The fit is accepted when ``c > 0``,
    ``k/c >= 0`` and the curve times ``1 + slack`` bounds the data at every
    remaining sample; ``max_ratio`` is the largest ``data / curve`` there.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(mean_v, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("t and mean_v must be 1-D arrays of equal length")
    if len(v) < 10:
        raise ValueError(f"need at least 10 samples, got {len(v)}")
    if not np.all(np.isfinite(v)):
        raise ValueError("mean_v must be finite")
    if not np.any(v) and v0 <= 0:
        return EnvelopeFit(c=1.0, k_over_c=0.0, residual=0.0, accepted=True, max_ratio=0.0)
    if v0 <= 0:
        raise ValueError(f"v0 must be positive, got {v0}")

    start = int(np.ceil(warmup_fraction * len(v)))
    tt = t[start:] - t[0]
    vv = v[start:]
    tail = max(1, len(vv) // 10)
    kc0 = max(float(np.mean(vv[-tail:])), 0.0)
    above = vv - kc0
    # initial decay rate from the first e-fold of the excess over the floor
    hit = np.nonzero(above < (v0 - kc0) / np.e)[0]
    c0 = 1.0 / max(tt[hit[0]], 1e-9) if len(hit) and tt[hit[0]] > 0 else 1.0 / max(tt[-1], 1e-9)
    scale = np.maximum(np.abs(vv), 1e-12 * v0)

    def resid(x):
        return (v0 * np.exp(-np.exp(x[0]) * tt) + x[1] - vv) / scale

    x0 = [np.log(min(max(c0, 1e-9), c_max)), kc0]
    sol = least_squares(
        resid, x0, bounds=([np.log(1e-12), 0.0], [np.log(c_max), np.inf]),
        x_scale=[1.0, max(kc0, 1e-12 * v0)], xtol=1e-14, ftol=1e-14, gtol=1e-14,
    )
    c, kc = float(np.exp(sol.x[0])), float(sol.x[1])
    model = v0 * np.exp(-c * tt) + kc
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(model > 0, vv / model, np.where(vv > 0, np.inf, 0.0))
    max_ratio = float(np.max(ratio))
    accepted = c > 0 and kc >= 0 and max_ratio <= 1.0 + slack
    return EnvelopeFit(c=c, k_over_c=kc, residual=float(np.sqrt(np.mean(sol.fun**2))), accepted=bool(accepted),
                       max_ratio=max_ratio)


def summary_statistics(records: ErrorRecord, tail_fraction: float = 0.2) -> dict[str, dict[str, np.ndarray | float]]:
    """Mean and max of each error magnitude over the trailing ``tail_fraction`` of a run."""
    if not 0 < tail_fraction <= 1:
        raise ValueError(f"tail_fraction must be in (0, 1], got {tail_fraction}")
    n = np.shape(records.lyapunov)[0] if np.ndim(records.lyapunov) else 0
    if n == 0:
        raise ValueError("empty error series")
    start = n - max(1, int(np.ceil(tail_fraction * n)))
    out = {}
    for name, series in records.norms().items():
        tail = np.asarray(series)[start:]
        mean, mx = tail.mean(axis=0), tail.max(axis=0)
        out[name] = {
            "mean": float(mean) if np.ndim(mean) == 0 else mean,
            "max": float(mx) if np.ndim(mx) == 0 else mx,
        }
    return out
