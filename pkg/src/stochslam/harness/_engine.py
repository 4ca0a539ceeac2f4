"""Compiled lock-step loop: measure, log, observer step, truth step.

Mirrors ``sensors.measure_*``, ``observer.observer_step`` and
``dynamics.truth_step`` operation for operation; ``tests/test_engine.py``
checks the two paths against each other.  State arrays are updated in place
so a run can be processed in chunks of pre-drawn noise.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

DIVERGENCE_LIMIT = 1e9

QUANTITIES = (
    "ok",
    "truth position",
    "truth rotation",
    "estimated position",
    "estimated rotation",
    "landmark estimates",
    "bias_omega estimate",
    "bias_v estimate",
    "sigma estimate",
    "truth landmarks",
)


@njit(cache=True)
def _exp_into(wx, wy, wz, out):
    th = math.sqrt(wx * wx + wy * wy + wz * wz)
    if th < 1e-8:
        a = 1.0
        b = 0.5
    else:
        a = math.sin(th) / th
        b = (1.0 - math.cos(th)) / (th * th)
    out[0, 0] = 1.0 + b * (-(wz * wz) - wy * wy)
    out[0, 1] = -a * wz + b * (wx * wy)
    out[0, 2] = a * wy + b * (wx * wz)
    out[1, 0] = a * wz + b * (wx * wy)
    out[1, 1] = 1.0 + b * (-(wz * wz) - wx * wx)
    out[1, 2] = -a * wx + b * (wy * wz)
    out[2, 0] = -a * wy + b * (wx * wz)
    out[2, 1] = a * wx + b * (wy * wz)
    out[2, 2] = 1.0 + b * (-(wy * wy) - wx * wx)


@njit(cache=True)
def _right_mul_exp(r, wx, wy, wz, tmp_e, tmp_r):
    _exp_into(wx, wy, wz, tmp_e)
    for i in range(3):
        for j in range(3):
            tmp_r[i, j] = r[i, 0] * tmp_e[0, j] + r[i, 1] * tmp_e[1, j] + r[i, 2] * tmp_e[2, j]
    for i in range(3):
        for j in range(3):
            r[i, j] = tmp_r[i, j]


@njit(cache=True)
def _norm3(x, y, z):
    return math.sqrt(x * x + y * y + z * z)


@njit(cache=True)
def _bad(x):
    return not (x <= DIVERGENCE_LIMIT)  # also catches nan


@njit(cache=True)
def run_chunk(
    k0, k1, n_steps, dec, dt,
    R, P, p, lv,
    Rh, Ph, ph, bo, bv, s,
    vel, freq,
    b_om, b_v, b_y, q_om, q_v, lstd,
    gk, alpha, skew_incl_p, implicit,
    z_om, z_v, z_y,
    log_t, log_R, log_P, log_p, log_Rh, log_Ph, log_ph, log_bo, log_bv, log_s,
    log_om_m, log_v_m, log_y, log_om, log_v,
    diag, status,
):
    n = p.shape[0]
    k_p, k_w, k_b, k_s, g_s, gam, rho = gk[0], gk[1], gk[2], gk[3], gk[4], gk[5], gk[6]
    sq = math.sqrt(dt)
    y = np.empty((n, 3))
    e = np.empty((n, 3))
    c = np.empty((n, 3))
    ph_new = np.empty((n, 3))
    bvec = np.empty((n, 3))
    tmp_e = np.empty((3, 3))
    tmp_r = np.empty((3, 3))
    r_old = np.empty((3, 3))
    om = np.empty(3)
    v = np.empty(3)
    om_m = np.empty(3)
    v_m = np.empty(3)
    for k in range(k0, k1):
        j = k - k0
        t = k * dt
        sn = math.sin(2.0 * math.pi * freq * t)
        for a in range(3):
            om[a] = vel[0, a] + vel[2, a] * sn
            v[a] = vel[1, a] + vel[3, a] * sn
            om_m[a] = om[a] + b_om[a] + q_om[a] * sq * z_om[j, a] / dt
            v_m[a] = v[a] + b_v[a] + q_v[a] * sq * z_v[j, a] / dt
        for i in range(n):
            d0 = p[i, 0] - P[0]
            d1 = p[i, 1] - P[1]
            d2 = p[i, 2] - P[2]
            for a in range(3):
                y[i, a] = (d0 * R[0, a] + d1 * R[1, a] + d2 * R[2, a]) + b_y[i, a] + lstd * z_y[j, i, a]

        if k % dec == 0:
            m = k // dec
            log_t[m] = t
            for a in range(3):
                log_P[m, a] = P[a]
                log_Ph[m, a] = Ph[a]
                log_bo[m, a] = bo[a]
                log_bv[m, a] = bv[a]
                log_s[m, a] = s[a]
                log_om_m[m, a] = om_m[a]
                log_v_m[m, a] = v_m[a]
                log_om[m, a] = om[a]
                log_v[m, a] = v[a]
                for b in range(3):
                    log_R[m, a, b] = R[a, b]
                    log_Rh[m, a, b] = Rh[a, b]
                for i in range(n):
                    log_p[m, i, a] = p[i, a]
                    log_ph[m, i, a] = ph[i, a]
                    log_y[m, i, a] = y[i, a]
        if k >= n_steps:
            break

        # ---- observer ----
        for i in range(n):
            for a in range(3):
                e[i, a] = ph[i, a] - (Rh[a, 0] * y[i, 0] + Rh[a, 1] * y[i, 1] + Rh[a, 2] * y[i, 2]) - Ph[a]
        for i in range(n):
            shape = 1.0 + 2.0 * (ph[i, 0] ** 2 + ph[i, 1] ** 2 + ph[i, 2] ** 2)
            for a in range(3):
                c[i, a] = k_p + 5.0 / alpha[i] * s[a] + 3.0 / (rho * alpha[i]) * shape**2
        if implicit:
            for i in range(n):
                for a in range(3):
                    ph[i, a] = ph[i, a] - (c[i, a] * dt / (1.0 + c[i, a] * dt)) * e[i, a]
                    ph_new[i, a] = ph[i, a]
            for i in range(n):
                for a in range(3):
                    e[i, a] = ph[i, a] - (Rh[a, 0] * y[i, 0] + Rh[a, 1] * y[i, 1] + Rh[a, 2] * y[i, 2]) - Ph[a]
        else:
            for i in range(n):
                for a in range(3):
                    ph_new[i, a] = ph[i, a] - c[i, a] * dt * e[i, a]

        for i in range(n):
            for a in range(3):
                bvec[i, a] = (Rh[a, 0] * y[i, 0] + Rh[a, 1] * y[i, 1] + Rh[a, 2] * y[i, 2]) + ph[i, a]
        be0 = 0.0
        be1 = 0.0
        be2 = 0.0
        es0 = 0.0
        es1 = 0.0
        es2 = 0.0
        ae0 = 0.0
        ae1 = 0.0
        ae2 = 0.0
        we0 = 0.0
        we1 = 0.0
        we2 = 0.0
        drive = 0.0
        for i in range(n):
            b0, b1, b2 = bvec[i, 0], bvec[i, 1], bvec[i, 2]
            e0, e1, e2 = e[i, 0], e[i, 1], e[i, 2]
            be0 += b1 * e2 - b2 * e1
            be1 += b2 * e0 - b0 * e2
            be2 += b0 * e1 - b1 * e0
            es0 += e0
            es1 += e1
            es2 += e2
            if skew_incl_p:
                b0 -= Ph[0]
                b1 -= Ph[1]
                b2 -= Ph[2]
            w = gam / alpha[i]
            ae0 += w * (b1 * e2 - b2 * e1)
            ae1 += w * (b2 * e0 - b0 * e2)
            ae2 += w * (b0 * e1 - b1 * e0)
            we0 += w * e0
            we1 += w * e1
            we2 += w * e2
            n2 = e0 * e0 + e1 * e1 + e2 * e2
            drive += n2 * n2 / alpha[i] ** 2
        drive = 5.0 * g_s * drive
        # R^T x
        wo0 = -k_w * (Rh[0, 0] * be0 + Rh[1, 0] * be1 + Rh[2, 0] * be2)
        wo1 = -k_w * (Rh[0, 1] * be0 + Rh[1, 1] * be1 + Rh[2, 1] * be2)
        wo2 = -k_w * (Rh[0, 2] * be0 + Rh[1, 2] * be1 + Rh[2, 2] * be2)
        x0 = (Ph[1] * be2 - Ph[2] * be1) - es0
        x1 = (Ph[2] * be0 - Ph[0] * be2) - es1
        x2 = (Ph[0] * be1 - Ph[1] * be0) - es2
        wv0 = k_w * (Rh[0, 0] * x0 + Rh[1, 0] * x1 + Rh[2, 0] * x2)
        wv1 = k_w * (Rh[0, 1] * x0 + Rh[1, 1] * x1 + Rh[2, 1] * x2)
        wv2 = k_w * (Rh[0, 2] * x0 + Rh[1, 2] * x1 + Rh[2, 2] * x2)
        kbg = k_b * gam
        dbo0 = -(Rh[0, 0] * ae0 + Rh[1, 0] * ae1 + Rh[2, 0] * ae2) - kbg * bo[0]
        dbo1 = -(Rh[0, 1] * ae0 + Rh[1, 1] * ae1 + Rh[2, 1] * ae2) - kbg * bo[1]
        dbo2 = -(Rh[0, 2] * ae0 + Rh[1, 2] * ae1 + Rh[2, 2] * ae2) - kbg * bo[2]
        dbv0 = -(Rh[0, 0] * we0 + Rh[1, 0] * we1 + Rh[2, 0] * we2) - kbg * bv[0]
        dbv1 = -(Rh[0, 1] * we0 + Rh[1, 1] * we1 + Rh[2, 1] * we2) - kbg * bv[1]
        dbv2 = -(Rh[0, 2] * we0 + Rh[1, 2] * we1 + Rh[2, 2] * we2) - kbg * bv[2]

        u0 = v_m[0] - bv[0] - wv0
        u1 = v_m[1] - bv[1] - wv1
        u2 = v_m[2] - bv[2] - wv2
        ph0 = Ph[0] + (Rh[0, 0] * u0 + Rh[0, 1] * u1 + Rh[0, 2] * u2) * dt
        ph1 = Ph[1] + (Rh[1, 0] * u0 + Rh[1, 1] * u1 + Rh[1, 2] * u2) * dt
        ph2 = Ph[2] + (Rh[2, 0] * u0 + Rh[2, 1] * u1 + Rh[2, 2] * u2) * dt
        _right_mul_exp(Rh, (om_m[0] - bo[0] - wo0) * dt, (om_m[1] - bo[1] - wo1) * dt,
                       (om_m[2] - bo[2] - wo2) * dt, tmp_e, tmp_r)
        Ph[0] = ph0
        Ph[1] = ph1
        Ph[2] = ph2
        for i in range(n):
            for a in range(3):
                ph[i, a] = ph_new[i, a]
        bo[0] += dbo0 * dt
        bo[1] += dbo1 * dt
        bo[2] += dbo2 * dt
        bv[0] += dbv0 * dt
        bv[1] += dbv1 * dt
        bv[2] += dbv2 * dt
        for a in range(3):
            s[a] = s[a] + (drive - k_s * g_s * s[a]) * dt
            if s[a] < diag[0]:
                diag[0] = s[a]

        # ---- truth ----
        for a in range(3):
            for b in range(3):
                r_old[a, b] = R[a, b]
        _right_mul_exp(R, om[0] * dt, om[1] * dt, om[2] * dt, tmp_e, tmp_r)
        for a in range(3):
            P[a] = P[a] + (r_old[a, 0] * v[0] + r_old[a, 1] * v[1] + r_old[a, 2] * v[2]) * dt
        for i in range(n):
            if lv[i, 0] != 0.0 or lv[i, 1] != 0.0 or lv[i, 2] != 0.0:
                for a in range(3):
                    p[i, a] = p[i, a] + (r_old[a, 0] * lv[i, 0] + r_old[a, 1] * lv[i, 1] + r_old[a, 2] * lv[i, 2]) * dt

        # ---- divergence ----
        code = 0
        val = 0.0
        if _bad(_norm3(P[0], P[1], P[2])):
            code, val = 1, _norm3(P[0], P[1], P[2])
        elif _bad(abs(R[0, 0]) + abs(R[1, 1]) + abs(R[2, 2]) + abs(R[0, 1]) + abs(R[1, 2]) + abs(R[2, 0])):
            code, val = 2, R[0, 0]
        elif _bad(_norm3(Ph[0], Ph[1], Ph[2])):
            code, val = 3, _norm3(Ph[0], Ph[1], Ph[2])
        elif _bad(abs(Rh[0, 0]) + abs(Rh[1, 1]) + abs(Rh[2, 2]) + abs(Rh[0, 1]) + abs(Rh[1, 2]) + abs(Rh[2, 0])):
            code, val = 4, Rh[0, 0]
        elif _bad(_norm3(bo[0], bo[1], bo[2])):
            code, val = 6, _norm3(bo[0], bo[1], bo[2])
        elif _bad(_norm3(bv[0], bv[1], bv[2])):
            code, val = 7, _norm3(bv[0], bv[1], bv[2])
        elif _bad(_norm3(s[0], s[1], s[2])):
            code, val = 8, _norm3(s[0], s[1], s[2])
        else:
            for i in range(n):
                if _bad(_norm3(ph[i, 0], ph[i, 1], ph[i, 2])):
                    code, val = 5, _norm3(ph[i, 0], ph[i, 1], ph[i, 2])
                    break
                if _bad(_norm3(p[i, 0], p[i, 1], p[i, 2])):
                    code, val = 9, _norm3(p[i, 0], p[i, 1], p[i, 2])
                    break
        if code:
            status[0] = code
            status[1] = k + 1
            diag[1] = val
            return


def stream_chunks(streams, n_indices: int, n_landmarks: int, chunk: int):
    """Yield ``(k0, k1, z_om, z_v, z_y)`` noise blocks covering ``range(n_indices)``."""
    for k0 in range(0, n_indices, chunk):
        k1 = min(k0 + chunk, n_indices)
        m = k1 - k0
        yield (
            k0, k1,
            streams.gyro.standard_normal((m, 3)),
            streams.velocity.standard_normal((m, 3)),
            streams.landmark.standard_normal((m, n_landmarks, 3)),
        )
