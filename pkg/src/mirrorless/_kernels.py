"""Adaptive Runge-Kutta kernel for linear master-equation propagation.

The hot loop of every time-domain computation is the embedded Dormand-Prince
5(4) integration of dy/dt = L y for a dense complex superoperator L.  The
kernel is JIT-compiled with numba when available; setting the environment
variable ``MIRRORLESS_PURE_NUMPY=1`` (or missing numba) selects a pure-numpy
fallback with identical semantics.  ``bench/benchmark_kernels.py`` compares
the two paths.

Steps are clamped to land exactly on every requested output time, so sampled
trajectories carry no interpolation error.  An optional per-step repair
re-Hermitizes the propagated matrix (rho <- (rho + rho^dagger)/2); trace is
never renormalized.
"""

from __future__ import annotations

import os

import numpy as np

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1.0 / 5.0
_A[2, :2] = (3.0 / 40.0, 9.0 / 40.0)
_A[3, :3] = (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0)
_A[4, :4] = (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0)
_A[5, :5] = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
             -5103.0 / 18656.0)
_A[6, :6] = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
             11.0 / 84.0)
_B5 = _A[6, :7].copy()  # 5th-order weights (FSAL row)
_B4 = np.array([5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
                -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0])
_E = _B5 - _B4


def _rk45_dense(L, y0, t_grid, rtol, atol, hermitize_dim, max_steps):
    """Integrate dy/dt = L y, recording y at every t in t_grid.

    t_grid must be increasing with t_grid[0] = start time.  Returns
    (Y, status, n_steps) where Y[k] is the state at t_grid[k].
    """
    n = y0.shape[0]
    n_out = t_grid.shape[0]
    out = np.empty((n_out, n), dtype=np.complex128)
    out[0] = y0

    y = y0.copy()
    t = t_grid[0]
    k = np.empty((7, n), dtype=np.complex128)
    scale = np.empty(n, dtype=np.float64)

    # initial step from the scale of L
    lnorm = 0.0
    for i in range(L.shape[0]):
        row = 0.0
        for j in range(L.shape[1]):
            row += abs(L[i, j])
        if row > lnorm:
            lnorm = row
    h = 0.1 / lnorm if lnorm > 0.0 else (t_grid[n_out - 1] - t)
    if h <= 0.0:
        h = 1e-6

    i_out = 1
    n_steps = 0
    status = STATUS_OK
    while i_out < n_out:
        t_target = t_grid[i_out]
        while t < t_target:
            if n_steps >= max_steps:
                return out, STATUS_MAX_STEPS, n_steps
            h_step = h if t + h <= t_target else t_target - t
            clamped = h_step < h

            k[0] = np.dot(L, y)
            for s in range(1, 7):
                ys = y.copy()
                for j in range(s):
                    a = _A[s, j]
                    if a != 0.0:
                        ys += (h_step * a) * k[j]
                k[s] = np.dot(L, ys)

            y5 = y.copy()
            err = np.zeros(n, dtype=np.complex128)
            for j in range(7):
                if _B5[j] != 0.0:
                    y5 += (h_step * _B5[j]) * k[j]
                if _E[j] != 0.0:
                    err += (h_step * _E[j]) * k[j]

            # weighted rms error norm
            acc = 0.0
            for i in range(n):
                m = abs(y[i])
                m2 = abs(y5[i])
                if m2 > m:
                    m = m2
                scale[i] = atol + rtol * m
                q = abs(err[i]) / scale[i]
                acc += q * q
            enorm = np.sqrt(acc / n)

            if enorm <= 1.0:
                t = t + h_step
                y = y5
                if hermitize_dim > 0:
                    m_ = y.reshape(hermitize_dim, hermitize_dim)
                    m_ = 0.5 * (m_ + np.conj(m_.T))
                    y = m_.reshape(n).copy()
                n_steps += 1
                fac = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
                h_new = h_step * fac
                if not clamped or h_new > h:
                    h = h_new
            else:
                h = h_step * min(1.0, max(0.2, 0.9 * enorm ** -0.2))

            if h < 1e-14 * max(abs(t), 1.0):
                return out, STATUS_STEP_UNDERFLOW, n_steps
        out[i_out] = y
        i_out += 1
    return out, status, n_steps


def _rk45_record(L, y0, dt, n_out, w, rtol, atol, max_steps):
    """Integrate dy/dt = L y on a uniform grid, recording only c_k = w . y(k dt).

    Used for two-time correlation traces where storing full states would be
    wasteful.  Returns (c, y_final, status, n_steps); c[0] = w . y0.
    """
    n = y0.shape[0]
    c = np.empty(n_out, dtype=np.complex128)
    c[0] = np.dot(w, y0)

    y = y0.copy()
    t = 0.0
    k = np.empty((7, n), dtype=np.complex128)

    lnorm = 0.0
    for i in range(L.shape[0]):
        row = 0.0
        for j in range(L.shape[1]):
            row += abs(L[i, j])
        if row > lnorm:
            lnorm = row
    h = 0.1 / lnorm if lnorm > 0.0 else dt
    n_steps = 0
    for i_out in range(1, n_out):
        t_target = i_out * dt
        while t < t_target:
            if n_steps >= max_steps:
                return c, y, STATUS_MAX_STEPS, n_steps
            h_step = h if t + h <= t_target else t_target - t
            clamped = h_step < h

            k[0] = np.dot(L, y)
            for s in range(1, 7):
                ys = y.copy()
                for j in range(s):
                    a = _A[s, j]
                    if a != 0.0:
                        ys += (h_step * a) * k[j]
                k[s] = np.dot(L, ys)

            y5 = y.copy()
            err = np.zeros(n, dtype=np.complex128)
            for j in range(7):
                if _B5[j] != 0.0:
                    y5 += (h_step * _B5[j]) * k[j]
                if _E[j] != 0.0:
                    err += (h_step * _E[j]) * k[j]

            acc = 0.0
            for i in range(n):
                m = abs(y[i])
                m2 = abs(y5[i])
                if m2 > m:
                    m = m2
                q = abs(err[i]) / (atol + rtol * m)
                acc += q * q
            enorm = np.sqrt(acc / n)

            if enorm <= 1.0:
                t = t + h_step
                y = y5
                n_steps += 1
                fac = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
                h_new = h_step * fac
                if not clamped or h_new > h:
                    h = h_new
            else:
                h = h_step * min(1.0, max(0.2, 0.9 * enorm ** -0.2))

            if h < 1e-14 * max(abs(t), 1.0):
                return c, y, STATUS_STEP_UNDERFLOW, n_steps
        c[i_out] = np.dot(w, y)
    return c, y, STATUS_OK, n_steps


_USE_NUMBA = os.environ.get("MIRRORLESS_PURE_NUMPY", "0") != "1"
rk45_numpy = _rk45_dense
rk45_record_numpy = _rk45_record
rk45_jit = None
rk45_record_jit = None
if _USE_NUMBA:
    try:
        from numba import njit

        rk45_jit = njit(cache=True)(_rk45_dense)
        rk45_record_jit = njit(cache=True)(_rk45_record)
    except ImportError:
        rk45_jit = None
        rk45_record_jit = None

rk45 = rk45_jit if rk45_jit is not None else rk45_numpy
rk45_record = rk45_record_jit if rk45_record_jit is not None else rk45_record_numpy
USING_NUMBA = rk45_jit is not None


def integrate_sampled(L, y0, t_grid, rtol=1e-9, atol=1e-11, hermitize_dim=0,
                      max_steps=20_000_000):
    """Typed wrapper around the selected RK kernel.

    Raises RuntimeError on step underflow or step-budget exhaustion.
    """
    L = np.ascontiguousarray(L, dtype=np.complex128)
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    t_grid = np.ascontiguousarray(t_grid, dtype=np.float64)
    if t_grid.ndim != 1 or t_grid.shape[0] < 1:
        raise ValueError("t_grid must be a nonempty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    out, status, n_steps = rk45(L, y0, t_grid, float(rtol), float(atol),
                                int(hermitize_dim), int(max_steps))
    if status == STATUS_STEP_UNDERFLOW:
        raise RuntimeError(f"integration step underflow after {n_steps} steps")
    if status == STATUS_MAX_STEPS:
        raise RuntimeError(f"integration exceeded {max_steps} steps")
    return out


def record_observable(L, y0, dt, n_out, w, rtol=1e-9, atol=1e-12,
                      max_steps=50_000_000):
    """Typed wrapper around the recording kernel; returns (c, y_final)."""
    L = np.ascontiguousarray(L, dtype=np.complex128)
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    c, y, status, n_steps = rk45_record(L, y0, float(dt), int(n_out), w,
                                        float(rtol), float(atol), int(max_steps))
    if status == STATUS_STEP_UNDERFLOW:
        raise RuntimeError(f"integration step underflow after {n_steps} steps")
    if status == STATUS_MAX_STEPS:
        raise RuntimeError(f"integration exceeded {max_steps} steps")
    return c, y
