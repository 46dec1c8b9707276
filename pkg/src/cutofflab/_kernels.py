"""Hot numeric kernels: path simulation and phase-angle integration.

Both kernels are written as plain scalar-loop Python compiled with numba
``@njit`` by default.  Setting the environment variable
``CUTOFFLAB_NO_NUMBA=1`` (or running without numba installed) selects the
fallback path: a vectorized numpy implementation for the path simulator and
the uncompiled loop for the phase integrator.  Each backend is bitwise
deterministic; across backends results agree up to 1-ulp differences of the
vectorized power function.  ``benchmarks/bench_kernels.py`` compares their
speed.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["USING_NUMBA", "em_paths", "em_paths_numpy", "phase_rk4", "phase_rk4_py"]

_DISABLED = os.environ.get("CUTOFFLAB_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

if not _DISABLED:
    try:
        from numba import njit, prange

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False
        prange = range
else:
    USING_NUMBA = False
    prange = range


def _em_paths_loop(x0, noise, dt, gamma, amp, obs_idx, out):
    """Explicit Euler steps of one path block; paths run in parallel.

    ``obs_idx`` holds increasing step indices at which states are recorded
    (0 records the initial state).  Each path touches only its own column
    and its own slot of the per-path maxima, so the parallel loop is
    race-free and deterministic.  Returns the largest |x| visited, for the
    step-stability report.
    """
    n_paths = x0.shape[0]
    n_steps = noise.shape[1]
    n_obs = obs_idx.shape[0]
    maxima = np.zeros(n_paths)
    for b in prange(n_paths):
        xb = x0[b]
        j = 0
        while j < n_obs and obs_idx[j] == 0:
            out[j, b] = xb
            j += 1
        mx = abs(xb)
        for s in range(n_steps):
            sgn = 1.0 if xb > 0.0 else (-1.0 if xb < 0.0 else 0.0)
            xb = xb - dt * sgn * abs(xb) ** gamma + amp * noise[b, s]
            if abs(xb) > mx:
                mx = abs(xb)
            while j < n_obs and obs_idx[j] == s + 1:
                out[j, b] = xb
                j += 1
        maxima[b] = mx
    max_abs = 0.0
    for b in range(n_paths):
        if maxima[b] > max_abs:
            max_abs = maxima[b]
    return max_abs


def em_paths_numpy(x0, noise, dt, gamma, amp, obs_idx, out):
    """Vectorized-over-paths fallback of `_em_paths_loop`; same update expression."""
    x = x0.copy()
    n_obs = obs_idx.shape[0]
    j = 0
    while j < n_obs and obs_idx[j] == 0:
        out[j] = x
        j += 1
    max_abs = float(np.max(np.abs(x)))
    for s in range(noise.shape[1]):
        x = x - dt * np.sign(x) * np.abs(x) ** gamma + amp * noise[:, s]
        step_max = float(np.max(np.abs(x)))
        if step_max > max_abs:
            max_abs = step_max
        while j < n_obs and obs_idx[j] == s + 1:
            out[j] = x
            j += 1
    return max_abs


def _monomial_sum(coeffs, powers, t):
    acc = 0.0
    for i in range(coeffs.shape[0]):
        acc += coeffs[i] * t ** powers[i]
    return acc


def _phase_rhs(f_c, f_p, g_c, g_p, t, theta):
    f = _monomial_sum(f_c, f_p, t)
    g = _monomial_sum(g_c, g_p, t)
    s = math.sin(theta)
    c = math.cos(theta)
    d_theta = -1.0 - (g - 1.0) * c * c + 0.5 * f * math.sin(2.0 * theta)
    d_logr = s * c * (1.0 - g) + f * s * s
    return d_theta, d_logr


def _phase_rk4_loop(
    f_c, f_p, g_c, g_p, t0, theta0, horizon, base_step, tail_start, stride,
    out_t, out_th, out_lr, t_origin, t_sign,
):
    """Classical one-step 4th-order integration of (theta, log r).

    Integrates over an internal variable s in [t0, horizon]; the physical
    time is ``t_origin + t_sign * s`` and the right side picks up the
    factor t_sign, so ``t_sign = -1`` runs the flow in reverse (used to
    track the separatrix branch, which repels forward in time).  The step
    follows min(base_step * (1 + 0.1*(s-t0)), 1.5/rate) where the rate
    bounds the angle velocity and the attraction strength; a step whose
    angle increment exceeds 0.1 is halved and retried.  With ``stride > 0``
    every stride-th accepted point is written to the output arrays.  Tail
    extrema of log r are tracked for s >= tail_start.  Returns
    (n_recorded, theta_end, logr_end, tail_min, tail_max, n_accepted,
    status) with status 0 ok, 1 step underflow, 2 halving limit.
    """
    s = t0
    theta = theta0
    logr = 0.0
    n_acc = 0
    count = 0
    tail_min = 1e308
    tail_max = -1e308
    status = 0
    if stride > 0:
        out_t[0] = t_origin + t_sign * s
        out_th[0] = theta
        out_lr[0] = logr
        count = 1
    if s >= tail_start:
        tail_min = logr
        tail_max = logr
    while s < horizon:
        tau = t_origin + t_sign * s
        f = _monomial_sum(f_c, f_p, tau)
        g = _monomial_sum(g_c, g_p, tau)
        rate = max(1.0, abs(f), abs(g))
        dt = min(base_step * (1.0 + 0.1 * (s - t0)), 1.5 / rate, horizon - s)
        theta_new = theta
        logr_inc = 0.0
        accepted = False
        for _attempt in range(64):
            k1t, k1r = _phase_rhs(f_c, f_p, g_c, g_p, t_origin + t_sign * s, theta)
            k2t, k2r = _phase_rhs(
                f_c, f_p, g_c, g_p, t_origin + t_sign * (s + 0.5 * dt), theta + 0.5 * dt * t_sign * k1t
            )
            k3t, k3r = _phase_rhs(
                f_c, f_p, g_c, g_p, t_origin + t_sign * (s + 0.5 * dt), theta + 0.5 * dt * t_sign * k2t
            )
            k4t, k4r = _phase_rhs(
                f_c, f_p, g_c, g_p, t_origin + t_sign * (s + dt), theta + dt * t_sign * k3t
            )
            theta_new = theta + t_sign * dt * (k1t + 2.0 * k2t + 2.0 * k3t + k4t) / 6.0
            logr_inc = t_sign * dt * (k1r + 2.0 * k2r + 2.0 * k3r + k4r) / 6.0
            if abs(theta_new - theta) <= 0.1:
                accepted = True
                break
            dt *= 0.5
            if dt <= 1e-13 * (1.0 + abs(s)):
                status = 1
                break
        if not accepted:
            if status == 0:
                status = 2
            break
        s += dt
        theta = theta_new
        logr += logr_inc
        n_acc += 1
        if s >= tail_start:
            if logr < tail_min:
                tail_min = logr
            if logr > tail_max:
                tail_max = logr
        if stride > 0 and count < out_t.shape[0] and (n_acc % stride == 0 or s >= horizon):
            out_t[count] = t_origin + t_sign * s
            out_th[count] = theta
            out_lr[count] = logr
            count += 1
    return count, theta, logr, tail_min, tail_max, n_acc, status


phase_rk4_py = _phase_rk4_loop

if USING_NUMBA:
    _monomial_sum = njit(cache=True)(_monomial_sum)
    _phase_rhs = njit(cache=True)(_phase_rhs)
    em_paths = njit(parallel=True, cache=True)(_em_paths_loop)
    phase_rk4 = njit(cache=True)(_phase_rk4_loop)
else:
    em_paths = em_paths_numpy
    phase_rk4 = _phase_rk4_loop
