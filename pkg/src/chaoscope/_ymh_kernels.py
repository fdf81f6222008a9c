"""Compiled inner loops for the two-mode Yang-Mills-Higgs Hamiltonian.

H = (p1^2 + p2^2)/2 + m (q1^2 + q2^2) + (c/2) q1^2 q2^2 with m = g^2 v^2
and c = g^2. State layout is (q1, q2, p1, p2). All loops use the
kick-drift-kick composition given by the ``kick``/``drift`` weight arrays.

Status codes: 0 ok, 1 diverged (non-finite or |z| > 1e12).
"""
import numpy as np
from numba import njit

BLOWUP = 1e12


@njit(cache=True)
def energy(s, m, c):
    return 0.5 * (s[2] * s[2] + s[3] * s[3]) + m * (s[0] * s[0] + s[1] * s[1]) + 0.5 * c * s[0] * s[0] * s[1] * s[1]


@njit(cache=True)
def _kick(s, dt, m, c):
    q1 = s[0]
    q2 = s[1]
    s[2] -= dt * (2.0 * m * q1 + c * q1 * q2 * q2)
    s[3] -= dt * (2.0 * m * q2 + c * q2 * q1 * q1)


@njit(cache=True)
def step(s, h, m, c, kick, drift):
    for i in range(drift.size):
        _kick(s, kick[i] * h, m, c)
        s[0] += drift[i] * h * s[2]
        s[1] += drift[i] * h * s[3]
    _kick(s, kick[kick.size - 1] * h, m, c)


@njit(cache=True)
def _tangent_kick(s, T, dt, m, c):
    q1 = s[0]
    q2 = s[1]
    h11 = 2.0 * m + c * q2 * q2
    h22 = 2.0 * m + c * q1 * q1
    h12 = 2.0 * c * q1 * q2
    for j in range(T.shape[1]):
        a = T[0, j]
        b = T[1, j]
        T[2, j] -= dt * (h11 * a + h12 * b)
        T[3, j] -= dt * (h12 * a + h22 * b)
    _kick(s, dt, m, c)


@njit(cache=True)
def tangent_step(s, T, h, m, c, kick, drift):
    for i in range(drift.size):
        _tangent_kick(s, T, kick[i] * h, m, c)
        d = drift[i] * h
        s[0] += d * s[2]
        s[1] += d * s[3]
        for j in range(T.shape[1]):
            T[0, j] += d * T[2, j]
            T[1, j] += d * T[3, j]
    _tangent_kick(s, T, kick[kick.size - 1] * h, m, c)


@njit(cache=True)
def _bad(s):
    for i in range(4):
        x = s[i]
        if not (abs(x) <= BLOWUP):
            return True
    return False


@njit(cache=True)
def run_trajectory(s0, h, n_steps, record_every, m, c, kick, drift):
    n_rec = n_steps // record_every + 1
    if n_steps % record_every:
        n_rec += 1
    out = np.empty((n_rec, 4))
    idx = np.empty(n_rec, dtype=np.int64)
    s = s0.copy()
    e0 = energy(s, m, c)
    scale = abs(e0) if e0 != 0.0 else 1.0
    max_err = 0.0
    out[0] = s
    idx[0] = 0
    r = 1
    for k in range(n_steps):
        step(s, h, m, c, kick, drift)
        if _bad(s):
            return out[:r], idx[:r], max_err, 1
        err = abs(energy(s, m, c) - e0) / scale
        if err > max_err:
            max_err = err
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            out[r] = s
            idx[r] = k + 1
            r += 1
    return out[:r], idx[:r], max_err, 0


@njit(cache=True)
def run_lyapunov(s0, T0, h, n_sub, n_renorm, m, c, kick, drift):
    """Benettin loop with modified Gram-Schmidt every ``n_sub`` steps.

    Returns (running exponent estimates per renormalisation, final state,
    max relative energy error, status, steps completed).
    """
    s = s0.copy()
    T = T0.copy()
    k_vec = T.shape[1]
    sums = np.zeros(k_vec)
    hist = np.zeros((n_renorm, k_vec))
    e0 = energy(s, m, c)
    scale = abs(e0) if e0 != 0.0 else 1.0
    max_err = 0.0
    interval = n_sub * h
    for r in range(n_renorm):
        for _ in range(n_sub):
            tangent_step(s, T, h, m, c, kick, drift)
            err = abs(energy(s, m, c) - e0) / scale
            if err > max_err:
                max_err = err
        if _bad(s):
            return hist[:r], s, max_err, 1, r * n_sub
        for j in range(k_vec):
            for i in range(j):
                dot = 0.0
                for a in range(4):
                    dot += T[a, i] * T[a, j]
                for a in range(4):
                    T[a, j] -= dot * T[a, i]
            nrm = 0.0
            for a in range(4):
                nrm += T[a, j] * T[a, j]
            nrm = np.sqrt(nrm)
            for a in range(4):
                T[a, j] /= nrm
            sums[j] += np.log(nrm)
        for j in range(k_vec):
            hist[r, j] = sums[j] / ((r + 1) * interval)
    return hist, s, max_err, 0, n_renorm * n_sub


@njit(cache=True)
def run_section(s0, h, n_steps, m, c, kick, drift, max_points, tol):
    """Record states at upward q1 = 0 crossings (p1 > 0).

    Each crossing is refined by bisection on a partial step taken from the
    last pre-crossing state until |q1| < tol. Integration itself continues
    on the fixed step grid.
    """
    pts = np.empty((max_points, 4))
    times = np.empty(max_points)
    s = s0.copy()
    prev = s0.copy()
    trial = s0.copy()
    e0 = energy(s, m, c)
    scale = abs(e0) if e0 != 0.0 else 1.0
    max_err = 0.0
    n = 0
    for k in range(n_steps):
        prev[:] = s
        step(s, h, m, c, kick, drift)
        if _bad(s):
            return pts[:n], times[:n], max_err, 1
        err = abs(energy(s, m, c) - e0) / scale
        if err > max_err:
            max_err = err
        if prev[0] < 0.0 and s[0] >= 0.0 and n < max_points:
            lo = 0.0
            hi = h
            tc = h
            trial[:] = s
            for _ in range(200):
                if abs(trial[0]) < tol:
                    break
                mid = 0.5 * (lo + hi)
                tc = mid
                trial[:] = prev
                step(trial, mid, m, c, kick, drift)
                if trial[0] < 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-18:
                    break
            if trial[2] > 0.0:
                pts[n] = trial
                times[n] = k * h + tc
                n += 1
    return pts[:n], times[:n], max_err, 0
