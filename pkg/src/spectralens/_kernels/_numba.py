"""Numba-jitted implementations of the hot kernels."""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def truncated_power_sum(s_scaled, alpha, n_terms):
    ka = np.empty(n_terms, dtype=np.float64)
    for k in range(1, n_terms + 1):
        ka[k - 1] = float(k) ** alpha
    out = np.empty(s_scaled.size, dtype=np.float64)
    for i in prange(s_scaled.size):
        s = s_scaled[i]
        acc = 0.0
        for k in range(n_terms):
            acc += ka[k] * np.exp(-s * (k + 1))
        out[i] = acc
    return out


@njit(cache=True, parallel=True)
def sff_abs2(levels, taus):
    out = np.empty(taus.size, dtype=np.float64)
    for i in prange(taus.size):
        w = 2.0 * np.pi * taus[i]
        re = 0.0
        im = 0.0
        for j in range(levels.size):
            re += np.cos(w * levels[j])
            im -= np.sin(w * levels[j])
        out[i] = re * re + im * im
    return out


@njit(cache=True, parallel=True)
def stieltjes_fixed_point(z, gamma, pop_vals, pop_weights, g0, damping, tol, max_iter):
    n = z.size
    G = np.empty(n, dtype=np.complex128)
    iters = np.zeros(n, dtype=np.int64)
    resid = np.empty(n, dtype=np.float64)
    for i in prange(n):
        g = g0[i]
        zi = z[i]
        for it in range(max_iter):
            F = 0.0 + 0.0j
            for j in range(pop_vals.size):
                F += pop_weights[j] * pop_vals[j] / (1.0 + g * pop_vals[j])
            new = 1.0 / (-zi + gamma * F)
            delta = abs(new - g)
            g = damping * new + (1.0 - damping) * g
            iters[i] = it + 1
            if delta < tol:
                break
        F = 0.0 + 0.0j
        for j in range(pop_vals.size):
            F += pop_weights[j] * pop_vals[j] / (1.0 + g * pop_vals[j])
        resid[i] = abs(1.0 / (-zi + gamma * F) - g)
        G[i] = g
    return G, iters, resid
