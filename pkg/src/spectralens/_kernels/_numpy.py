"""Pure-numpy implementations of the hot kernels.

Selected when numba is unavailable or SPECTRALENS_NO_NUMBA is set.
Semantics must match `_numba` exactly (same formulas, same tolerances).
"""

import numpy as np


def truncated_power_sum(s_scaled, alpha, n_terms):
    """sum_{k=1}^{n_terms} k**alpha * exp(-s*k) for each entry of s_scaled.

    `s_scaled` is s/d. Chunked to keep the (len(s), n_terms) outer product
    from blowing up memory at large d.
    """
    s_scaled = np.asarray(s_scaled, dtype=np.float64)
    k = np.arange(1, n_terms + 1, dtype=np.float64)
    ka = k**alpha
    out = np.empty(s_scaled.size, dtype=np.float64)
    chunk = max(1, int(4e6) // max(n_terms, 1))
    for lo in range(0, s_scaled.size, chunk):
        hi = min(lo + chunk, s_scaled.size)
        out[lo:hi] = np.exp(-np.outer(s_scaled[lo:hi], k)) @ ka
    return out


def sff_abs2(levels, taus):
    """|sum_i exp(-2 pi i e_i tau)|**2 for each tau."""
    taus = np.asarray(taus, dtype=np.float64)
    levels = np.asarray(levels, dtype=np.float64)
    out = np.empty(taus.size, dtype=np.float64)
    chunk = max(1, int(4e6) // max(levels.size, 1))
    for lo in range(0, taus.size, chunk):
        hi = min(lo + chunk, taus.size)
        phases = np.exp(-2j * np.pi * np.outer(taus[lo:hi], levels))
        out[lo:hi] = np.abs(phases.sum(axis=1)) ** 2
    return out


def stieltjes_fixed_point(z, gamma, pop_vals, pop_weights, g0, damping, tol, max_iter):
    """Damped fixed-point solve of G = 1/(-z + gamma * F(G)) per grid point.

    F(G) = sum_j w_j * p_j / (1 + G p_j) over the population measure
    (p_j, w_j). Returns (G, iterations, residuals).
    """
    z = np.asarray(z, dtype=np.complex128)
    p = np.asarray(pop_vals, dtype=np.float64)
    w = np.asarray(pop_weights, dtype=np.float64)
    G = np.asarray(g0, dtype=np.complex128).copy()
    active = np.ones(z.size, dtype=bool)
    iters = np.zeros(z.size, dtype=np.int64)
    for it in range(max_iter):
        if not active.any():
            break
        Ga = G[active]
        F = ((w * p) / (1.0 + Ga[:, None] * p)).sum(axis=1)
        new = 1.0 / (-z[active] + gamma * F)
        delta = np.abs(new - Ga)
        G[active] = damping * new + (1.0 - damping) * Ga
        iters[active] = it + 1
        still = delta >= tol
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
    F = ((w * p) / (1.0 + G[:, None] * p)).sum(axis=1)
    resid = np.abs(1.0 / (-z + gamma * F) - G)
    return G, iters, resid
