"""Sample-size sweeps of the convergence metrics delta(M), Delta(M),
epsilon(M) and the entropy trajectory, plus the ergodic-threshold locator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamatrix import DataMatrix
from .rmtstats import GOE_R_MEAN, r_statistics
from .spectra import (
    InsufficientSpectrumError,
    Spectrum,
    detect_bulk,
    eigenvalues,
    fit_power_law,
    gram,
    spectral_entropy,
)
from .synth import RngSeed

NOT_CONVERGED = -1
PLATEAU_FRACTION = 0.2
PLATEAU_POINTS = 3


@dataclass(frozen=True)
class ConvergenceSweep:
    m_values: np.ndarray
    delta: np.ndarray  # |<r>_M - r_GOE| / r_GOE, NaN where skipped
    Delta: np.ndarray  # |alpha_M - alpha_full|
    epsilon: np.ndarray  # ||Sigma_M - Sigma_full||_2 / ||Sigma_full||_2
    entropy: np.ndarray
    delta_se: np.ndarray
    Delta_se: np.ndarray
    alpha_full: float
    entropy_full: float
    seeds_per_point: int


def spectral_norm(a: np.ndarray, tol: float = 1e-6, max_iter: int = 5000) -> float:
    """Largest singular value of a symmetric matrix by power iteration."""
    rng = np.random.Generator(np.random.Philox(key=0xA5))
    v = rng.standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - prev) <= tol * norm:
            break
        prev = norm
    return float(norm)


def _bulk_spectrum(x: np.ndarray, M: int, i_start: int) -> Spectrum:
    g = x @ x.T / M
    g = (g + g.T) / 2.0
    return detect_bulk(eigenvalues(g, M=M), i_start=i_start)


def sweep(
    x_full: DataMatrix,
    m_values,
    seeds_per_point: int = 5,
    seed: RngSeed = RngSeed(),
    i_start: int = 10,
) -> ConvergenceSweep:
    """Subsample column subsets at each M and average the three metrics.

    Subsets are drawn without replacement, independently per (M, seed
    replicate). Metrics that need more spectrum than a small subset can
    provide are recorded as NaN.
    """
    m_values = np.asarray(sorted(int(m) for m in m_values))
    if m_values[-1] > x_full.M:
        raise ValueError(f"max(m_values)={m_values[-1]} exceeds dataset M={x_full.M}")
    if seeds_per_point < 1:
        raise ValueError("seeds_per_point must be >= 1")

    full = _bulk_spectrum(x_full.values, x_full.M, i_start)
    alpha_full = fit_power_law(full).alpha
    entropy_full = spectral_entropy(full)
    sigma_full = x_full.values @ x_full.values.T / x_full.M
    norm_full = spectral_norm(sigma_full)

    shape = (m_values.size, seeds_per_point)
    delta = np.full(shape, np.nan)
    Delta = np.full(shape, np.nan)
    epsv = np.full(shape, np.nan)
    ent = np.full(shape, np.nan)

    stream = 0
    for mi, m in enumerate(m_values):
        for si in range(seeds_per_point):
            stream += 1
            rng = seed.with_stream(stream).generator()
            if m == x_full.M and seeds_per_point == 1:
                cols = np.arange(x_full.M)
            else:
                cols = rng.choice(x_full.M, size=m, replace=False)
            sub = x_full.values[:, cols]
            sigma_m = sub @ sub.T / m
            epsv[mi, si] = spectral_norm(sigma_m - sigma_full) / norm_full
            try:
                spec = _bulk_spectrum(sub, int(m), i_start)
                delta[mi, si] = abs(r_statistics(spec).mean - GOE_R_MEAN) / GOE_R_MEAN
                Delta[mi, si] = abs(fit_power_law(spec).alpha - alpha_full)
                ent[mi, si] = spectral_entropy(spec)
            except (InsufficientSpectrumError, ValueError):
                pass  # subset too small for bulk statistics; leave NaN

    def _mean(a):
        return np.nanmean(a, axis=1)

    def _se(a):
        with np.errstate(invalid="ignore"):
            return np.nanstd(a, axis=1) / np.sqrt(seeds_per_point)

    return ConvergenceSweep(
        m_values=m_values,
        delta=_mean(delta),
        Delta=_mean(Delta),
        epsilon=_mean(epsv),
        entropy=_mean(ent),
        delta_se=_se(delta),
        Delta_se=_se(Delta),
        alpha_full=alpha_full,
        entropy_full=entropy_full,
        seeds_per_point=seeds_per_point,
    )


def locate_mcrit(sw: ConvergenceSweep, metric: str = "delta") -> int:
    """Smallest M whose metric is within 20% of the terminal plateau.

    The plateau is the mean of the last three points. Returns NOT_CONVERGED
    (-1) when the metric is still decreasing at the largest M.
    """
    series = {"delta": sw.delta, "Delta": sw.Delta}.get(metric)
    if series is None:
        raise ValueError("metric must be 'delta' or 'Delta'")
    valid = ~np.isnan(series)
    m = sw.m_values[valid]
    y = series[valid]
    if y.size < 5:
        raise ValueError("sweep needs at least 5 usable points")
    plateau = float(np.mean(y[-PLATEAU_POINTS:]))
    tail_slope = y[-1] - y[-PLATEAU_POINTS]
    head = y[: max(2, y.size // 3)]
    if not np.any(np.diff(head) < 0):
        return NOT_CONVERGED  # no decreasing head: nothing converged
    if plateau < 0 or tail_slope < -PLATEAU_FRACTION * plateau - 1e-300:
        return NOT_CONVERGED  # still decreasing at the largest M
    # smallest M where the metric has come down into the plateau band
    within = y <= (1.0 + PLATEAU_FRACTION) * plateau + 1e-300
    for i in range(y.size):
        if within[i]:
            return int(m[i])
    return NOT_CONVERGED


def entropy_trajectory(sw: ConvergenceSweep) -> dict:
    """Normalized entropy and metric series for the entropy-vs-convergence plots."""
    if sw.entropy_full == 0:
        raise ValueError("zero full-dataset entropy")
    out = {"normalized_entropy": sw.entropy / sw.entropy_full}
    ref_d = sw.delta[~np.isnan(sw.delta)]
    ref_D = sw.Delta[~np.isnan(sw.Delta)]
    out["normalized_delta"] = sw.delta / ref_d[-1] if ref_d.size and ref_d[-1] > 0 else None
    out["normalized_Delta"] = sw.Delta / ref_D[-1] if ref_D.size and ref_D[-1] > 0 else None
    return out
