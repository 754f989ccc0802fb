"""Local and global RMT diagnostics: unfolding, level spacings,
r-statistics, the spectral form factor, and the GOE/Poisson reference laws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev

from ._kernels import sff_abs2
from .spectra import DensityHistogram, Spectrum

UNFOLD_DEGREE = 12
SPACING_RANGE = (0.0, 4.0)
GOE_R_MEAN = 4.0 - 2.0 * np.sqrt(3.0)


@dataclass(frozen=True)
class UnfoldedSpectrum:
    """Ascending unfolded levels with unit mean spacing."""

    levels: np.ndarray
    staircase_poly: Chebyshev
    source_range: tuple

    @property
    def mean_spacing(self) -> float:
        return float(np.diff(self.levels).mean())


@dataclass(frozen=True)
class SpacingSample:
    spacings: np.ndarray
    histogram: DensityHistogram


@dataclass(frozen=True)
class RStatistics:
    values: np.ndarray
    mean: float
    histogram: DensityHistogram


@dataclass(frozen=True)
class SffCurve:
    taus: np.ndarray
    values: np.ndarray
    normalization: float
    members: int


def unfold(s: Spectrum, degree: int = UNFOLD_DEGREE) -> UnfoldedSpectrum:
    """Map bulk eigenvalues to unit-mean-spacing levels.

    Fits a degree-12 Chebyshev polynomial (internally rescaled domain, so
    the fit is well conditioned where a raw monomial Vandermonde is not)
    to the staircase count and evaluates it at each eigenvalue. A
    cumulative-max envelope repairs any local non-monotonicity, which would
    otherwise create negative spacings.
    """
    lam = np.sort(np.unique(s.bulk))  # ascending, exact degeneracies dropped
    n = lam.size
    if n < 100:
        raise ValueError(f"bulk of {n} levels is too small to unfold (need >= 100)")
    staircase = np.arange(1, n + 1, dtype=np.float64)
    poly = Chebyshev.fit(lam, staircase, degree)
    levels = np.maximum.accumulate(poly(lam))
    out = UnfoldedSpectrum(levels, poly, s.bulk_range)
    if abs(out.mean_spacing - 1.0) > 0.05:
        raise ValueError(
            f"unfolding quality gate failed: mean spacing {out.mean_spacing:.4f}"
        )
    return out


def level_spacing(u: UnfoldedSpectrum, bins: int = 32) -> SpacingSample:
    """Consecutive unfolded spacings, histogrammed over [0, 4]."""
    spacings = np.diff(u.levels)
    if spacings.size < 100:
        raise ValueError("need at least 100 levels for a spacing distribution")
    inside = spacings[(spacings >= SPACING_RANGE[0]) & (spacings <= SPACING_RANGE[1])]
    counts, edges = np.histogram(inside, bins=bins, range=SPACING_RANGE)
    masses = counts / counts.sum()
    return SpacingSample(spacings, DensityHistogram(edges, masses, "raw"))


def wigner_surmise(s, beta: int = 1):
    """GOE spacing density (pi/2) s exp(-pi s^2 / 4)."""
    if beta != 1:
        raise ValueError("only the GOE surmise (beta=1) is supported")
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("spacing must be nonnegative")
    return (np.pi / 2.0) * s * np.exp(-np.pi * s**2 / 4.0)


def poisson_spacing(s):
    """Poisson (integrable) spacing density exp(-s)."""
    s = np.asarray(s, dtype=np.float64)
    return np.exp(-s)


def r_statistics(s: Spectrum, bins: int = 32) -> RStatistics:
    """Adjacent-spacing ratios min/max on the raw (not unfolded) bulk."""
    lam = np.sort(s.bulk)  # ascending raw bulk
    if lam.size < 50:
        raise ValueError("need a bulk of at least 50 eigenvalues")
    sp = np.diff(lam)
    a, b = sp[:-1], sp[1:]
    both_zero = (a == 0) & (b == 0)
    a, b = a[~both_zero], b[~both_zero]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.minimum(a, b) / np.maximum(a, b)
    counts, edges = np.histogram(r, bins=bins, range=(0.0, 1.0))
    masses = counts / counts.sum()
    return RStatistics(r, float(r.mean()), DensityHistogram(edges, masses, "raw"))


def goe_r_density(r):
    """GOE ratio density (27/4)(r + r^2) / (1 + r + r^2)^(5/2) on [0, 1]."""
    r = np.asarray(r, dtype=np.float64)
    if np.any((r < 0) | (r > 1)):
        raise ValueError("r must lie in [0, 1]")
    return (27.0 / 4.0) * (r + r**2) / (1.0 + r + r**2) ** 2.5


def spectral_form_factor(
    members,
    taus,
    smoothing_width: float = 0.0,
) -> SffCurve:
    """Ensemble-averaged SFF K(tau) = <|sum_i exp(-2 pi i e_i tau)|^2> / Z.

    `members` is one UnfoldedSpectrum or a sequence of them; Z is the level
    count (unit density after unfolding). `smoothing_width` > 0 applies a
    boxcar in tau of that width; a single realization of K(tau) is
    exponentially distributed about its mean, so either ensemble members or
    tau-smoothing is needed for a readable curve.
    """
    if isinstance(members, UnfoldedSpectrum):
        members = [members]
    members = list(members)
    if not members:
        raise ValueError("need at least one unfolded spectrum")
    taus = np.asarray(taus, dtype=np.float64)
    if taus.size == 0 or np.any(taus <= 0):
        raise ValueError("tau grid must be positive and non-empty")
    acc = np.zeros(taus.size)
    for u in members:
        acc += sff_abs2(np.ascontiguousarray(u.levels), taus) / u.levels.size
    values = acc / len(members)
    if smoothing_width > 0:
        step = np.min(np.diff(taus)) if taus.size > 1 else smoothing_width
        w = max(1, int(round(smoothing_width / step)))
        kernel = np.ones(w) / w
        values = np.convolve(values, kernel, mode="same")
    z = float(np.mean([u.levels.size for u in members]))
    return SffCurve(taus, values, z, len(members))


def goe_sff(tau):
    """GOE form factor 2 tau - tau ln(1 + 2 tau) for tau < 1, else 1."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    return np.where(tau < 1.0, 2.0 * tau - tau * np.log1p(2.0 * tau), 1.0)
