"""Gram matrices, eigendecomposition, bulk detection, power-law fits,
spectral entropy, and histogram/KL comparisons.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .datamatrix import DataMatrix

ZERO_TOL = 1e-10  # relative numerical-zero clamp for eigenvalues
FLOOR_TOL = 1e-12  # bulk termination floor relative to the top eigenvalue
KL_SMOOTHING = 1e-10


class InsufficientSpectrumError(ValueError):
    """Too few usable eigenvalues for the requested diagnostic."""


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric d x d empirical covariance with sample-count metadata."""

    matrix: np.ndarray
    M: int


@dataclass(frozen=True)
class Spectrum:
    """Descending nonnegative eigenvalues with optional bulk index range.

    `bulk_range` is a 1-based inclusive (i_start, d_bulk) pair.
    """

    eigenvalues: np.ndarray
    d: int
    M: int
    bulk_range: tuple | None = None
    # Gram spectra are nonnegative and get the zero clamp; sign-symmetric
    # reference ensembles (Wigner matrices) opt out.
    nonnegative: bool = True

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        if lam.size != self.d:
            raise ValueError("eigenvalue count must equal d")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        if self.nonnegative:
            lmax = lam[0] if lam.size else 0.0
            if np.any(lam < -ZERO_TOL * max(lmax, 1e-300)):
                raise ValueError("significantly negative eigenvalue in spectrum")
            lam = np.where(lam < 0, 0.0, lam)
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def bulk(self) -> np.ndarray:
        """Bulk eigenvalues (descending); requires bulk_range."""
        if self.bulk_range is None:
            raise ValueError("bulk_range not set; run detect_bulk first")
        i0, i1 = self.bulk_range
        return self.eigenvalues[i0 - 1 : i1]

    def with_bulk(self, i_start: int, i_end: int) -> "Spectrum":
        if not 1 <= i_start < i_end <= self.d:
            raise ValueError(f"invalid bulk range ({i_start}, {i_end}) for d={self.d}")
        return replace(self, bulk_range=(int(i_start), int(i_end)))


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    amplitude: float
    r_squared: float
    fit_range: tuple


@dataclass(frozen=True)
class DensityHistogram:
    bin_edges: np.ndarray
    masses: np.ndarray
    normalization: str = "raw"

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        masses = np.asarray(self.masses, dtype=np.float64)
        if masses.size != edges.size - 1:
            raise ValueError("need len(masses) == len(bin_edges) - 1")
        if np.any(masses < 0):
            raise ValueError("negative histogram mass")
        total = masses.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"masses must sum to 1, got {total}")
        edges.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "masses", masses)

    def density(self) -> np.ndarray:
        return self.masses / np.diff(self.bin_edges)


def gram(x: DataMatrix) -> GramMatrix:
    """Feature-feature covariance (1/M) X X^T, exactly symmetrized."""
    if not x.centered:
        warnings.warn("computing Gram matrix on uncentered data", stacklevel=2)
    g = x.values @ x.values.T / x.M
    g = (g + g.T) / 2.0
    return GramMatrix(g, x.M)


def eigenvalues(g: GramMatrix | np.ndarray, M: int | None = None) -> Spectrum:
    """Full symmetric eigendecomposition, descending, clamped at zero."""
    if isinstance(g, GramMatrix):
        mat, M = g.matrix, g.M
    else:
        mat = np.asarray(g, dtype=np.float64)
        if M is None:
            raise ValueError("M metadata required when passing a bare matrix")
    if not np.all(np.isfinite(mat)):
        raise ValueError("non-finite entries in matrix")
    lam = np.linalg.eigvalsh(mat)[::-1]
    return Spectrum(lam, d=mat.shape[0], M=M)


def _local_slopes(log_i, log_lam, window: int) -> np.ndarray:
    """Centered-window OLS slope of log lam vs log i at every index."""
    n = log_i.size
    half = window // 2
    slopes = np.full(n, np.nan)
    for i in range(half, n - half):
        xs = log_i[i - half : i + half + 1]
        ys = log_lam[i - half : i + half + 1]
        xc = xs - xs.mean()
        slopes[i] = float(xc @ (ys - ys.mean()) / (xc @ xc))
    return slopes


def detect_bulk(
    s: Spectrum,
    i_start: int = 10,
    slope_deviation: float = 0.15,
    window: int = 21,
    head_span: int = 50,
) -> Spectrum:
    """Locate the power-law bulk (i_start, d_bulk).

    The reference slope is fit over the first `head_span` bulk indices;
    d_bulk is the last index before the centered-window local slope drifts
    from it by `slope_deviation`, its magnitude doubles (cliff), or the
    eigenvalue falls below 1e-12 of the top one, whichever comes first.
    """
    lam = s.eigenvalues
    lmax = lam[0]
    nz = int(np.sum(lam > FLOOR_TOL * lmax))
    if nz < 50:
        raise InsufficientSpectrumError(f"only {nz} usable eigenvalues, need >= 50")
    if i_start < 1 or i_start + 30 > nz:
        raise InsufficientSpectrumError(f"i_start={i_start} leaves no bulk span in {nz}")
    log_i = np.log(np.arange(1, nz + 1, dtype=np.float64))
    log_lam = np.log(lam[:nz])
    head = slice(i_start - 1, min(i_start - 1 + head_span, nz))
    xc = log_i[head] - log_i[head].mean()
    ref = float(xc @ (log_lam[head] - log_lam[head].mean()) / (xc @ xc))
    slopes = _local_slopes(log_i, log_lam, window)
    d_bulk = nz
    for i in range(i_start - 1 + window // 2, nz):
        w = slopes[i]
        if np.isnan(w):
            break
        if abs(w - ref) >= slope_deviation or abs(w) >= 2.0 * max(abs(ref), 1e-3):
            d_bulk = i
            break
    d_bulk = min(nz, max(d_bulk, i_start + 30))
    return s.with_bulk(i_start, d_bulk)


def fit_power_law(s: Spectrum) -> PowerLawFit:
    """OLS fit of log lam_i vs log i over the bulk; lam_i ~ A i^-(1+alpha)."""
    if s.bulk_range is None:
        raise ValueError("bulk_range not set")
    i0, i1 = s.bulk_range
    if i1 - i0 < 30:
        raise ValueError(f"bulk span {i1 - i0} too short for a fit (need >= 30)")
    lam = s.eigenvalues[i0 - 1 : i1]
    if np.any(lam <= 0):
        raise ValueError("zero eigenvalue inside fit range")
    x = np.log(np.arange(i0, i1 + 1, dtype=np.float64))
    y = np.log(lam)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(
        alpha=float(-slope - 1.0),
        amplitude=float(np.exp(intercept)),
        r_squared=max(r2, 0.0),
        fit_range=(i0, i1),
    )


def spectral_entropy(s: Spectrum) -> float:
    """Shannon entropy (natural log) of the normalized bulk eigenvalues."""
    lam = s.bulk
    if np.any(lam <= 0):
        raise ValueError("nonpositive eigenvalue in bulk")
    p = lam / lam.sum()
    return float(-np.sum(p * np.log(p)))


def histogram(s: Spectrum, bins: int = 64, normalization: str = "max-scaled") -> DensityHistogram:
    """Histogram of the bulk eigenvalues; masses sum to 1."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if normalization not in ("max-scaled", "raw"):
        raise ValueError(f"unknown normalization {normalization!r}")
    vals = s.bulk
    if normalization == "max-scaled":
        vals = vals / vals.max()
    counts, edges = np.histogram(vals, bins=bins)
    masses = counts / counts.sum()
    return DensityHistogram(edges, masses, normalization)


def kl_divergence(p: DensityHistogram, q: DensityHistogram) -> float:
    """KL(p || q) over shared bins, with 1e-10 additive smoothing on q."""
    if p.bin_edges.shape != q.bin_edges.shape or not np.allclose(
        p.bin_edges, q.bin_edges
    ):
        raise ValueError("histograms must share identical bin edges")
    qs = q.masses + KL_SMOOTHING
    qs = qs / qs.sum()
    mask = p.masses > 0
    return float(np.sum(p.masses[mask] * np.log(p.masses[mask] / qs[mask])))
