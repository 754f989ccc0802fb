"""Analytic reference curves: Marcenko-Pastur law, the generalized MP
density via the self-consistent Stieltjes equation, the bulk power-law
prediction, and a GOE Wigner sampler for oracle tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._kernels import stieltjes_fixed_point
from .spectra import Spectrum
from .synth import PopulationCovariance, RngSeed

EPS_LADDER = (1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3)
DEFAULT_DAMPING = 0.5
FIXED_POINT_TOL = 1e-10
MAX_ITER = 100_000
QUAD_NODES = 400


class SolverError(RuntimeError):
    """Fixed-point iteration failed to converge."""


@dataclass(frozen=True)
class StieltjesSolution:
    z_grid: np.ndarray
    g_values: np.ndarray  # companion transform at each grid point
    density: np.ndarray
    gamma: float
    eps: float
    iterations: np.ndarray
    residuals: np.ndarray

    @property
    def mass(self) -> float:
        return float(np.trapezoid(self.density, np.real(self.z_grid)))


def mp_density(lam, sigma2: float, gamma: float):
    """Marcenko-Pastur density with support sigma^2 (1 +/- sqrt(gamma))^2."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    lam = np.asarray(lam, dtype=np.float64)
    lo = sigma2 * (1.0 - math.sqrt(gamma)) ** 2
    hi = sigma2 * (1.0 + math.sqrt(gamma)) ** 2
    out = np.zeros_like(lam)
    inside = (lam > lo) & (lam < hi)
    li = lam[inside]
    out[inside] = np.sqrt((hi - li) * (li - lo)) / (2.0 * np.pi * sigma2 * gamma * li)
    return out


def mp_support(sigma2: float, gamma: float) -> tuple:
    return (
        sigma2 * (1.0 - math.sqrt(gamma)) ** 2,
        sigma2 * (1.0 + math.sqrt(gamma)) ** 2,
    )


def bulk_prediction(i, d: int, c: float, alpha: float):
    """Bulk eigenvalue law c Gamma(1+alpha) (d/i)^(1+alpha)."""
    if alpha <= -1:
        raise ValueError("bulk closed form requires alpha > -1")
    if c <= 0:
        raise ValueError("c must be positive")
    i = np.asarray(i, dtype=np.float64)
    if np.any((i < 1) | (i > d)):
        raise ValueError("index out of [1, d]")
    return c * math.gamma(1.0 + alpha) * (d / i) ** (1.0 + alpha)


def _population_measure(cov: PopulationCovariance, nodes: int):
    """Discrete (value, weight) measure representing the population density.

    Identity: a point mass at sigma^2. Toeplitz: Gauss-Legendre nodes for
    the integral of c*Gamma(1+alpha) x^(-1-alpha) over x in (0, 1]; the
    integral form is the hypergeometric term evaluated directly.
    """
    if cov.kind == "identity":
        return np.array([cov.sigma2]), np.array([1.0])
    if cov.alpha <= -1:
        raise ValueError("generalized MP solver requires alpha > -1")
    x, w = leggauss(nodes)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    chat = cov.c * math.gamma(1.0 + cov.alpha)
    return chat * x ** (-1.0 - cov.alpha), w


def solve_stieltjes(
    gamma: float,
    cov: PopulationCovariance,
    lam_grid,
    eps: float = 1e-3,
    damping: float = DEFAULT_DAMPING,
    quad_nodes: int = QUAD_NODES,
) -> StieltjesSolution:
    """Self-consistent solve of the companion transform on lam + i*eps.

    Damped fixed-point iteration of G = 1/(-z + gamma * F(G)) with F the
    population average of p/(1 + G p). The physical branch is selected by
    annealing the imaginary offset down a fixed ladder, warm-starting each
    stage from the previous one; the density is Im(G_full)/pi.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-6, 1e-2]")
    lam_grid = np.asarray(lam_grid, dtype=np.float64)
    pop_vals, pop_weights = _population_measure(cov, quad_nodes)
    ladder = [e for e in EPS_LADDER if e > eps] + [eps]
    g = None
    for e in ladder:
        z = lam_grid + 1j * e
        if g is None:
            g = -1.0 / z  # asymptotic branch; Im > 0 in the upper half-plane
        g, iters, resid = stieltjes_fixed_point(
            z, gamma, pop_vals, pop_weights, g, damping, FIXED_POINT_TOL, MAX_ITER
        )
    if np.max(resid) > 1e-9:
        raise SolverError(
            f"fixed point not converged: max residual {np.max(resid):.2e} "
            f"at lambda={lam_grid[int(np.argmax(resid))]:.4g}"
        )
    z = lam_grid + 1j * eps
    g_full = g / gamma + (1.0 - gamma) / (gamma * z)
    density = np.imag(g_full) / np.pi
    if np.min(density) < -1e-8:
        raise SolverError(f"negative density {np.min(density):.2e}: wrong branch")
    density = np.clip(density, 0.0, None)
    return StieltjesSolution(z, g, density, gamma, eps, iters, resid)


def goe_wigner_sample(n: int, seed: RngSeed) -> Spectrum:
    """Eigenvalues of (A + A^T)/sqrt(8n); semicircle support ~ [-1, 1]."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = seed.generator()
    a = rng.standard_normal((n, n))
    h = (a + a.T) / math.sqrt(8.0 * n)
    lam = np.linalg.eigvalsh(h)[::-1]
    return Spectrum(lam, d=n, M=n, nonnegative=False)


def semicircle_density(x):
    """Wigner semicircle (2/pi) sqrt(1 - x^2) on [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = (2.0 / np.pi) * np.sqrt(1.0 - x[m] ** 2)
    return out
