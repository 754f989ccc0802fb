"""Synthetic Gaussian data: UGD, correlated (Toeplitz-spectrum) CGD,
and variance-matched noise corruption of existing datasets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import truncated_power_sum
from .datamatrix import DataMatrix

DENSE_SVD_LIMIT = 4096


class CapabilityError(ValueError):
    """Requested size exceeds the dense path; use the series evaluation."""


@dataclass(frozen=True)
class RngSeed:
    """Counter-based PRNG seed. (seed, stream) fully determines all draws."""

    seed: int = 0
    stream: int = 0

    def generator(self) -> np.random.Generator:
        # Philox is counter-based and splittable: each stream is an
        # independent key, so parallel draws are schedule-independent.
        key = (int(self.stream) << 64) | (int(self.seed) & 0xFFFFFFFFFFFFFFFF)
        return np.random.Generator(np.random.Philox(key=key))

    def with_stream(self, stream: int) -> "RngSeed":
        return RngSeed(self.seed, stream)


def toeplitz_singular_values(d: int, c: float, alpha: float) -> np.ndarray:
    """Exact singular values (descending) of T = I + c|i-j|^alpha.

    The |i-j|^alpha term contributes 0 on the diagonal. Dense SVD only;
    for d > 4096 use `laplace_singular_values`.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if c <= 0:
        raise ValueError("c must be positive")
    if d > DENSE_SVD_LIMIT:
        raise CapabilityError(
            f"dense SVD limited to d <= {DENSE_SVD_LIMIT}; "
            "use laplace_singular_values for larger d"
        )
    dist = np.abs(np.subtract.outer(np.arange(d), np.arange(d))).astype(np.float64)
    T = np.eye(d) + np.where(dist > 0, c * dist**alpha, 0.0)
    return np.linalg.svd(T, compute_uv=False)


def laplace_singular_values(
    d: int, c: float, alpha: float, simplified: bool = False
) -> np.ndarray:
    """Toeplitz spectrum via the truncated discrete Laplace transform.

    Full mode evaluates 1 + c * sum_{k=1}^{d-1} k^alpha exp(-s k/d) for
    s = 1..d (the polylog-minus-Lerch combination collapses to this finite
    sum). Simplified mode is the bulk closed form
    1 + c * Gamma(1+alpha) * (d/s)^(1+alpha), valid for alpha > -1.
    Returned descending (s = 1 is the largest value).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if c <= 0:
        raise ValueError("c must be positive")
    s = np.arange(1, d + 1, dtype=np.float64)
    if simplified:
        if alpha <= -1:
            raise ValueError("simplified closed form requires alpha > -1")
        vals = 1.0 + c * math.gamma(1.0 + alpha) * (d / s) ** (1.0 + alpha)
    else:
        vals = 1.0 + c * truncated_power_sum(s / d, alpha, d - 1)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("series evaluation produced non-finite values")
    return np.sort(vals)[::-1].copy()


@dataclass(frozen=True)
class PopulationCovariance:
    """Diagonal population covariance: sigma^2 I or a Toeplitz spectrum.

    For the Toeplitz kind the covariance is the diagonal matrix of the
    singular values of I + c|i-j|^alpha, evaluated through the Laplace
    series (the spectrum that carries the i^-(1+alpha) bulk power law).
    """

    kind: str  # "identity" | "toeplitz"
    d: int
    sigma2: float = 1.0
    c: float = 1.0
    alpha: float = 0.0
    _cache: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.kind == "identity":
            if self.sigma2 <= 0:
                raise ValueError("sigma2 must be positive")
        elif self.kind == "toeplitz":
            if self.c <= 0:
                raise ValueError("c must be positive")
        else:
            raise ValueError(f"unknown covariance kind {self.kind!r}")

    @staticmethod
    def identity(d: int, sigma2: float = 1.0) -> "PopulationCovariance":
        return PopulationCovariance("identity", d, sigma2=sigma2)

    @staticmethod
    def toeplitz(d: int, c: float, alpha: float) -> "PopulationCovariance":
        return PopulationCovariance("toeplitz", d, c=c, alpha=alpha)

    @property
    def singular_values(self) -> np.ndarray:
        """Descending diagonal of the population covariance."""
        if not self._cache:
            if self.kind == "identity":
                vals = np.full(self.d, self.sigma2)
            else:
                vals = laplace_singular_values(self.d, self.c, self.alpha)
            vals.setflags(write=False)
            self._cache.append(vals)
        return self._cache[0]

    @property
    def trace(self) -> float:
        return float(self.singular_values.sum())


def sample_gaussian(cov: PopulationCovariance, M: int, seed: RngSeed) -> DataMatrix:
    """Draw M iid columns from N(0, diag(singular values))."""
    if M < 1:
        raise ValueError("M must be >= 1")
    rng = seed.generator()
    z = rng.standard_normal((cov.d, M))
    x = np.sqrt(cov.singular_values)[:, None] * z
    label = (
        f"ugd(d={cov.d},s2={cov.sigma2})"
        if cov.kind == "identity"
        else f"cgd(d={cov.d},c={cov.c},alpha={cov.alpha})"
    )
    return DataMatrix(x, source=f"{label};seed={seed.seed}/{seed.stream}")


def corrupt_with_noise(x: DataMatrix, noise_fraction: float, seed: RngSeed) -> DataMatrix:
    """Variance-matched mixture sqrt(1-f) x + sqrt(f) N, N ~ N(0, sd(x)^2).

    f = 0 returns the input untouched; f = 1 is pure noise at the data's
    global scale.
    """
    if not 0.0 <= noise_fraction <= 1.0:
        raise ValueError("noise_fraction must lie in [0, 1]")
    if noise_fraction == 0.0:
        return x
    rng = seed.generator()
    sd = float(x.values.std())
    noise = rng.standard_normal(x.values.shape) * sd
    mixed = math.sqrt(1.0 - noise_fraction) * x.values + math.sqrt(noise_fraction) * noise
    return DataMatrix(
        mixed,
        centered=x.centered,
        standardized=False,
        source=f"{x.source}+noise({noise_fraction})",
    )
