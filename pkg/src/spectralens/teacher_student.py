"""Linear teacher-student model: discrete full-batch gradient descent and
the gradient-flow loss expressions, for correlated Gaussian inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectra import Spectrum
from .synth import PopulationCovariance, RngSeed


class DivergenceError(RuntimeError):
    """Training loss blew up: learning rate above the stability bound."""


@dataclass(frozen=True)
class TSConfig:
    d_in: int
    n_train: int
    eta: float
    steps: int
    cov: PopulationCovariance
    seed: RngSeed = RngSeed()
    record_every: int = 1

    def __post_init__(self):
        if self.d_in < 1 or self.n_train < 1:
            raise ValueError("d_in and n_train must be positive")
        if self.eta <= 0:
            raise ValueError("learning rate must be positive")
        if self.cov.d != self.d_in:
            raise ValueError("covariance dimension must equal d_in")

    @property
    def ratio(self) -> float:
        return self.d_in / self.n_train


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray  # t * eta for the simulation; flow time for analytic
    loss_train: np.ndarray
    loss_gen: np.ndarray


@dataclass(frozen=True)
class TSRealization:
    """One draw of training data and teacher/student vectors."""

    cfg: TSConfig
    sigma_tr: np.ndarray
    delta0: np.ndarray
    nu: np.ndarray = field(init=False)  # eigenvalues of sigma_tr, ascending
    basis: np.ndarray = field(init=False)

    def __post_init__(self):
        nu, basis = np.linalg.eigh(self.sigma_tr)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "basis", basis)

    @property
    def eta_bound(self) -> float:
        return 1.0 / (2.0 * float(self.nu[-1]))

    def spectrum(self) -> Spectrum:
        return Spectrum(self.nu[::-1].copy(), d=self.cfg.d_in, M=self.cfg.n_train)


def realize(cfg: TSConfig) -> TSRealization:
    """Draw training data and the teacher/student initialization.

    w0 and w* are N(0, 1/(2 d_in)), so E||delta0||^2 = 1.
    """
    rng = cfg.seed.generator()
    x = np.sqrt(cfg.cov.singular_values)[:, None] * rng.standard_normal(
        (cfg.d_in, cfg.n_train)
    )
    sigma_tr = x @ x.T / cfg.n_train
    sigma_tr = (sigma_tr + sigma_tr.T) / 2.0
    scale = 1.0 / np.sqrt(2.0 * cfg.d_in)
    w0 = rng.standard_normal(cfg.d_in) * scale
    w_star = rng.standard_normal(cfg.d_in) * scale
    return TSRealization(cfg, sigma_tr, w0 - w_star)


def simulate_gd(cfg: TSConfig, real: TSRealization | None = None) -> Trajectory:
    """Iterate delta <- (I - 2 eta Sigma_tr) delta, recording both losses.

    loss_train is delta^T Sigma_tr delta; loss_gen is the population
    expectation delta^T Sigma_pop delta.
    """
    real = realize(cfg) if real is None else real
    if cfg.eta >= real.eta_bound:
        raise DivergenceError(
            f"eta={cfg.eta:g} >= stability bound {real.eta_bound:g}"
        )
    pop = cfg.cov.singular_values
    delta = real.delta0.copy()
    n_rec = cfg.steps // cfg.record_every + 1
    times = np.empty(n_rec)
    ltr = np.empty(n_rec)
    lgen = np.empty(n_rec)
    k = 0
    first = None
    for t in range(cfg.steps + 1):
        if t % cfg.record_every == 0:
            times[k] = t * cfg.eta
            ltr[k] = float(delta @ (real.sigma_tr @ delta))
            lgen[k] = float((delta * delta) @ pop)
            if first is None:
                first = ltr[k]
            elif first > 0 and ltr[k] > 10.0 * first:
                raise DivergenceError(
                    f"training loss grew 10x at step {t}; eta bound is "
                    f"{real.eta_bound:g}"
                )
            k += 1
        if t < cfg.steps:
            delta -= 2.0 * cfg.eta * (real.sigma_tr @ delta)
    return Trajectory(times[:k], ltr[:k], lgen[:k])


def analytic_flow(
    cfg: TSConfig,
    real: TSRealization,
    times,
    mode: str = "exact",
) -> Trajectory:
    """Gradient-flow losses on a time grid.

    exact mode projects the realized delta0 on the Sigma_tr eigenbasis:
    L_tr = sum_i c_i^2 nu_i exp(-4 eta0 nu_i t). uniform mode replaces the
    projections by their self-averaged value E||delta0||^2 / d_in = 1/d_in.
    """
    times = np.asarray(times, dtype=np.float64)
    nu = real.nu
    pop = cfg.cov.singular_values
    decay = np.exp(-4.0 * np.outer(times, nu))  # (t, d)
    if mode == "exact":
        proj = real.basis.T @ real.delta0
        c2 = proj**2
        ltr = (decay * nu[None, :]) @ c2
        # L_gen = delta(t)^T Sigma_pop delta(t), delta(t) in the original basis
        half = np.exp(-2.0 * np.outer(times, nu))
        dt_coeff = half * proj[None, :]
        delta_t = dt_coeff @ real.basis.T  # (t, d)
        lgen = np.einsum("td,d,td->t", delta_t, pop, delta_t)
    elif mode == "uniform":
        ltr = (decay * nu[None, :]).sum(axis=1) / cfg.d_in
        lgen = analytic_gen_haar(cfg, real, times / 1.0).loss_gen
    else:
        raise ValueError("mode must be 'exact' or 'uniform'")
    return Trajectory(times, ltr, lgen)


def analytic_gen_haar(cfg: TSConfig, real: TSRealization, times) -> Trajectory:
    """Haar-averaged generalization loss Tr(Sigma_pop)/d * mean_i exp(-4 eta0 nu_i t).

    Uses the E||delta0||^2 = 1 convention (for Sigma_pop = I the prefactor
    is exactly 1); the training companion series is the uniform-projection
    L_tr.
    """
    times = np.asarray(times, dtype=np.float64)
    nu = real.nu
    decay = np.exp(-4.0 * np.outer(times, nu))
    ltr = (decay * nu[None, :]).sum(axis=1) / cfg.d_in
    lgen = cfg.cov.trace * decay.mean(axis=1) / cfg.d_in
    return Trajectory(times, ltr, lgen)
