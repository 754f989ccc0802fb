"""spectralens: RMT spectral diagnostics for empirical Gram matrices."""

from ._kernels import BACKEND
from .convergence import ConvergenceSweep, entropy_trajectory, locate_mcrit, sweep
from .datamatrix import DataMatrix, load_csv, load_idx, load_raw, preprocess, save_raw
from .rmtstats import (
    GOE_R_MEAN,
    RStatistics,
    SffCurve,
    SpacingSample,
    UnfoldedSpectrum,
    goe_r_density,
    goe_sff,
    level_spacing,
    poisson_spacing,
    r_statistics,
    spectral_form_factor,
    unfold,
    wigner_surmise,
)
from .spectra import (
    DensityHistogram,
    PowerLawFit,
    Spectrum,
    detect_bulk,
    eigenvalues,
    fit_power_law,
    gram,
    histogram,
    kl_divergence,
    spectral_entropy,
)
from .synth import (
    PopulationCovariance,
    RngSeed,
    corrupt_with_noise,
    laplace_singular_values,
    sample_gaussian,
    toeplitz_singular_values,
)
from .teacher_student import (
    TSConfig,
    TSRealization,
    Trajectory,
    analytic_flow,
    analytic_gen_haar,
    realize,
    simulate_gd,
)
from .theory import (
    StieltjesSolution,
    bulk_prediction,
    goe_wigner_sample,
    mp_density,
    mp_support,
    semicircle_density,
    solve_stieltjes,
)

__version__ = "0.1.0"
