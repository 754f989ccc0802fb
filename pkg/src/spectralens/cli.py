"""Command-line front end: synthesis, spectral diagnostics, theory curves,
convergence sweeps, teacher-student runs, and end-to-end figure pipelines.

All artifacts are written atomically (temp file + rename). stdout carries a
short human-readable summary; machine-readable results go to the files named
by flags. Exit codes: 0 success, 1 input error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .convergence import NOT_CONVERGED, entropy_trajectory, locate_mcrit, sweep
from .datamatrix import (
    DataMatrix,
    FormatError,
    load_csv,
    load_idx,
    load_raw,
    preprocess,
    save_raw,
)
from .rmtstats import (
    GOE_R_MEAN,
    goe_r_density,
    goe_sff,
    level_spacing,
    r_statistics,
    spectral_form_factor,
    unfold,
    wigner_surmise,
)
from .spectra import (
    InsufficientSpectrumError,
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
    CapabilityError,
    PopulationCovariance,
    RngSeed,
    corrupt_with_noise,
    sample_gaussian,
)
from .teacher_student import (
    DivergenceError,
    TSConfig,
    analytic_flow,
    analytic_gen_haar,
    realize,
    simulate_gd,
)
from .theory import (
    SolverError,
    bulk_prediction,
    goe_wigner_sample,
    mp_density,
    mp_support,
    solve_stieltjes,
)

SCHEMA_VERSION = 1
FIGURE_NAMES = (
    "fig1-scree",
    "fig2-density",
    "fig3-goe",
    "fig4-convergence",
    "fig5-entropy",
    "appB-genmp",
    "appD-teacher",
)


# ---------------------------------------------------------------------------
# atomic artifact writers


def _atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload: dict) -> None:
    _atomic_write_bytes(
        path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()
    )


def _write_csv(path: str, header: list, rows) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_csv_cell(v) for v in row) + "\n")
    _atomic_write_bytes(path, buf.getvalue().encode())


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _save_raw_atomic(x: DataMatrix, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    os.close(fd)
    try:
        save_raw(x, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _savefig(fig, path: str) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg")
    _atomic_write_bytes(path, buf.getvalue())


def _new_figure(*args, **kwargs):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt.subplots(*args, **kwargs)


def _close(fig) -> None:
    import matplotlib.pyplot as plt

    plt.close(fig)


# ---------------------------------------------------------------------------
# shared helpers


def _report_skeleton(args: argparse.Namespace, t0: float) -> dict:
    config = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        config[key] = value
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "backend": BACKEND,
        "config": config,
        "wall_time_s": round(time.time() - t0, 3),
    }


def _load_input(path: str) -> DataMatrix:
    if not os.path.exists(path):
        raise FileNotFoundError(f"input file not found: {path}")
    lower = path.lower()
    if lower.endswith(".grm1"):
        return load_raw(path)
    if lower.endswith(".csv"):
        return load_csv(path)
    if lower.endswith((".idx", ".idx3-ubyte", ".idx1-ubyte", "-ubyte", ".ubyte")):
        return load_idx(path)
    # fall back on GRM1, the native format
    return load_raw(path)


def _ks_to_wigner(spacings: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of spacings to the Wigner surmise CDF."""
    s = np.sort(np.asarray(spacings, dtype=np.float64))
    cdf = 1.0 - np.exp(-np.pi * s**2 / 4.0)
    n = s.size
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - cdf), np.max(cdf - lower)))


def _parse_m_grid(text: str) -> list:
    """Grid spec: 'log:lo:hi:n', 'lin:lo:hi:n', or comma-separated ints."""
    if text.startswith(("log:", "lin:")):
        kind, lo, hi, n = text.split(":")
        lo, hi, n = int(lo), int(hi), int(n)
        if lo < 1 or hi <= lo or n < 2:
            raise ValueError(f"bad m-grid spec: {text}")
        if kind == "log":
            vals = np.geomspace(lo, hi, n)
        else:
            vals = np.linspace(lo, hi, n)
        return sorted({int(round(v)) for v in vals})
    return sorted({int(v) for v in text.split(",")})


def _subset_spectra(
    x: DataMatrix,
    subsets: int,
    subset_size: int,
    seed: RngSeed,
    i_start: int,
) -> list:
    """Bulk spectra of `subsets` column subsets drawn without replacement.

    The bulk range is detected once on the full spectrum and applied to
    every subset: per-subset detection is unstable on the noisier subset
    spectra, while the power-law extent is a property of the population.
    """
    if subset_size > x.M:
        raise ValueError(f"subset size {subset_size} exceeds sample count {x.M}")
    full = detect_bulk(eigenvalues(gram(x)), i_start=i_start)
    lo, hi = full.bulk_range
    out = []
    for k in range(subsets):
        rng = seed.with_stream(1000 + k).generator()
        cols = rng.choice(x.M, size=subset_size, replace=False)
        sub = DataMatrix(
            np.ascontiguousarray(x.values[:, np.sort(cols)]),
            centered=x.centered,
            standardized=x.standardized,
            source=f"{x.source}[subset{k}]",
        )
        spec = eigenvalues(gram(sub))
        out.append(spec.with_bulk(lo, hi))
    return out


def _pooled_rmt(bulk_spectra: list) -> dict:
    """Pool r-values, unfolded spacings, and the SFF across subset spectra."""
    r_values = []
    spacing_values = []
    unfolded = []
    for spec in bulk_spectra:
        r_values.append(r_statistics(spec).values)
        u = unfold(spec)
        unfolded.append(u)
        spacing_values.append(np.diff(u.levels))
    r_all = np.concatenate(r_values)
    s_all = np.concatenate(spacing_values)
    return {
        "r_values": r_all,
        "spacings": s_all,
        "unfolded": unfolded,
        "r_mean": float(r_all.mean()),
        "ks_wigner": _ks_to_wigner(s_all),
        "mean_spacing": float(np.mean([u.mean_spacing for u in unfolded])),
    }


def _sff_curve(unfolded: list, tau_max: float = 3.0, points: int = 1200):
    taus = np.linspace(0.01, tau_max, points)
    return spectral_form_factor(unfolded, taus, smoothing_width=0.15)


def _stem(path: str) -> str:
    base, _ = os.path.splitext(path)
    return base


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_synth(args) -> int:
    if args.kind == "ugd":
        cov = PopulationCovariance.identity(args.d, sigma2=args.sigma2)
    else:
        cov = PopulationCovariance.toeplitz(args.d, c=args.c, alpha=args.alpha)
    x = sample_gaussian(cov, args.m, RngSeed(args.seed))
    _save_raw_atomic(x, args.out)
    print(f"synth: {args.kind} d={args.d} M={args.m} -> {args.out}")
    return 0


def _cmd_corrupt(args) -> int:
    x = _load_input(args.infile)
    y = corrupt_with_noise(x, args.fraction, RngSeed(args.seed))
    _save_raw_atomic(y, args.out)
    print(f"corrupt: f={args.fraction} d={y.d} M={y.M} -> {args.out}")
    return 0


def _spectrum_summary(x: DataMatrix, standardize: bool, i_start: int) -> tuple:
    x = preprocess(x, standardize=standardize)
    spec = detect_bulk(eigenvalues(gram(x)), i_start=i_start)
    fit = fit_power_law(spec)
    entropy = spectral_entropy(spec)
    return spec, fit, entropy


def _cmd_spectrum(args) -> int:
    t0 = time.time()
    x = _load_input(args.infile)
    spec, fit, entropy = _spectrum_summary(x, args.standardize, args.bulk_start)
    report = {
        "input": {"path": args.infile, "d": spec.d, "M": spec.M},
        "preprocessing": {"centered": True, "standardized": bool(args.standardize)},
        "spectrum": {
            "bulk_range": list(spec.bulk_range),
            "alpha": fit.alpha,
            "amplitude": fit.amplitude,
            "r_squared": fit.r_squared,
            "entropy": entropy,
            "lambda_max": float(spec.eigenvalues[0]),
        },
    }
    report.update(_report_skeleton(args, t0))
    _write_json(args.out, report)

    stem = _stem(args.out)
    idx = np.arange(1, spec.d + 1)
    _write_csv(
        f"{stem}_scree.csv",
        ["index", "eigenvalue"],
        zip(idx.tolist(), spec.eigenvalues.tolist()),
    )
    fig, ax = _new_figure(figsize=(5, 4))
    pos = spec.eigenvalues > 0
    ax.loglog(idx[pos], spec.eigenvalues[pos], lw=1.0, label="eigenvalues")
    lo, hi = spec.bulk_range
    ax.axvline(lo, color="gray", ls=":", lw=0.8)
    ax.axvline(hi, color="gray", ls=":", lw=0.8, label="bulk range")
    ax.set_xlabel("index $i$")
    ax.set_ylabel(r"$\lambda_i$")
    ax.set_title(f"scree, fitted alpha = {fit.alpha:.3f}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _savefig(fig, f"{stem}_scree.svg")
    _close(fig)
    print(
        f"spectrum: d={spec.d} M={spec.M} bulk={spec.bulk_range} "
        f"alpha={fit.alpha:.4f} (r2={fit.r_squared:.4f}) entropy={entropy:.4f}"
    )
    return 0


def _cmd_rmt(args) -> int:
    t0 = time.time()
    diagnostics = [d.strip() for d in args.diagnostics.split(",") if d.strip()]
    unknown = set(diagnostics) - {"r", "spacing", "sff"}
    if unknown:
        raise ValueError(f"unknown diagnostics: {sorted(unknown)}")
    x = preprocess(_load_input(args.infile), standardize=args.standardize)
    seed = RngSeed(args.seed)
    if args.subsets > 1:
        spectra = _subset_spectra(
            x, args.subsets, args.subset_size, seed, args.bulk_start
        )
    else:
        spectra = [detect_bulk(eigenvalues(gram(x)), i_start=args.bulk_start)]
    pooled = _pooled_rmt(spectra)

    stem = _stem(args.out)
    report = {
        "input": {"path": args.infile, "d": x.d, "M": x.M},
        "rmt": {
            "subsets": len(spectra),
            "mean_spacing": pooled["mean_spacing"],
        },
    }
    if "r" in diagnostics:
        report["rmt"]["r_mean"] = pooled["r_mean"]
        report["rmt"]["r_goe_reference"] = GOE_R_MEAN
        hist = r_statistics(spectra[0]).histogram
        fig, ax = _new_figure(figsize=(5, 4))
        centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
        ax.bar(
            centers,
            hist.density(),
            width=np.diff(hist.bin_edges),
            alpha=0.5,
            label="empirical",
        )
        rr = np.linspace(0, 1, 200)
        ax.plot(rr, goe_r_density(rr), "k-", label="GOE")
        ax.set_xlabel("$r$")
        ax.set_ylabel("density")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _savefig(fig, f"{stem}_r.svg")
        _close(fig)
    if "spacing" in diagnostics:
        report["rmt"]["ks_wigner"] = pooled["ks_wigner"]
        edges = np.linspace(0, 4, 33)
        counts, _ = np.histogram(pooled["spacings"], bins=edges)
        dens = counts / counts.sum() / np.diff(edges)
        fig, ax = _new_figure(figsize=(5, 4))
        ax.bar(
            0.5 * (edges[:-1] + edges[1:]),
            dens,
            width=np.diff(edges),
            alpha=0.5,
            label="empirical",
        )
        ss = np.linspace(0, 4, 300)
        ax.plot(ss, wigner_surmise(ss), "k-", label="Wigner surmise")
        ax.set_xlabel("$s$")
        ax.set_ylabel("$p(s)$")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _savefig(fig, f"{stem}_spacing.svg")
        _close(fig)
    if "sff" in diagnostics:
        curve = _sff_curve(pooled["unfolded"])
        inside = curve.taus >= 1.0
        plateau = float(curve.values[inside].mean())
        report["rmt"]["sff_plateau_mean"] = plateau
        report["rmt"]["sff_members"] = curve.members
        fig, ax = _new_figure(figsize=(5, 4))
        ax.loglog(curve.taus, curve.values, lw=1.0, label="empirical")
        ax.loglog(curve.taus, goe_sff(curve.taus), "k--", label="GOE")
        ax.set_xlabel(r"$\tau$")
        ax.set_ylabel(r"$K(\tau)$")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _savefig(fig, f"{stem}_sff.svg")
        _close(fig)

    report.update(_report_skeleton(args, t0))
    _write_json(args.out, report)
    line = f"rmt: subsets={len(spectra)}"
    if "r" in diagnostics:
        line += f" <r>={pooled['r_mean']:.4f} (GOE {GOE_R_MEAN:.4f})"
    if "spacing" in diagnostics:
        line += f" KS_wigner={pooled['ks_wigner']:.4f}"
    print(line)
    return 0


def _cmd_theory(args) -> int:
    if args.law == "mp":
        lo, hi = mp_support(args.sigma2, args.gamma)
        lmin = args.lmin if args.lmin is not None else max(lo, 1e-6)
        lmax = args.lmax if args.lmax is not None else hi
        grid = np.linspace(lmin, lmax, args.points)
        density = mp_density(grid, args.sigma2, args.gamma)
    else:
        cov = PopulationCovariance.toeplitz(args.d, c=args.c, alpha=args.alpha)
        lmax_default = float(cov.singular_values.max()) * 2.0
        lmin = args.lmin if args.lmin is not None else 1e-4
        lmax = args.lmax if args.lmax is not None else lmax_default
        grid = np.geomspace(max(lmin, 1e-8), lmax, args.points)
        sol = solve_stieltjes(args.gamma, cov, grid, eps=args.eps)
        density = sol.density
    _write_csv(args.out, ["lambda", "density"], zip(grid.tolist(), density.tolist()))
    mass = float(np.trapezoid(density, grid))
    print(f"theory: {args.law} gamma={args.gamma} mass={mass:.4f} -> {args.out}")
    return 0


def _cmd_converge(args) -> int:
    t0 = time.time()
    x = preprocess(_load_input(args.infile), standardize=args.standardize)
    m_values = _parse_m_grid(args.m_grid)
    m_values = [m for m in m_values if m <= x.M]
    sw = sweep(
        x,
        m_values,
        seeds_per_point=args.seeds,
        seed=RngSeed(args.seed),
        i_start=args.bulk_start,
    )
    mcrit_delta = locate_mcrit(sw, "delta")
    mcrit_alpha = locate_mcrit(sw, "Delta")
    _write_csv(
        args.out,
        ["M", "delta", "delta_se", "Delta", "Delta_se", "epsilon", "entropy"],
        zip(
            sw.m_values.tolist(),
            sw.delta.tolist(),
            sw.delta_se.tolist(),
            sw.Delta.tolist(),
            sw.Delta_se.tolist(),
            sw.epsilon.tolist(),
            sw.entropy.tolist(),
        ),
    )
    stem = _stem(args.out)
    fig, axes = _new_figure(1, 3, figsize=(12, 3.6))
    for ax, series, name in (
        (axes[0], sw.delta, r"$\delta(M)$"),
        (axes[1], sw.Delta, r"$\Delta(M)$"),
        (axes[2], sw.epsilon, r"$\epsilon(M)$"),
    ):
        good = ~np.isnan(series) & (series > 0)
        ax.loglog(sw.m_values[good], series[good], "o-", ms=3, lw=1.0)
        ax.set_xlabel("$M$")
        ax.set_title(name)
    fig.tight_layout()
    _savefig(fig, f"{stem}.svg")
    _close(fig)
    report = {
        "input": {"path": args.infile, "d": x.d, "M": x.M},
        "convergence": {
            "m_crit_delta": mcrit_delta,
            "m_crit_alpha": mcrit_alpha,
            "alpha_full": sw.alpha_full,
            "entropy_full": sw.entropy_full,
        },
    }
    report.update(_report_skeleton(args, t0))
    _write_json(f"{stem}.json", report)
    print(
        f"converge: {len(sw.m_values)} points, "
        f"m_crit(delta)={mcrit_delta} m_crit(alpha)={mcrit_alpha} "
        f"({time.time() - t0:.1f}s)"
    )
    return 0


def _cmd_ts(args) -> int:
    t0 = time.time()
    if args.kind == "ugd":
        cov = PopulationCovariance.identity(args.d_in)
    else:
        cov = PopulationCovariance.toeplitz(args.d_in, c=args.c, alpha=args.alpha)
    base = TSConfig(
        d_in=args.d_in,
        n_train=args.n_train,
        eta=args.eta,
        steps=args.steps,
        cov=cov,
        seed=RngSeed(args.seed),
        record_every=args.record_every,
    )
    sims_tr, sims_gen = [], []
    real0 = None
    times = None
    for k in range(args.seeds):
        cfg = TSConfig(
            d_in=base.d_in,
            n_train=base.n_train,
            eta=base.eta,
            steps=base.steps,
            cov=base.cov,
            seed=RngSeed(args.seed).with_stream(k),
            record_every=base.record_every,
        )
        real = realize(cfg)
        if k == 0:
            real0 = real
        traj = simulate_gd(cfg, real)
        times = traj.times
        sims_tr.append(traj.loss_train)
        sims_gen.append(traj.loss_gen)
    sim_tr = np.mean(sims_tr, axis=0)
    sim_gen = np.mean(sims_gen, axis=0)
    flow = analytic_flow(base, real0, times, mode="exact")
    haar = analytic_gen_haar(base, real0, times)
    _write_csv(
        args.out,
        [
            "time",
            "sim_train_mean",
            "sim_gen_mean",
            "flow_train_exact",
            "flow_gen_exact",
            "flow_gen_haar",
        ],
        zip(
            times.tolist(),
            sim_tr.tolist(),
            sim_gen.tolist(),
            flow.loss_train.tolist(),
            flow.loss_gen.tolist(),
            haar.loss_gen.tolist(),
        ),
    )
    stem = _stem(args.out)
    fig, ax = _new_figure(figsize=(5.5, 4))
    ax.loglog(times[1:], sim_tr[1:], lw=1.0, label="GD train (mean)")
    ax.loglog(times[1:], sim_gen[1:], lw=1.0, label="GD gen (mean)")
    ax.loglog(times[1:], flow.loss_train[1:], "k--", lw=0.9, label="flow train")
    ax.loglog(times[1:], haar.loss_gen[1:], "r:", lw=1.1, label="flow gen (Haar)")
    ax.set_xlabel(r"flow time $\eta t$")
    ax.set_ylabel("loss")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _savefig(fig, f"{stem}.svg")
    _close(fig)
    print(
        f"ts: d_in={args.d_in} n_train={args.n_train} seeds={args.seeds} "
        f"final train={sim_tr[-1]:.3e} gen={sim_gen[-1]:.3e} "
        f"({time.time() - t0:.1f}s)"
    )
    return 0


# ---------------------------------------------------------------------------
# figure pipelines


def _figure_budget(name: str) -> str:
    return {
        "fig1-scree": "~1 min",
        "fig2-density": "~2 min",
        "fig3-goe": "~2 min",
        "fig4-convergence": "~5 min",
        "fig5-entropy": "~3 min",
        "appB-genmp": "~1 min",
        "appD-teacher": "~1 min",
    }[name]


def _fig1_scree(args, out_dir: str) -> dict:
    seed = RngSeed(args.seed)
    d, M = 512, 20000
    fig, (ax1, ax2) = _new_figure(1, 2, figsize=(9, 3.8))
    results = {"scree": {}, "corruption": {}}
    specs = {
        "ugd": PopulationCovariance.identity(d),
        "cgd a=0.25": PopulationCovariance.toeplitz(d, 1.0, 0.25),
        "cgd a=0.5": PopulationCovariance.toeplitz(d, 1.0, 0.5),
    }
    for j, (label, cov) in enumerate(specs.items()):
        x = preprocess(sample_gaussian(cov, M, seed.with_stream(j)))
        spec, fit, _ = _spectrum_summary(x, False, 10)
        idx = np.arange(1, spec.d + 1)
        pos = spec.eigenvalues > 0
        ax1.loglog(idx[pos], spec.eigenvalues[pos], lw=1.0, label=label)
        results["scree"][label] = {"alpha": fit.alpha, "r_squared": fit.r_squared}
    ax1.set_xlabel("index $i$")
    ax1.set_ylabel(r"$\lambda_i$")
    ax1.legend(fontsize=8)

    base = preprocess(
        sample_gaussian(PopulationCovariance.toeplitz(d, 1.0, 0.25), M, seed)
    )
    fractions = [0.0, 0.25, 0.5, 0.75, 1.0]
    alphas = []
    for j, f in enumerate(fractions):
        y = preprocess(corrupt_with_noise(base, f, seed.with_stream(100 + j)))
        _, fit, _ = _spectrum_summary(y, False, 10)
        alphas.append(fit.alpha)
    ax2.plot(fractions, alphas, "o-")
    ax2.set_xlabel("noise fraction $f$")
    ax2.set_ylabel(r"fitted $\alpha$")
    fig.tight_layout()
    _savefig(fig, os.path.join(out_dir, "fig1-scree.svg"))
    _close(fig)
    results["corruption"] = {
        "fractions": fractions,
        "alphas": alphas,
        "monotone_decreasing": bool(np.all(np.diff(alphas) < 0)),
    }
    return results


def _fig2_density(args, out_dir: str) -> dict:
    seed = RngSeed(args.seed)
    d, M = 1000, 20000
    fig, (ax1, ax2) = _new_figure(1, 2, figsize=(9, 3.8))
    results = {}
    for j, alpha_star in enumerate((0.0, 0.25, 0.5)):
        cov = PopulationCovariance.toeplitz(d, 1.0, alpha_star)
        x = preprocess(sample_gaussian(cov, M, seed.with_stream(j)))
        spec, fit, _ = _spectrum_summary(x, False, 10)
        idx = np.arange(1, d + 1)
        pos = spec.eigenvalues > 0
        ax1.loglog(idx[pos], spec.eigenvalues[pos], lw=1.0, label=f"a*={alpha_star}")
        lo, hi = spec.bulk_range
        pred_i = np.arange(lo, hi + 1)
        ax1.loglog(
            pred_i, bulk_prediction(pred_i, d, 1.0, alpha_star), "k--", lw=0.6
        )
        hist = histogram(spec, bins=64)
        centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
        ax2.semilogy(centers, np.maximum(hist.density(), 1e-12), lw=1.0)
        results[f"alpha_star={alpha_star}"] = {
            "alpha_fit": fit.alpha,
            "error": abs(fit.alpha - alpha_star),
        }
    ax1.set_xlabel("index $i$")
    ax1.set_ylabel(r"$\lambda_i$")
    ax1.legend(fontsize=8)
    ax2.set_xlabel(r"$\lambda / \lambda_{max}$")
    ax2.set_ylabel("density")
    fig.tight_layout()
    _savefig(fig, os.path.join(out_dir, "fig2-density.svg"))
    _close(fig)
    return results


def _fig3_goe(args, out_dir: str) -> dict:
    seed = RngSeed(args.seed)
    d, M = 1000, 50000
    cov = PopulationCovariance.toeplitz(d, 1.0, 0.25)
    x = preprocess(sample_gaussian(cov, M, seed))
    spectra = _subset_spectra(x, 40, 2000, seed, 10)
    pooled = _pooled_rmt(spectra)
    curve = _sff_curve(pooled["unfolded"])

    fig, axes = _new_figure(1, 3, figsize=(12.5, 3.6))
    edges = np.linspace(0, 1, 33)
    counts, _ = np.histogram(pooled["r_values"], bins=edges)
    axes[0].bar(
        0.5 * (edges[:-1] + edges[1:]),
        counts / counts.sum() / np.diff(edges),
        width=np.diff(edges),
        alpha=0.5,
        label="CGD",
    )
    rr = np.linspace(0, 1, 200)
    axes[0].plot(rr, goe_r_density(rr), "k-", label="GOE")
    axes[0].set_xlabel("$r$")
    axes[0].legend(fontsize=8)

    edges = np.linspace(0, 4, 33)
    counts, _ = np.histogram(pooled["spacings"], bins=edges)
    axes[1].bar(
        0.5 * (edges[:-1] + edges[1:]),
        counts / counts.sum() / np.diff(edges),
        width=np.diff(edges),
        alpha=0.5,
        label="CGD",
    )
    ss = np.linspace(0, 4, 300)
    axes[1].plot(ss, wigner_surmise(ss), "k-", label="Wigner")
    axes[1].set_xlabel("$s$")
    axes[1].legend(fontsize=8)

    axes[2].loglog(curve.taus, curve.values, lw=1.0, label="CGD")
    axes[2].loglog(curve.taus, goe_sff(curve.taus), "k--", label="GOE")
    axes[2].set_xlabel(r"$\tau$")
    axes[2].set_ylabel(r"$K(\tau)$")
    axes[2].legend(fontsize=8)
    fig.tight_layout()
    _savefig(fig, os.path.join(out_dir, "fig3-goe.svg"))
    _close(fig)
    return {
        "r_mean": pooled["r_mean"],
        "r_goe_reference": GOE_R_MEAN,
        "r_mean_error": abs(pooled["r_mean"] - GOE_R_MEAN),
        "ks_wigner": pooled["ks_wigner"],
        "mean_spacing": pooled["mean_spacing"],
        "sff_plateau_mean": float(curve.values[curve.taus >= 1].mean()),
    }


def _fig4_convergence(args, out_dir: str) -> dict:
    seed = RngSeed(args.seed)
    d, M = 784, 60000
    cov = PopulationCovariance.toeplitz(d, 1.0, 0.25)
    x = preprocess(sample_gaussian(cov, M, seed))
    m_values = _parse_m_grid("log:100:60000:24")
    sw = sweep(x, m_values, seeds_per_point=3, seed=seed)
    fig, axes = _new_figure(1, 3, figsize=(12, 3.6))
    for ax, series, name in (
        (axes[0], sw.delta, r"$\delta(M)$"),
        (axes[1], sw.Delta, r"$\Delta(M)$"),
        (axes[2], sw.epsilon, r"$\epsilon(M)$"),
    ):
        good = ~np.isnan(series) & (series > 0)
        ax.loglog(sw.m_values[good], series[good], "o-", ms=3, lw=1.0)
        ax.set_xlabel("$M$")
        ax.set_title(name)
    fig.tight_layout()
    _savefig(fig, os.path.join(out_dir, "fig4-convergence.svg"))
    _close(fig)
    return {
        "m_crit_delta": locate_mcrit(sw, "delta"),
        "m_crit_alpha": locate_mcrit(sw, "Delta"),
        "d": d,
    }


def _fig5_entropy(args, out_dir: str) -> dict:
    seed = RngSeed(args.seed)
    d, M = 784, 50000
    covs = {
        "ugd": PopulationCovariance.identity(d),
        "cgd a=0.25": PopulationCovariance.toeplitz(d, 1.0, 0.25),
        "cgd a=0.5": PopulationCovariance.toeplitz(d, 1.0, 0.5),
    }
    spectra = {}
    for j, (label, cov) in enumerate(covs.items()):
        x = preprocess(sample_gaussian(cov, M, seed.with_stream(j)))
        spectra[label] = detect_bulk(eigenvalues(gram(x)))
    n_bulk = min(s.bulk_range[1] - s.bulk_range[0] + 1 for s in spectra.values())
    entropies = {}
    for label, s in spectra.items():
        lo = s.bulk_range[0]
        entropies[label] = spectral_entropy(s.with_bulk(lo, lo + n_bulk - 1))

    x = preprocess(
        sample_gaussian(covs["cgd a=0.25"], M, seed.with_stream(1))
    )
    sw = sweep(x, _parse_m_grid("log:100:50000:16"), seeds_per_point=3, seed=seed)
    traj = entropy_trajectory(sw)
    fig, (ax1, ax2) = _new_figure(1, 2, figsize=(9, 3.8))
    ax1.bar(range(len(entropies)), list(entropies.values()))
    ax1.set_xticks(range(len(entropies)), list(entropies.keys()), fontsize=8)
    ax1.set_ylabel("bulk entropy $H$")
    good = ~np.isnan(traj["normalized_entropy"])
    ax2.semilogx(sw.m_values[good], traj["normalized_entropy"][good], "o-", ms=3)
    ax2.axhline(0.99, color="gray", ls=":")
    ax2.set_xlabel("$M$")
    ax2.set_ylabel("$H_M / H_{full}$")
    fig.tight_layout()
    _savefig(fig, os.path.join(out_dir, "fig5-entropy.svg"))
    _close(fig)
    ratio = traj["normalized_entropy"]
    reach = sw.m_values[good & (ratio >= 0.99)]
    return {
        "entropies": entropies,
        "n_bulk_matched": n_bulk,
        "ordering_ok": bool(
            entropies["ugd"] > entropies["cgd a=0.25"] > entropies["cgd a=0.5"]
        ),
        "m_entropy_099": int(reach.min()) if reach.size else NOT_CONVERGED,
    }


def _appB_genmp(args, out_dir: str) -> dict:
    seed = RngSeed(args.seed)
    d = 1000
    gamma = 0.38
    cov = PopulationCovariance.toeplitz(d, 1.14, 0.25)
    sv = cov.singular_values
    grid = np.geomspace(1e-4, float(sv.max()) * 2.0, 800)
    sol = solve_stieltjes(gamma, cov, grid, eps=1e-4)

    M = int(round(d / gamma))
    x = preprocess(sample_gaussian(cov, M, seed))
    spec = eigenvalues(gram(x)).with_bulk(1, d)
    hist = histogram(spec, bins=64, normalization="raw")
    # bin the theory curve into the same 64 bins for the KL comparison
    theory_mass = np.empty(hist.masses.size)
    for j in range(theory_mass.size):
        lo, hi = hist.bin_edges[j], hist.bin_edges[j + 1]
        sub = np.linspace(lo, hi, 24)
        dens = np.interp(sub, grid, sol.density, left=0.0, right=0.0)
        theory_mass[j] = np.trapezoid(dens, sub)
    total = theory_mass.sum()
    from .spectra import DensityHistogram

    theory_hist = DensityHistogram(hist.bin_edges, theory_mass / total, "raw")
    kl = kl_divergence(hist, theory_hist)

    fig, ax = _new_figure(figsize=(5.5, 4))
    centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
    ax.semilogy(centers, np.maximum(hist.density(), 1e-12), "o", ms=3, label="CGD")
    ax.semilogy(grid, np.maximum(sol.density, 1e-12), "k-", lw=1.0, label="solver")
    ax.set_xlim(hist.bin_edges[0], hist.bin_edges[-1])
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _savefig(fig, os.path.join(out_dir, "appB-genmp.svg"))
    _close(fig)
    return {
        "gamma": gamma,
        "c": 1.14,
        "mass": sol.mass,
        "kl_to_empirical": kl,
        "M": M,
    }


def _appD_teacher(args, out_dir: str) -> dict:
    ns = argparse.Namespace(
        kind="cgd",
        d_in=500,
        n_train=2000,
        alpha=0.25,
        c=1.0,
        eta=1e-4,
        steps=20000,
        seeds=10,
        seed=args.seed,
        record_every=40,
        out=os.path.join(out_dir, "appD-teacher.csv"),
    )
    _cmd_ts(ns)
    return {"csv": ns.out, "svg": os.path.join(out_dir, "appD-teacher.svg")}


def _cmd_figure(args) -> int:
    t0 = time.time()
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    print(f"figure {args.name}: runtime budget {_figure_budget(args.name)}")
    handler = {
        "fig1-scree": _fig1_scree,
        "fig2-density": _fig2_density,
        "fig3-goe": _fig3_goe,
        "fig4-convergence": _fig4_convergence,
        "fig5-entropy": _fig5_entropy,
        "appB-genmp": _appB_genmp,
        "appD-teacher": _appD_teacher,
    }[args.name]
    results = handler(args, out_dir)
    report = {"figure": args.name, "results": results}
    report.update(_report_skeleton(args, t0))
    _write_json(os.path.join(out_dir, f"{args.name}.json"), report)
    print(f"figure {args.name}: done in {time.time() - t0:.1f}s -> {out_dir}/")
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectralens",
        description="RMT spectral diagnostics for empirical Gram matrices",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker pool size")
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate Gaussian data")
    p.add_argument("--kind", choices=("ugd", "cgd"), required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("corrupt", help="mix data with variance-matched noise")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("spectrum", help="Gram spectrum, bulk, power-law fit")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--bulk-start", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("rmt", help="GOE diagnostics: r, spacing, SFF")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--diagnostics", default="r,spacing,sff")
    p.add_argument("--subsets", type=int, default=40)
    p.add_argument("--subset-size", type=int, default=1000)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--bulk-start", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rmt)

    p = sub.add_parser("theory", help="analytic densities (MP / generalized MP)")
    p.add_argument("--law", choices=("mp", "genmp"), required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--d", type=int, default=1000)
    p.add_argument("--lmin", type=float, default=None)
    p.add_argument("--lmax", type=float, default=None)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("converge", help="metric convergence sweep over M")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--m-grid", default="log:100:60000:24")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--bulk-start", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("ts", help="teacher-student GD vs gradient flow")
    p.add_argument("--kind", choices=("ugd", "cgd"), default="cgd")
    p.add_argument("--d-in", type=int, default=1000)
    p.add_argument("--n-train", type=int, default=4000)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record-every", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ts)

    p = sub.add_parser("figure", help="end-to-end figure reproduction")
    p.add_argument("name", choices=FIGURE_NAMES)
    p.add_argument("--out-dir", default="figures")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--synthetic-only",
        action="store_true",
        help="use CGD surrogates instead of any real dataset file",
    )
    p.add_argument("--fmnist", default=None, help="optional IDX file of real data")
    p.set_defaults(func=_cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        env = os.environ.get("SPECTRALENS_THREADS")
        args.threads = int(env) if env else None
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 1
        if BACKEND == "numba":
            import numba

            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        return args.func(args)
    except (
        SolverError,
        DivergenceError,
        InsufficientSpectrumError,
        np.linalg.LinAlgError,
        FloatingPointError,
    ) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, FormatError, CapabilityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
