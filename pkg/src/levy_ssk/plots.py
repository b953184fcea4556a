"""Standalone SVG figures for experiment runs."""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import ExperimentConfig, TrialRecord, pushforward_sample, derive_seed  # noqa: E402
from .free_energy import Phase  # noqa: E402
from .heavy_tail import frechet_cdf  # noqa: E402

__all__ = ["frechet_histogram", "ecdf_overlay", "emit_plots"]

# fixed salt and no date keep the SVG text stable across runs
matplotlib.rcParams["svg.hashsalt"] = "levy_ssk"


def _save(fig, path: Path, manifest: dict) -> Path:
    meta = {"Date": None, "Description": json.dumps(manifest, sort_keys=True, default=str)}
    fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)
    return path


def _ecdf(x):
    x = np.sort(np.asarray(x, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def frechet_histogram(cfg: ExperimentConfig, records: list[TrialRecord], path, manifest: dict) -> Path:
    """Histogram of ``lambda_1 / b_N`` per ``N`` against the Frechet density."""
    fig, ax = plt.subplots(figsize=(6, 4))
    top = 0.0
    for N in cfg.n_values:
        x = np.array([r.lambda1_over_bn for r in records if r.n == N and not r.failed])
        x = x[x > 0]
        if x.size:
            top = max(top, np.quantile(x, 0.95))
            ax.hist(x, bins=np.linspace(0, max(top, 1e-9), 60), density=True, histtype="step", label=f"N={N}")
    grid = np.linspace(1e-3, max(top, 1.0), 400)
    a = cfg.alpha
    ax.plot(grid, a * grid ** (-a - 1) * frechet_cdf(a, grid), "k-", lw=1, label="Frechet density")
    ax.set_xlabel("lambda_1 / b_N")
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, Path(path), manifest)


def ecdf_overlay(cfg: ExperimentConfig, records: list[TrialRecord], path, manifest: dict) -> Path:
    """ECDFs of the free energy: ``log Z_N`` on F1 trials, ``log Z_N / N`` on F2 trials."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for N in cfg.n_values:
        ok = [r for r in records if r.n == N and not r.failed]
        f1 = [r.log_z_quadrature for r in ok if r.phase == Phase.F1.value]
        f2 = [r.log_z_quadrature / N for r in ok if r.phase == Phase.F2.value]
        if f1:
            ax1.step(*_ecdf(f1), where="post", label=f"N={N}")
        if f2:
            ax2.step(*_ecdf(f2), where="post", label=f"N={N}")
    ref = pushforward_sample(cfg.alpha, cfg.beta, 20_000, derive_seed(cfg.master_seed, -1))
    ax2.step(*_ecdf(ref), where="post", color="k", lw=1, label="limit law")
    ax1.set_xlabel("log Z_N | F1")
    ax2.set_xlabel("(1/N) log Z_N | F2")
    for ax in (ax1, ax2):
        ax.set_ylabel("ECDF")
        ax.legend()
    return _save(fig, Path(path), manifest)


def emit_plots(cfg: ExperimentConfig, records: list[TrialRecord], out_dir, manifest: dict) -> dict:
    out = Path(out_dir)
    return {
        "frechet_svg": str(frechet_histogram(cfg, records, out / "lambda1_frechet.svg", manifest)),
        "ecdf_svg": str(ecdf_overlay(cfg, records, out / "free_energy_ecdf.svg", manifest)),
    }
