"""Numerical laboratory for the spherical spin glass with heavy-tailed couplings."""
from .ensemble import EnsembleSpec, SampledMatrix, max_abs_entry, sample_matrix, whp_diagnostics
from .experiments import ExperimentConfig, Kind, TrialRecord, derive_seed, ks_distance, run_experiment
from .free_energy import (
    Phase,
    SaddleContext,
    log_z_bessel_n2,
    log_z_laplace,
    log_z_quadrature,
    log_z_sphere_mc,
    solve_gamma,
)
from .heavy_tail import Const, PolyLog, TailLaw, normalizers, quantile, tail
from .spectra import Spectrum, eigen_decompose

__version__ = "0.1.0"

__all__ = [
    "Const",
    "EnsembleSpec",
    "ExperimentConfig",
    "Kind",
    "Phase",
    "PolyLog",
    "SaddleContext",
    "SampledMatrix",
    "Spectrum",
    "TailLaw",
    "TrialRecord",
    "derive_seed",
    "eigen_decompose",
    "ks_distance",
    "log_z_bessel_n2",
    "log_z_laplace",
    "log_z_quadrature",
    "log_z_sphere_mc",
    "max_abs_entry",
    "normalizers",
    "quantile",
    "run_experiment",
    "sample_matrix",
    "solve_gamma",
    "tail",
    "whp_diagnostics",
]
