"""Eigenvalues of sampled matrices and the spectral statistics built on them.

Everything downstream works on the rescaled values ``mu_i = lambda_i / b_N``;
for small ``alpha`` the raw eigenvalues reach 1e9 and beyond.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import SampledMatrix

__all__ = [
    "Spectrum",
    "SpectrumSummary",
    "eigen_decompose",
    "summarize",
    "log_statistic_T",
    "power_sums",
    "identity_residuals",
]


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigs: np.ndarray  # descending
    b_N: float

    def __post_init__(self):
        e = np.asarray(self.eigs, dtype=float)
        if e.ndim != 1 or e.size == 0:
            raise ValueError("need a nonempty 1-d array of eigenvalues")
        if np.any(np.diff(e) > 0):
            raise ValueError("eigenvalues must be sorted in descending order")
        if not self.b_N > 0:
            raise ValueError("b_N must be positive")
        e.setflags(write=False)
        object.__setattr__(self, "eigs", e)

    @classmethod
    def from_values(cls, values, b_N: float = 1.0) -> "Spectrum":
        """Build from eigenvalues in any order."""
        v = np.asarray(values, dtype=float)
        return cls(np.sort(v, kind="stable")[::-1].copy(), float(b_N))

    @property
    def N(self) -> int:
        return self.eigs.size

    @property
    def mu(self) -> np.ndarray:
        return self.eigs / self.b_N


def eigen_decompose(m: SampledMatrix) -> Spectrum:
    if not np.all(np.isfinite(m.upper)):
        raise ValueError("matrix has non-finite entries")
    vals = np.linalg.eigvalsh(m.dense())
    return Spectrum(vals[::-1].copy(), m.b_N)


def identity_residuals(m: SampledMatrix, s: Spectrum) -> tuple[float, float]:
    """Relative errors of ``sum lambda = Tr M`` and ``sum lambda^2 = sum M_ij^2``.

    Both are measured against the Frobenius scale of ``M``.
    """
    M = m.dense()
    frob2 = float(np.sum(M * M))
    if frob2 == 0.0:
        return float(np.max(np.abs(s.eigs))), float(np.sum(s.eigs**2))
    trace_err = abs(float(s.eigs.sum()) - float(np.trace(M))) / np.sqrt(frob2)
    frob_err = abs(float(np.dot(s.eigs, s.eigs)) - frob2) / frob2
    return trace_err, frob_err


@dataclass(frozen=True)
class SpectrumSummary:
    lambda1: float
    lambda2: float
    lambdaN: float
    trace_over_bN: float
    sumsq_over_bN2: float
    gap_over_bN: float
    big_count: int
    Gamma: float
    eps: float


def summarize(s: Spectrum, eps: float = 0.1) -> SpectrumSummary:
    e, mu = s.eigs, s.mu
    lam2 = e[1] if s.N > 1 else e[0]
    return SpectrumSummary(
        lambda1=float(e[0]),
        lambda2=float(lam2),
        lambdaN=float(e[-1]),
        trace_over_bN=float(mu.sum()),
        sumsq_over_bN2=float(np.dot(mu, mu)),
        gap_over_bN=float((e[0] - lam2) / s.b_N),
        big_count=int(np.count_nonzero(np.abs(mu) > s.N ** (-eps))),
        Gamma=float(max(abs(e[0]), abs(e[-1]))),
        eps=eps,
    )


def log_statistic_T(s: Spectrum, gamma: float) -> float:
    """``-sum log(1 - lambda_i / gamma)`` for ``gamma > max(lambda_1, 0)``."""
    if not (gamma > s.eigs[0] and gamma > 0):
        raise ValueError("log statistic needs gamma > lambda_1 and gamma > 0")
    r = s.mu / (gamma / s.b_N)
    # log1p is accurate for the bulk; near the top use the ratio form
    near = r > 0.5
    out = np.empty_like(r)
    out[~near] = np.log1p(-r[~near])
    out[near] = np.log((gamma - s.eigs[near]) / gamma)
    return float(-out.sum())


def power_sums(s: Spectrum, gamma: float, k_max: int) -> np.ndarray:
    """``S_k = sum (lambda_i / gamma)**k`` for ``k = 1..k_max``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    r = s.mu / (gamma / s.b_N)
    return np.array([np.sum(r**k) for k in range(1, k_max + 1)])
