"""Heavy-tailed Wigner matrices and their with-high-probability structure checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .heavy_tail import TailLaw, normalizers, sample

__all__ = [
    "EnsembleSpec",
    "SampledMatrix",
    "WhpReport",
    "sample_matrix",
    "max_abs_entry",
    "whp_diagnostics",
]

TRUNCATION_MODES = ("indicator", "clip")


@dataclass(frozen=True)
class EnsembleSpec:
    """Dimension, entry law and optional truncation of the ensemble.

    With ``truncation=c`` and the default ``truncation_mode="indicator"``
    every entry is ``X * 1(|X| <= c)``. ``"clip"`` instead replaces ``X`` by
    ``sign(X) * min(|X|, c)``.
    """

    N: int
    law: TailLaw
    truncation: float | None = None
    truncation_mode: str = "indicator"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.truncation is not None and not self.truncation > 0:
            raise ValueError("truncation cutoff must be positive")
        if self.truncation_mode not in TRUNCATION_MODES:
            raise ValueError(f"truncation_mode must be one of {TRUNCATION_MODES}")


@dataclass(frozen=True, eq=False)
class SampledMatrix:
    """Upper triangle (row-major, ``i <= j``) of one symmetric realization."""

    N: int
    upper: np.ndarray
    b_N: float
    seed: int

    def __post_init__(self):
        if self.upper.shape != (self.N * (self.N + 1) // 2,):
            raise ValueError("upper must hold N(N+1)/2 entries")
        self.upper.setflags(write=False)

    def dense(self) -> np.ndarray:
        M = np.zeros((self.N, self.N))
        iu = np.triu_indices(self.N)
        M[iu] = self.upper
        M.T[iu] = self.upper
        return M

    @classmethod
    def from_dense(cls, M, b_N: float, seed: int = 0) -> "SampledMatrix":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("expected a square matrix")
        if not np.array_equal(M, M.T):
            raise ValueError("matrix is not symmetric")
        return cls(M.shape[0], M[np.triu_indices(M.shape[0])].copy(), float(b_N), seed)


def sample_matrix(spec: EnsembleSpec, seed: int) -> SampledMatrix:
    rng = np.random.Generator(np.random.PCG64(seed))
    n = spec.N * (spec.N + 1) // 2
    x = sample(spec.law, rng, n)
    c = spec.truncation
    if c is not None:
        if spec.truncation_mode == "indicator":
            x = np.where(np.abs(x) <= c, x, 0.0)
        else:
            x = np.clip(x, -c, c)
    return SampledMatrix(spec.N, x, normalizers(spec.law, spec.N).b_N, seed)


def max_abs_entry(m: SampledMatrix) -> float:
    return float(np.max(np.abs(m.upper))) if m.upper.size else 0.0


@dataclass(frozen=True)
class WhpReport:
    small_diagonal: bool
    no_big_pair_with_big_diagonal: bool
    no_row_with_two_big: bool
    dominant_entry_or_small_rest: bool

    def all(self) -> bool:
        return (
            self.small_diagonal
            and self.no_big_pair_with_big_diagonal
            and self.no_row_with_two_big
            and self.dominant_entry_or_small_rest
        )


def whp_diagnostics(m: SampledMatrix, delta: float = 0.1, eps: float = 0.1) -> WhpReport:
    """Evaluate the four structural events on one realization.

    Failures are data: the events hold only with high probability, so each
    is reported as a flag rather than raised.
    """
    b = m.b_N
    A = np.abs(m.dense())
    diag = np.diag(A)

    small_diagonal = bool(np.all(diag <= b ** (11 / 20)))

    i, j = np.nonzero(np.triu(A > b ** (99 / 100)))
    pair_ok = bool(np.all(diag[i] + diag[j] <= b ** (1 / 10)))

    big = A > b ** (0.5 + delta)
    two_big_ok = bool(np.all(big.sum(axis=1) < 2))

    M = m.dense()
    thr = b ** (0.5 + eps)
    rows = np.arange(m.N)
    dom = np.argmax(A, axis=1)
    rest = M.sum(axis=1) - M[rows, dom]
    dominant_ok = bool(np.all((A[rows, dom] < thr) | (np.abs(rest) < thr)))

    return WhpReport(small_diagonal, pair_ok, two_big_ok, dominant_ok)
