"""Monte Carlo drivers that test the limit theorems at desk scale.

Seeds: trial ``t`` of a run with master seed ``s`` draws its matrix from
``PCG64(derive_seed(s, t))`` where ``derive_seed`` is the SplitMix64
finalizer applied to ``s XOR (0x9E3779B97F4A7C15 * (t + 1) mod 2**64)``.
Trials are numbered across the whole run: the ``j``-th trial at the
``i``-th entry of ``n_values`` has ``t = i * trials + j``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from .ensemble import EnsembleSpec, max_abs_entry, sample_matrix
from .free_energy import (
    Phase,
    SaddleContext,
    high_temp_residual,
    log_z_laplace,
    log_z_quadrature,
    low_temp_limit,
    solve_gamma,
)
from .heavy_tail import (
    Const,
    PolyLog,
    TailLaw,
    conditional_X_quantile,
    frechet_cdf,
    normalizers,
    tail,
)
from .spectra import eigen_decompose, identity_residuals, log_statistic_T

__all__ = [
    "Kind",
    "ExperimentConfig",
    "TrialRecord",
    "Check",
    "SummaryReport",
    "ConfigError",
    "derive_seed",
    "ks_distance",
    "run_trials",
    "analyze",
    "run_experiment",
    "moment_target",
    "moment_check",
    "t_moment_series",
]

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, t: int) -> int:
    return _mix64((master_seed & MASK64) ^ ((GOLDEN * (t + 1)) & MASK64))


class ConfigError(ValueError):
    pass


class Kind(str, enum.Enum):
    PHASE_PROBABILITY = "PhaseProbability"
    FRECHET = "Frechet"
    LOW_TEMP_LIMIT = "LowTempLimit"
    HIGH_TEMP_STABILITY = "HighTempStability"
    MOMENT_CHECK = "MomentCheck"
    TRACE_DIAGNOSTICS = "TraceDiagnostics"


# Option defaults. KS and tolerance thresholds are calibrated regression
# baselines: the limit theorems come without finite-N rates.
COMMON_OPTIONS = {
    "theta": 0.5,
    "polylog_p": None,
    "residual_tol": 1e-10,
    "stick_exponent": 1.05,
    "stick_fraction": 0.9,
    "stick_min_n": 300,
}
KIND_OPTIONS = {
    Kind.PHASE_PROBABILITY: {"prob_tol": 0.06},
    Kind.FRECHET: {"ks_tol": 0.08, "exact_ks_tol": None},
    Kind.LOW_TEMP_LIMIT: {"ks_tol": 0.10, "median_tol": 0.05, "pushforward_samples": 100_000},
    Kind.HIGH_TEMP_STABILITY: {"ks_tol": 0.12, "high_temp_residual_tol": 0.02, "min_f1_trials": 300},
    Kind.MOMENT_CHECK: {"k": [2, 4], "moment_tol": 0.3, "truncation_mode": "indicator"},
    Kind.TRACE_DIAGNOSTICS: {"eps": 0.1, "ks_tol": 0.1},
}


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float
    beta: float
    n_values: tuple[int, ...]
    trials: int
    master_seed: int
    kind: Kind
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            kind = Kind(self.kind)
        except ValueError:
            raise ConfigError(f"unknown experiment kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not self.n_values or any(n < 2 for n in self.n_values):
            raise ConfigError("every N must be >= 2")
        if not (0.0 < self.alpha < 2.0):
            raise ConfigError("alpha must lie in (0, 2)")
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed <= MASK64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        allowed = {**COMMON_OPTIONS, **KIND_OPTIONS[kind]}
        unknown = set(self.options) - set(allowed)
        if unknown:
            raise ConfigError(f"unknown options for {kind.value}: {sorted(unknown)}")
        merged = {**allowed, **self.options}
        if kind is Kind.MOMENT_CHECK and merged["truncation_mode"] not in ("indicator", "clip"):
            raise ConfigError("truncation_mode must be 'indicator' or 'clip'")
        object.__setattr__(self, "options", merged)

    def law(self) -> TailLaw:
        p = self.options["polylog_p"]
        sv = Const() if p is None else PolyLog(float(p))
        return TailLaw(self.alpha, sv, float(self.options["theta"]))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "n_values": list(self.n_values),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "kind": self.kind.value,
            "options": dict(self.options),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = names - set(d) - {"options"}
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**d)


@dataclass
class TrialRecord:
    """One trial; field order is the CSV column order."""

    trial: int
    seed: int
    n: int
    failed: bool = False
    lambda1_over_bn: float = math.nan
    lambda2_over_bn: float = math.nan
    lambdan_over_bn: float = math.nan
    max_entry_over_bn: float = math.nan
    phase: str = ""
    gamma_over_bn: float = math.nan
    gap_over_bn: float = math.nan
    x_n: float = math.nan
    saddle_residual: float = math.nan
    bracket_ok: bool = False
    log_z_quadrature: float = math.nan
    log_z_quadrature_err: float = math.nan
    log_z_laplace: float = math.nan
    t_n: float = math.nan
    sumsq_over_bn2: float = math.nan
    trace_over_bn: float = math.nan
    trace_identity_err: float = math.nan
    frobenius_identity_err: float = math.nan
    moment_2: float = math.nan
    moment_4: float = math.nan
    error: str = ""


def _ensemble_spec(cfg: ExperimentConfig, N: int) -> EnsembleSpec:
    law = cfg.law()
    if cfg.kind is Kind.MOMENT_CHECK:
        cut = normalizers(law, N).b_N / (2.0 * cfg.beta)
        return EnsembleSpec(N, law, cut, cfg.options["truncation_mode"])
    return EnsembleSpec(N, law)


def run_trial(spec: EnsembleSpec, beta: float, t: int, seed: int) -> TrialRecord:
    rec = TrialRecord(trial=t, seed=seed, n=spec.N)
    try:
        m = sample_matrix(spec, seed)
        s = eigen_decompose(m)
        mu = s.mu
        rec.lambda1_over_bn, rec.lambda2_over_bn, rec.lambdan_over_bn = mu[0], mu[1], mu[-1]
        rec.max_entry_over_bn = max_abs_entry(m) / m.b_N
        rec.sumsq_over_bn2 = float(np.dot(mu, mu))
        rec.trace_over_bn = float(mu.sum())
        rec.trace_identity_err, rec.frobenius_identity_err = identity_residuals(m, s)
        r = 2.0 * beta * mu
        rec.moment_2 = float(np.sum(r**2))
        rec.moment_4 = float(np.sum(r**4))
        ctx = SaddleContext(s, beta)
        sr = solve_gamma(ctx)
        rec.phase = sr.phase.value
        rec.gamma_over_bn, rec.gap_over_bn, rec.x_n = sr.w, sr.gap, sr.X_N
        rec.saddle_residual, rec.bracket_ok = sr.residual, sr.bracket_ok
        rec.t_n = log_statistic_T(s, sr.gamma)
        rec.log_z_laplace = log_z_laplace(ctx, sr).log_z
        q = log_z_quadrature(ctx, sr)
        rec.log_z_quadrature, rec.log_z_quadrature_err = q.log_z, q.error_estimate
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        rec.failed = True
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_trials(cfg: ExperimentConfig, threads: int = 1) -> list[TrialRecord]:
    jobs = []
    for i, N in enumerate(cfg.n_values):
        spec = _ensemble_spec(cfg, N)
        for j in range(cfg.trials):
            t = i * cfg.trials + j
            jobs.append((spec, t, derive_seed(cfg.master_seed, t)))
    # one BLAS thread per worker keeps results identical at any worker count
    with threadpool_limits(limits=1):
        if threads <= 1:
            records = [run_trial(spec, cfg.beta, t, seed) for spec, t, seed in jobs]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                records = list(pool.map(lambda job: run_trial(job[0], cfg.beta, job[1], job[2]), jobs))
    return sorted(records, key=lambda r: r.trial)


def ks_distance(sample, other) -> float:
    """Kolmogorov-Smirnov distance between an ECDF and another ECDF or a CDF.

    ``other`` is either a second sample or a vectorized CDF callable.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    if x.size == 0:
        raise ValueError("empty sample")
    n = x.size
    if callable(other):
        F = np.asarray(other(x), dtype=float)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    y = np.sort(np.asarray(other, dtype=float))
    if y.size == 0:
        raise ValueError("empty sample")
    z = np.concatenate([x, y])
    fx = np.searchsorted(x, z, side="right") / n
    fy = np.searchsorted(y, z, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass
class SummaryReport:
    kind: str
    n_trials: int
    n_failed: int
    stats: dict
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_trials": self.n_trials,
            "n_failed": self.n_failed,
            "passed": self.passed,
            "stats": self.stats,
            "checks": [asdict(c) for c in self.checks],
        }


def _by_n(records, cfg):
    ok = [r for r in records if not r.failed]
    return {N: [r for r in ok if r.n == N] for N in cfg.n_values}


def _col(recs, name, phase=None):
    return np.array([getattr(r, name) for r in recs if phase is None or r.phase == phase], dtype=float)


def _saddle_checks(cfg, groups, stats, checks):
    beta = cfg.beta
    expo, frac = cfg.options["stick_exponent"], cfg.options["stick_fraction"]
    for N, recs in groups.items():
        res = np.abs(_col(recs, "saddle_residual"))
        bracket = np.array([r.bracket_ok for r in recs], dtype=bool)
        mu1 = _col(recs, "lambda1_over_bn", Phase.F2.value)
        gap = _col(recs, "gap_over_bn", Phase.F2.value)
        # gap predicted from the top eigenvalue alone, in units of b_N
        predicted = (1.0 / N) / (2.0 * beta - 1.0 / mu1)
        within = np.abs(gap - predicted) <= N ** (-expo)
        st = stats.setdefault(str(N), {})
        st["n"] = len(recs)
        st["max_saddle_residual"] = float(res.max()) if res.size else math.nan
        st["bracket_fraction"] = float(bracket.mean()) if bracket.size else math.nan
        st["stick_fraction"] = float(within.mean()) if within.size else math.nan
        st["n_f2"] = int(mu1.size)
        checks.append(Check(f"N={N} bracket valid on all trials", st["bracket_fraction"], 1.0, bool(bracket.all())))
        checks.append(
            Check(f"N={N} |g'(gamma)| <= tol", st["max_saddle_residual"], cfg.options["residual_tol"],
                  bool(res.size and res.max() <= cfg.options["residual_tol"]))
        )
        # the sticking rate is a finite-N statement; smaller N and the truncated ensemble are reported only
        if within.size and N >= cfg.options["stick_min_n"] and cfg.kind is not Kind.MOMENT_CHECK:
            checks.append(Check(f"N={N} F2 sticking fraction", st["stick_fraction"], frac, st["stick_fraction"] >= frac))


def _phase_probability(cfg, groups, stats, checks):
    target = math.exp(-((2.0 * cfg.beta) ** cfg.alpha))
    tol = cfg.options["prob_tol"]
    for N, recs in groups.items():
        f1 = np.array([r.phase == Phase.F1.value for r in recs], dtype=float)
        p = float(f1.mean())
        st = stats.setdefault(str(N), {})
        st.update(p_f1=p, p_f1_se=math.sqrt(p * (1 - p) / f1.size), p_f1_target=target)
        checks.append(Check(f"N={N} |P(F1) - exp(-(2beta)^alpha)|", abs(p - target), tol, abs(p - target) <= tol))


def _frechet(cfg, groups, stats, checks):
    law = cfg.law()
    tol = cfg.options["ks_tol"]
    for N, recs in groups.items():
        n_entries = N * (N + 1) // 2
        b = normalizers(law, N).b_N
        exact_tol = cfg.options["exact_ks_tol"] or 1.36 / math.sqrt(len(recs))
        ks_top = ks_distance(_col(recs, "lambda1_over_bn"), lambda x: frechet_cdf(cfg.alpha, x))
        exact = lambda x: np.where(x > 0, (1.0 - tail(law, np.maximum(b * x, 0.0))) ** n_entries, 0.0)
        ks_max = ks_distance(_col(recs, "max_entry_over_bn"), exact)
        st = stats.setdefault(str(N), {})
        st.update(ks_lambda1_frechet=ks_top, ks_max_entry_exact=ks_max)
        checks.append(Check(f"N={N} KS(lambda1/b_N, Frechet)", ks_top, tol, ks_top <= tol))
        checks.append(Check(f"N={N} KS(max|M_ij|/b_N, exact law)", ks_max, exact_tol, ks_max <= exact_tol))


def pushforward_sample(alpha: float, beta: float, size: int, seed: int) -> np.ndarray:
    """Draws of ``low_temp_limit(X, beta)`` with ``X`` from the conditional law, by inverse transform."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x = conditional_X_quantile(alpha, beta, 1.0 - rng.random(size))
    return low_temp_limit(x, beta)


def _low_temp(cfg, groups, stats, checks):
    tol, mtol = cfg.options["ks_tol"], cfg.options["median_tol"]
    ref = pushforward_sample(cfg.alpha, cfg.beta, cfg.options["pushforward_samples"], derive_seed(cfg.master_seed, -1))
    medians = []
    for N, recs in groups.items():
        free = _col(recs, "log_z_quadrature", Phase.F2.value) / N
        mu1 = _col(recs, "lambda1_over_bn", Phase.F2.value)
        st = stats.setdefault(str(N), {})
        if free.size == 0:
            checks.append(Check(f"N={N} F2 trials present", 0, 1, False))
            continue
        ks = ks_distance(free, ref)
        med = float(np.median(np.abs(free - low_temp_limit(mu1, cfg.beta))))
        medians.append(med)
        st.update(ks_free_energy_pushforward=ks, median_pointwise_gap=med, n_f2=int(free.size))
        if N == cfg.n_values[-1]:
            # smaller N values only feed the trend check; the distributional gate is at the largest N
            checks.append(Check(f"N={N} KS(F_N | F2, pushforward)", ks, tol, ks <= tol))
        checks.append(Check(f"N={N} median |F_N - limit(lambda1/b_N)|", med, mtol, med <= mtol))
    for (n0, m0), (n1, m1) in zip(zip(cfg.n_values, medians), zip(cfg.n_values[1:], medians[1:])):
        checks.append(Check(f"median pointwise gap decreases N={n0}->{n1}", m1 - m0, 0.0, m1 < m0))


def _high_temp(cfg, groups, stats, checks):
    tol, rtol = cfg.options["ks_tol"], cfg.options["high_temp_residual_tol"]
    samples = {}
    for N, recs in groups.items():
        logz = _col(recs, "log_z_quadrature", Phase.F1.value)
        xn = _col(recs, "x_n", Phase.F1.value)
        resid = np.array([high_temp_residual(x, N) for x in xn])
        samples[N] = logz
        st = stats.setdefault(str(N), {})
        st.update(
            n_f1=int(logz.size),
            median_log_z_f1=float(np.median(logz)) if logz.size else math.nan,
            median_high_temp_residual=float(np.median(resid)) if resid.size else math.nan,
            median_abs_laplace_gap_f1=float(np.median(np.abs(logz - _col(recs, "log_z_laplace", Phase.F1.value))))
            if logz.size else math.nan,
        )
        checks.append(Check(f"N={N} F1 trial count", logz.size, cfg.options["min_f1_trials"],
                            logz.size >= cfg.options["min_f1_trials"]))
    ns = cfg.n_values
    for n0, n1 in zip(ns, ns[1:]):
        if samples[n0].size and samples[n1].size:
            ks = ks_distance(samples[n0], samples[n1])
            stats[f"ks_log_z_f1_{n0}_{n1}"] = ks
            checks.append(Check(f"KS(log Z | F1) N={n0} vs N={n1}", ks, tol, ks <= tol))
    last = stats[str(ns[-1])]["median_high_temp_residual"]
    checks.append(Check(f"N={ns[-1]} median high-temperature residual", last, rtol, bool(last <= rtol)))


def moment_target(alpha: float, beta: float, k: int) -> float:
    """Large-N limit of ``E[(2 beta / b_N)^k sum_i lambda_i^k]`` for the truncated ensemble."""
    if k % 2:
        return 0.0
    return 2.0 * (2.0 * beta) ** alpha * k / (k - alpha)


def _moments(cfg, groups, stats, checks):
    tol = cfg.options["moment_tol"]
    for N, recs in groups.items():
        st = stats.setdefault(str(N), {})
        for k in cfg.options["k"]:
            if k not in (2, 4):
                raise ConfigError("MomentCheck experiments record k = 2 and k = 4 only; use moment_check() otherwise")
            v = _col(recs, f"moment_{k}")
            mean, se, target = float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)), moment_target(cfg.alpha, cfg.beta, k)
            st[f"moment_{k}"] = {"mean": mean, "std_error": se, "target": target}
            checks.append(Check(f"N={N} |mean moment k={k} - target|", abs(mean - target), tol, abs(mean - target) <= tol))


def _trace(cfg, groups, stats, checks):
    tol = cfg.options["ks_tol"]
    med = {}
    for N, recs in groups.items():
        med[N] = float(np.median(np.abs(_col(recs, "trace_over_bn"))))
        stats.setdefault(str(N), {})["median_abs_trace_over_bn"] = med[N]
    ns = cfg.n_values
    for n0, n1 in zip(ns, ns[1:]):
        checks.append(Check(f"median |trace/b_N| decreases N={n0}->{n1}", med[n1] - med[n0], 0.0, med[n1] < med[n0]))
        ks = ks_distance(_col(groups[n0], "sumsq_over_bn2"), _col(groups[n1], "sumsq_over_bn2"))
        stats[f"ks_sumsq_{n0}_{n1}"] = ks
        checks.append(Check(f"KS(sum lambda^2/b_N^2) N={n0} vs N={n1}", ks, tol, ks <= tol))


_ANALYZERS: dict[Kind, Callable] = {
    Kind.PHASE_PROBABILITY: _phase_probability,
    Kind.FRECHET: _frechet,
    Kind.LOW_TEMP_LIMIT: _low_temp,
    Kind.HIGH_TEMP_STABILITY: _high_temp,
    Kind.MOMENT_CHECK: _moments,
    Kind.TRACE_DIAGNOSTICS: _trace,
}


def analyze(cfg: ExperimentConfig, records: list[TrialRecord], kind: Kind | None = None) -> SummaryReport:
    """Summarize a run; ``kind`` defaults to the configured one.

    Statistics are computed on trials sorted by index, so the report does not
    depend on the order in which trials finished.
    """
    kind = Kind(kind or cfg.kind)
    records = sorted(records, key=lambda r: r.trial)
    groups = _by_n(records, cfg)
    stats: dict = {}
    checks: list[Check] = []
    _saddle_checks(cfg, groups, stats, checks)
    analyzer_cfg = cfg if kind is cfg.kind else ExperimentConfig(
        cfg.alpha, cfg.beta, cfg.n_values, cfg.trials, cfg.master_seed, kind,
        {k: v for k, v in cfg.options.items() if k in COMMON_OPTIONS},
    )
    _ANALYZERS[kind](analyzer_cfg, groups, stats, checks)
    n_failed = sum(r.failed for r in records)
    return SummaryReport(kind.value, len(records), n_failed, stats, checks)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[TrialRecord], SummaryReport]:
    records = run_trials(cfg, threads)
    return records, analyze(cfg, records)


@dataclass(frozen=True)
class MomentResult:
    mean: float
    std_error: float
    target: float
    k: int


def moment_check(
    alpha: float,
    beta: float,
    N: int,
    trials: int,
    k: int,
    seed: int,
    *,
    allow_odd: bool = False,
    truncation_mode: str = "indicator",
    theta: float = 0.5,
) -> MomentResult:
    """Mean of ``(2 beta / b_N)^k sum_i lambda_i^k`` over truncated-ensemble trials.

    Entries are cut at ``b_N / (2 beta)``. Odd ``k`` is refused unless
    ``allow_odd`` is set; its target is zero.
    """
    if k < 1 or (k % 2 and not allow_odd):
        raise ValueError("k must be a positive even integer (pass allow_odd=True for odd k)")
    law = TailLaw(alpha, theta=theta)
    cut = normalizers(law, N).b_N / (2.0 * beta)
    spec = EnsembleSpec(N, law, cut, truncation_mode)
    vals = np.empty(trials)
    with threadpool_limits(limits=1):
        for t in range(trials):
            s = eigen_decompose(sample_matrix(spec, derive_seed(seed, t)))
            vals[t] = np.sum((2.0 * beta * s.mu) ** k)
    return MomentResult(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials)), moment_target(alpha, beta, k), k)


@dataclass(frozen=True)
class SeriesResult:
    mean_partial: float
    variance_partial: float
    diverging: bool
    terms: int


def _series_sums(alpha: float, beta: float, K: int) -> tuple[float, float]:
    c = (2.0 * beta) ** alpha
    t = np.arange(1, K + 1, dtype=float)
    harmonic = np.cumsum(1.0 / t)
    mean = float(np.sum(c / (2.0 * t - alpha)))
    var = float(np.sum(c / (2.0 * (2.0 * t + 2.0 - alpha)) * harmonic))
    return mean, var


def t_moment_series(alpha: float, beta: float, terms: int, threshold: float = 1e-3) -> SeriesResult:
    """Partial sums of the formal mean and variance series of the high-temperature limit.

    Both series diverge (terms decay like ``1/t`` and ``log(n)/n``); the flag
    reports whether doubling the number of terms moves either partial sum by
    more than ``threshold``.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    m1, v1 = _series_sums(alpha, beta, terms)
    m2, v2 = _series_sums(alpha, beta, 2 * terms)
    return SeriesResult(m1, v1, bool(abs(m2 - m1) > threshold or abs(v2 - v1) > threshold), terms)
