"""Log-partition function of the spherical model through its contour representation.

The partition function over the radius-sqrt(N) sphere is

    Z_N = C_N / i * int_{gamma - i inf}^{gamma + i inf} exp(N G(z) / (2 b_N)) dz,
    G(z) = 2 beta z - (b_N / N) sum_i log(z - lambda_i),
    C_N  = Gamma(N/2) b_N^(N/2 - 1) / (2 pi (N beta)^(N/2 - 1)),

valid for any gamma > lambda_1. All work happens in rescaled coordinates
``w = z / b_N`` and ``mu_i = lambda_i / b_N`` through

    G(b_N w) = b_N g(w) - b_N log b_N,   g(w) = 2 beta w - (1/N) sum_i log(w - mu_i),

so that ``G^(k)(b_N w) b_N^(k-1) = g^(k)(w)``. With ``t = b_N s`` the powers of
``b_N`` cancel out of ``log Z_N`` entirely:

    log Z_N = P_N + (N/2) g(w) + log int exp((N/2)(g(w + i s) - g(w))) ds,
    P_N = log Gamma(N/2) - log(2 pi) - (N/2 - 1) log(N beta).

The saddle point is carried as the gap ``u = w - mu_1``; every distance
``w - mu_i = u + (mu_1 - mu_i)`` is then a sum of two nonnegative numbers.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .bessel import log_i0
from .ensemble import SampledMatrix
from .spectra import Spectrum

__all__ = [
    "Phase",
    "Method",
    "SaddleContext",
    "SaddleResult",
    "LogZResult",
    "QuadratureError",
    "g_value",
    "solve_gamma",
    "classify_phase",
    "log_c_n",
    "log_z_quadrature",
    "log_z_laplace",
    "log_z_sphere_mc",
    "log_z_bessel_n2",
    "high_temp_residual",
    "low_temp_limit",
]


class Phase(str, enum.Enum):
    F1 = "F1"  # lambda_1 < b_N / (2 beta): log Z_N is O(1)
    F2 = "F2"  # lambda_1 >= b_N / (2 beta): log Z_N is Theta(N)


class Method(str, enum.Enum):
    QUADRATURE = "Quadrature"
    LAPLACE = "Laplace"
    SPHERE_MC = "SphereMC"
    BESSEL_N2 = "BesselN2"


class QuadratureError(ArithmeticError):
    """Contour quadrature did not converge; ``partial`` holds the estimate so far."""

    def __init__(self, msg: str, partial: float):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class SaddleContext:
    spectrum: Spectrum
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def N(self) -> int:
        return self.spectrum.N

    @property
    def offsets(self) -> np.ndarray:
        """``mu_1 - mu_i``, nonnegative and exactly zero for the top eigenvalue."""
        mu = self.spectrum.mu
        return mu[0] - mu


@dataclass(frozen=True)
class SaddleResult:
    gamma: float  # raw units
    w: float  # gamma / b_N
    gap: float  # (gamma - lambda_1) / b_N, kept separately for precision
    g_at_gamma: float
    g2_at_gamma: float
    phase: Phase
    X_N: float
    stick_gap: float  # gamma - lambda_1, raw units
    residual: float  # g'(w)
    bracket_ok: bool


@dataclass(frozen=True)
class LogZResult:
    log_z: float
    method: Method
    error_estimate: float


def g_value(ctx: SaddleContext, w, k: int = 0):
    """Rescaled derivative ``G^(k)(b_N w) b_N^(k-1)``; ``k = 0`` omits the ``-log b_N`` constant."""
    if k not in range(5):
        raise ValueError("derivative order must be 0..4")
    mu = ctx.spectrum.mu
    diff = np.asarray(w) - mu
    if np.any(diff == 0):
        raise ZeroDivisionError("w coincides with an eigenvalue")
    N = ctx.N
    if k == 0:
        if np.iscomplexobj(diff) or np.any(diff < 0):
            logs = np.log(diff.astype(complex))
        else:
            logs = np.log(diff)
        return 2.0 * ctx.beta * w - logs.sum() / N
    val = (-1) ** k * math.factorial(k - 1) * np.sum(diff ** (-float(k))) / N
    return val + (2.0 * ctx.beta if k == 1 else 0.0)


def _gprime_at_gap(u: float, offsets: np.ndarray, beta: float) -> float:
    return 2.0 * beta - np.sum(1.0 / (u + offsets)) / offsets.size


def classify_phase(s: Spectrum, beta: float) -> Phase:
    return Phase.F1 if s.eigs[0] < s.b_N / (2.0 * beta) else Phase.F2


def solve_gamma(ctx: SaddleContext) -> SaddleResult:
    """Unique root of ``G'`` on ``(lambda_1, inf)``.

    In gap units the root lies in ``[1/(4 beta N), 1/beta]``: at the left end
    the top pole alone contributes ``4 beta``, at the right end every pole
    contributes at most ``beta``.
    """
    N, beta = ctx.N, ctx.beta
    off = ctx.offsets
    lo, hi = 1.0 / (4.0 * beta * N), 1.0 / beta
    f_lo, f_hi = _gprime_at_gap(lo, off, beta), _gprime_at_gap(hi, off, beta)
    bracket_ok = bool(f_lo < 0 < f_hi)
    if not bracket_ok:
        raise ArithmeticError(f"saddle bracket invalid: g'(lo)={f_lo}, g'(hi)={f_hi}")
    u = optimize.brentq(_gprime_at_gap, lo, hi, args=(off, beta), xtol=1e-300, rtol=1e-15, maxiter=500)
    d = u + off
    mu1 = ctx.spectrum.mu[0]
    w = mu1 + u
    b = ctx.spectrum.b_N
    return SaddleResult(
        gamma=b * w,
        w=w,
        gap=u,
        g_at_gamma=2.0 * beta * w - np.sum(np.log(d)) / N,
        g2_at_gamma=float(np.sum(d**-2.0) / N),
        phase=classify_phase(ctx.spectrum, beta),
        X_N=N * (2.0 * beta * w - 1.0),
        stick_gap=b * u,
        residual=_gprime_at_gap(u, off, beta),
        bracket_ok=bracket_ok,
    )


def log_c_n(N: int, beta: float, b_N: float) -> float:
    if N < 1:
        raise ValueError("N must be >= 1")
    e = N / 2.0 - 1.0
    return special.gammaln(N / 2.0) + e * math.log(b_N) - math.log(2.0 * math.pi) - e * math.log(N * beta)


def _log_prefactor(N: int, beta: float) -> float:
    # log C_N + log b_N - (N/2) log b_N, with the b_N powers cancelled analytically
    return special.gammaln(N / 2.0) - math.log(2.0 * math.pi) - (N / 2.0 - 1.0) * math.log(N * beta)


class _Integrand:
    """``exp((N/2)(g(w + i s) - g(w)))`` split into modulus and phase."""

    def __init__(self, d: np.ndarray, beta: float):
        self.d = d
        self.omega = d.size * beta

    def log_amp(self, s):
        return -0.25 * np.sum(np.log1p((s / self.d) ** 2))

    def psi(self, s):
        return 0.5 * np.sum(np.arctan(s / self.d))

    def real(self, s):
        return math.exp(self.log_amp(s)) * math.cos(self.omega * s - self.psi(s))

    def cos_part(self, s):
        return math.exp(self.log_amp(s)) * math.cos(self.psi(s))

    def sin_part(self, s):
        return math.exp(self.log_amp(s)) * math.sin(self.psi(s))

    def tail_bound(self, T: float) -> float:
        """Rigorous bound on ``int_T^inf`` of the modulus.

        For ``s >= T`` each factor obeys ``(1 + s^2/d^2) / (1 + T^2/d^2) >= (s/T)^(2 r)``
        with ``r = T^2 / (d^2 + T^2)``, so the modulus is at most
        ``A(T) (s/T)^(-R)``, ``R = sum(r)/2``.
        """
        x = (T / self.d) ** 2
        R = 0.5 * np.sum(x / (1.0 + x))
        if R <= 1.0:
            return math.inf
        return math.exp(self.log_amp(T)) * T / (R - 1.0)


_PANEL_BUDGET = 400


def _fourier_tail(fn, weight: str, a: float, omega: float, scale: float):
    # the extrapolation in QAWF occasionally breaks down at the tightest tolerance; loosen stepwise
    best = (0.0, math.inf)
    for rel in (1e-13, 1e-12, 1e-11, 1e-10):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e = integrate.quad(fn, a, np.inf, weight=weight, wvar=omega, epsabs=rel * scale, limlst=200)
        if e < best[1]:
            best = (val, e)
        if e <= 10.0 * rel * scale:
            break
    return best


_MAX_PERIODS_PER_PANEL = 100.0


def _contour_integral(d: np.ndarray, beta: float, g2: float, rtol: float = 1e-10):
    """``int_0^inf Re exp((N/2)(g(w+is) - g(w))) ds`` and an absolute error bound."""
    f = _Integrand(d, beta)
    N = d.size
    sigma = math.sqrt(2.0 / (N * g2))
    a, b = 0.0, 0.5 * min(d.min(), sigma)
    acc, err = 0.0, 0.0
    for _ in range(_PANEL_BUDGET):
        if (b - a) * f.omega / (2.0 * math.pi) > _MAX_PERIODS_PER_PANEL:
            # slowly decaying oscillatory remainder: Fourier-weighted quadrature on [a, inf)
            scale = max(abs(acc), 1e-300)
            c_val, c_err = _fourier_tail(f.cos_part, "cos", a, f.omega, scale)
            s_val, s_err = _fourier_tail(f.sin_part, "sin", a, f.omega, scale)
            acc += c_val + s_val
            err += c_err + s_err
            if c_err + s_err > rtol * abs(acc):
                raise QuadratureError(f"oscillatory tail did not converge beyond s={a}", acc)
            return acc, err
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, e, info = integrate.quad(
                f.real, a, b, epsabs=1e-3 * rtol * abs(acc), epsrel=rtol, limit=200, full_output=1
            )[:3]
        acc += val
        err += e
        bound = f.tail_bound(b)
        if bound <= 1e-3 * rtol * abs(acc):
            return acc, err + bound
        a, b = b, 2.0 * b
    raise QuadratureError("panel budget exhausted", acc)


def log_z_quadrature(ctx: SaddleContext, sr: SaddleResult) -> LogZResult:
    """Exact ``log Z_N`` by quadrature along the vertical line through the saddle.

    The integrand is conjugate-symmetric in ``s``, so twice the integral of its
    real part over ``[0, inf)`` is used.
    """
    d = sr.gap + ctx.offsets
    half, abserr = _contour_integral(d, ctx.beta, sr.g2_at_gamma)
    integral = 2.0 * half
    if not integral > 0:
        raise QuadratureError("contour integral is not positive", integral)
    N = ctx.N
    log_z = _log_prefactor(N, ctx.beta) + 0.5 * N * sr.g_at_gamma + math.log(integral)
    return LogZResult(log_z, Method.QUADRATURE, 2.0 * abserr / integral)


def log_z_laplace(ctx: SaddleContext, sr: SaddleResult) -> LogZResult:
    """Second-order steepest-descent value of ``log Z_N``.

    Asymptotically exact in phase F1; in phase F2 only ``log Z_N / N`` is
    captured to leading order.
    """
    if not sr.g2_at_gamma > 0:
        raise ArithmeticError("G''(gamma) must be positive")
    N = ctx.N
    # log C_N + N G(gamma)/(2 b_N) + log(b_N/N)/2 + log(4 pi / G''(gamma))/2, b_N cancelled
    log_z = (
        _log_prefactor(N, ctx.beta)
        + 0.5 * N * sr.g_at_gamma
        + 0.5 * math.log(4.0 * math.pi / N)
        - 0.5 * math.log(sr.g2_at_gamma)
    )
    return LogZResult(log_z, Method.LAPLACE, 0.0)


def log_z_sphere_mc(
    m: SampledMatrix, beta: float, samples: int, rng: np.random.Generator, chunk: int = 100_000
) -> LogZResult:
    """Monte Carlo average of ``exp(beta <x, M x> / b_N)`` over uniform points on the sphere.

    Error estimate is the delta-method standard error of the log of the mean.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    M = m.dense()
    N = m.N
    scale = beta * N / m.b_N
    exps = np.empty(samples)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        g = rng.standard_normal((k, N))
        exps[done : done + k] = scale * np.einsum("ij,ij->i", g @ M, g) / np.einsum("ij,ij->i", g, g)
        done += k
    top = exps.max()
    wts = np.exp(exps - top)
    mean = wts.mean()
    se = wts.std(ddof=1) / math.sqrt(samples) / mean if samples > 1 else math.inf
    return LogZResult(top + math.log(mean), Method.SPHERE_MC, float(se))


def log_z_bessel_n2(lambda1: float, lambda2: float, beta: float, b_N: float) -> LogZResult:
    """Closed form at ``N = 2``: the circle average reduces to ``I0``."""
    return LogZResult(
        beta * (lambda1 + lambda2) / b_N + log_i0(beta * (lambda1 - lambda2) / b_N), Method.BESSEL_N2, 0.0
    )


def high_temp_residual(X_N: float, N: int) -> float:
    """``X_N/2 - (N/2) log(1 + X_N/N)``, which vanishes as ``N`` grows."""
    if not X_N > -N:
        raise ValueError("need X_N > -N")
    return 0.5 * X_N - 0.5 * N * math.log1p(X_N / N)


def low_temp_limit(x, beta: float):
    """``beta x - log(2 e beta x) / 2``, strictly increasing on ``x >= 1/(2 beta)``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 1.0 / (2.0 * beta)):
        raise ValueError("low-temperature limit is defined for x >= 1/(2 beta)")
    out = beta * x_arr - 0.5 * (1.0 + np.log(2.0 * beta * x_arr))
    return float(out) if out.ndim == 0 else out
