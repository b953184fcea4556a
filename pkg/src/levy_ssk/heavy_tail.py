"""Heavy-tailed entry laws, their quantiles, sampling and normalizing sequences.

A law is described by its two-sided tail ``P(|X| > u) = L(u) u**(-alpha)``
with ``alpha`` in (0, 2), a slowly varying factor ``L`` and an independent
sign that is positive with probability ``theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "Const",
    "PolyLog",
    "TailLaw",
    "Normalizers",
    "tail",
    "quantile",
    "sample",
    "normalizers",
    "frechet_cdf",
    "conditional_X_tail",
    "conditional_X_quantile",
    "truncated_moment",
]


@dataclass(frozen=True)
class Const:
    """Constant slowly varying factor, i.e. a pure Pareto tail."""


@dataclass(frozen=True)
class PolyLog:
    """Slowly varying factor ``(log(e * max(u, 1)))**p``."""

    p: float


CONST = Const()


def _raw_tail(alpha, sv, u):
    u = np.asarray(u, dtype=float)
    v = np.maximum(u, 1.0)
    if isinstance(sv, Const):
        return v ** (-alpha)
    return (1.0 + np.log(v)) ** sv.p * v ** (-alpha)


def _locate_u0(alpha: float, sv) -> float:
    if isinstance(sv, Const) or sv.p <= alpha:
        return 1.0
    # raw tail rises until 1 + log u = p / alpha, then decays; u0 is where it recrosses 1
    log_peak = sv.p / alpha - 1.0
    if _raw_tail(alpha, sv, math.exp(log_peak)) <= 1.0:
        return 1.0
    hi = log_peak + 1.0
    while _raw_tail(alpha, sv, math.exp(hi)) > 1.0:
        hi *= 2.0
    root = optimize.brentq(
        lambda v: math.log(_raw_tail(alpha, sv, math.exp(v))), log_peak, hi, xtol=1e-15
    )
    u0 = math.exp(root)
    while _raw_tail(alpha, sv, u0) > 1.0:
        u0 = math.nextafter(u0, math.inf)
    return u0


@dataclass(frozen=True)
class TailLaw:
    """Symmetric-or-skewed heavy-tailed law with exponent ``alpha``.

    ``u0`` is derived at construction: the edge of the region where the tail
    equals one. Beyond ``u0`` the tail is strictly decreasing.
    """

    alpha: float
    slow_variation: Const | PolyLog = CONST
    theta: float = 0.5
    u0: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in the open interval (0, 2), got {self.alpha}")
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not isinstance(self.slow_variation, (Const, PolyLog)):
            raise TypeError("slow_variation must be Const() or PolyLog(p)")
        object.__setattr__(self, "u0", _locate_u0(self.alpha, self.slow_variation))
        if isinstance(self.slow_variation, PolyLog):
            self._check_slow_variation()

    def _check_slow_variation(self):
        # L(x) exp(x**delta) must be eventually increasing; checked on the far half of a log grid
        logx = np.linspace(math.log(max(self.u0, math.e)), 460.0, 2001)[1000:]
        logL = self.slow_variation.p * np.log1p(logx)
        for delta in (0.05, 0.2, 1.0):
            h = logL + np.exp(np.minimum(delta * logx, 700.0))
            if np.any(np.diff(h) <= 0):
                raise ValueError(f"L(x) exp(x^{delta}) is not increasing on the far grid")

    @property
    def is_pareto(self) -> bool:
        return isinstance(self.slow_variation, Const)


@dataclass(frozen=True)
class Normalizers:
    b_N: float
    a_N: float
    c_N: float


def tail(law: TailLaw, u):
    """``P(|X| > u)``; accepts scalars or arrays."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0) or np.any(np.isnan(u_arr)):
        raise ValueError("tail is defined for u >= 0 only")
    with np.errstate(invalid="ignore", over="ignore"):
        raw = _raw_tail(law.alpha, law.slow_variation, u_arr)
    out = np.where(u_arr <= law.u0, 1.0, np.where(np.isinf(u_arr), 0.0, raw))
    return float(out) if out.ndim == 0 else out


def _nudge_up(law: TailLaw, r, q):
    # round-off can leave tail(r) a hair above q; step r up by a doubling number of ulps until it is not
    r = np.array(r, dtype=float, copy=True)
    step = np.spacing(r)
    for _ in range(64):
        bad = np.asarray(tail(law, r)) > q
        if not np.any(bad):
            break
        r = np.where(bad, r + step, r)
        step = 2.0 * step
    return r


def _polylog_quantile(law: TailLaw, q: np.ndarray) -> np.ndarray:
    top = math.log(np.finfo(float).max)
    if np.any(np.asarray(tail(law, math.exp(top))) > q):
        raise OverflowError("quantile lies beyond the floating-point range")
    lo = np.full(q.shape, math.log(law.u0))
    hi = lo.copy()
    # grow the upper bracket until tail(exp(hi)) <= q everywhere
    while True:
        bad = np.asarray(tail(law, np.exp(hi))) > q
        if not np.any(bad):
            break
        hi = np.where(bad, np.minimum(2.0 * hi + 1.0, top), hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        above = np.asarray(tail(law, np.exp(mid))) > q
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.exp(hi)


def quantile(law: TailLaw, q):
    """Smallest ``u`` with ``tail(u) <= q``, for ``q`` in (0, 1].

    Raises ``OverflowError`` when that point is not a finite double.
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(~(q_arr > 0.0)) or np.any(q_arr > 1.0):
        raise ValueError("quantile needs q in (0, 1]; q = 0 is unbounded")
    if law.is_pareto:
        with np.errstate(over="ignore"):
            r = q_arr ** (-1.0 / law.alpha)
        if not np.all(np.isfinite(r)):
            raise OverflowError("quantile lies beyond the floating-point range")
    else:
        r = _polylog_quantile(law, np.atleast_1d(q_arr)).reshape(q_arr.shape)
    r = np.maximum(_nudge_up(law, r, q_arr), law.u0)
    return float(r) if r.ndim == 0 else r


def sample(law: TailLaw, rng: np.random.Generator, size=None):
    """Draw from the law by inverse transform of ``|X|`` and an independent sign.

    Magnitudes are drawn first, signs second, so a given stream always yields
    the same values.
    """
    u = 1.0 - rng.random(size)  # in (0, 1]
    mag = quantile(law, u)
    positive = rng.random(size) < law.theta
    return np.where(positive, mag, -mag) if size is not None else (mag if positive else -mag)


def _truncated_abs_mean(law: TailLaw, a: float) -> float:
    """``E[|X| 1(|X| <= a)] = int_0^a (tail(u) - tail(a)) du``."""
    ta = tail(law, a)
    if a <= law.u0:
        return 0.0
    head = law.u0 * (1.0 - ta)
    if law.is_pareto:
        al = law.alpha
        if abs(al - 1.0) < 1e-15:
            body = math.log(a)
        else:
            body = (a ** (1.0 - al) - 1.0) / (1.0 - al)
        return head + body - (a - 1.0) * ta
    # substitute u = exp(v) to tame the long range of integration
    f = lambda v: (tail(law, math.exp(v)) - ta) * math.exp(v)
    body, _ = integrate.quad(f, math.log(law.u0), math.log(a), epsabs=0.0, epsrel=1e-8, limit=200)
    return head + body


def normalizers(law: TailLaw, N: int) -> Normalizers:
    if N < 1:
        raise ValueError("N must be >= 1")
    b_N = quantile(law, 2.0 / (N * (N + 1.0)))
    a_N = quantile(law, 1.0 / N)
    skew = 2.0 * law.theta - 1.0
    c_N = 0.0 if skew == 0.0 else N * skew * _truncated_abs_mean(law, a_N)
    return Normalizers(b_N=b_N, a_N=a_N, c_N=c_N)


def frechet_cdf(alpha: float, x):
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(x_arr > 0, np.exp(-np.power(np.maximum(x_arr, 1e-300), -alpha)), 0.0)
    return float(out) if out.ndim == 0 else out


def conditional_X_tail(alpha: float, beta: float, u):
    """Tail of the low-temperature limit variable, supported on ``(1/(2 beta), inf)``."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 1.0 / (2.0 * beta)):
        raise ValueError("the conditional law lives on u > 1/(2 beta)")
    out = -np.expm1(-(u_arr ** -alpha)) / -math.expm1(-((2.0 * beta) ** alpha))
    return float(out) if out.ndim == 0 else out


def conditional_X_quantile(alpha: float, beta: float, q):
    """Inverse of :func:`conditional_X_tail`: the ``u`` with tail ``q`` in (0, 1]."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(~(q_arr > 0.0)) or np.any(q_arr > 1.0):
        raise ValueError("q must lie in (0, 1]")
    mass = q_arr * -math.expm1(-((2.0 * beta) ** alpha))
    out = (-np.log1p(-mass)) ** (-1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def truncated_moment(law: TailLaw, c: float, k: int, mode: str = "indicator") -> float:
    """``E|Y|^k`` for ``Y = X 1(|X| <= c)`` (``mode="indicator"``) or ``Y = clip(X, -c, c)``.

    Uses ``E|Y|^k = int_0^c k u^(k-1) P(|Y| > u) du`` with
    ``P(|Y| > u) = tail(u) - tail(c)`` for the indicator and ``tail(u)`` for clipping.
    """
    if mode not in ("indicator", "clip"):
        raise ValueError("mode must be 'indicator' or 'clip'")
    tc = tail(law, c)
    drop = tc if mode == "indicator" else 0.0
    if c <= law.u0:
        # below the tail region |X| <= c only if |X| = u0 = c
        return (1.0 - drop) * c**k if mode == "clip" else 0.0
    head = (1.0 - drop) * law.u0**k
    f = lambda v: k * math.exp(k * v) * (tail(law, math.exp(v)) - drop)
    body, _ = integrate.quad(f, math.log(law.u0), math.log(c), epsabs=0.0, epsrel=1e-10, limit=200)
    return head + body
