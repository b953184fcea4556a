#!/usr/bin/env python3
"""Cross-check contour quadrature against the N=2 Bessel closed form and sphere Monte Carlo."""
from __future__ import annotations

import argparse
import time

import numpy as np

from levy_ssk import EnsembleSpec, SaddleContext, Spectrum, TailLaw, derive_seed, eigen_decompose, sample_matrix
from levy_ssk.free_energy import log_z_bessel_n2, log_z_quadrature, log_z_sphere_mc, solve_gamma


def bessel_leg(count: int, seed: int) -> float:
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for _ in range(count):
        lam = np.sort(rng.uniform(-5, 5, 2))[::-1]
        beta, b = rng.uniform(0.05, 3), rng.uniform(0.2, 5)
        s = Spectrum.from_values(lam, b)
        ctx = SaddleContext(s, beta)
        q = log_z_quadrature(ctx, solve_gamma(ctx)).log_z
        worst = max(worst, abs(q - log_z_bessel_n2(lam[0], lam[1], beta, b).log_z))
    return worst


def mc_leg(count: int, N: int, samples: int, seed: int) -> int:
    spec = EnsembleSpec(N, TailLaw(1.0))
    hits = 0
    for t in range(count):
        m = sample_matrix(spec, derive_seed(seed, t))
        ctx = SaddleContext(eigen_decompose(m), 0.5)
        q = log_z_quadrature(ctx, solve_gamma(ctx)).log_z
        mc = log_z_sphere_mc(m, 0.5, samples, np.random.Generator(np.random.PCG64(derive_seed(seed ^ 1, t))))
        z = abs(q - mc.log_z) / mc.error_estimate
        hits += z <= 3.0
        print(f"  matrix {t:2d}: quadrature {q:+.6f}  MC {mc.log_z:+.6f} +- {mc.error_estimate:.1e}  |z|={z:.2f}")
    return hits


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=100)
    ap.add_argument("--matrices", type=int, default=50)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    t0 = time.perf_counter()
    print(f"N=2 worst |quadrature - Bessel| = {bessel_leg(args.pairs, args.seed):.3e}")
    hits = mc_leg(args.matrices, args.n, args.samples, args.seed)
    print(f"N={args.n}: {hits}/{args.matrices} within 3 MC standard errors ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
