"""Command-line front end.

Exit status: 0 on success, 1 on bad input, 2 on numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import EnsembleSpec, SampledMatrix, sample_matrix, whp_diagnostics
from .experiments import ConfigError, ExperimentConfig, analyze, derive_seed, run_trials, t_moment_series
from .free_energy import (
    SaddleContext,
    log_z_bessel_n2,
    log_z_laplace,
    log_z_quadrature,
    log_z_sphere_mc,
    solve_gamma,
)
from .heavy_tail import TailLaw, normalizers
from .spectra import Spectrum, eigen_decompose, summarize
from .storage import RunManifest, read_trials_csv, utc_now, write_manifest, write_summary_json, write_trials_csv

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
THREADS_ENV = "LEVY_SSK_THREADS"


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=float))


def _load_config(path: str) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {path}")
    if p.suffix == ".csv":
        return read_trials_csv(p)[0]
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(raw)


def _threads(arg: int | None) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get(THREADS_ENV)
        try:
            n = int(env) if env else 1
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if n < 1:
        raise InputError("thread count must be >= 1")
    return n


def cmd_experiment(args) -> int:
    cfg = _load_config(args.config)
    threads = _threads(args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.to_dict(), __version__, cfg.master_seed, started=utc_now())
    records = run_trials(cfg, threads)
    report = analyze(cfg, records)
    manifest.finished = utc_now()
    paths = {
        "trials_csv": str(out / "trials.csv"),
        "summary_json": str(out / "summary.json"),
        "manifest_json": str(out / "manifest.json"),
    }
    manifest.outputs = paths
    if args.plot:
        from .plots import emit_plots

        paths.update(emit_plots(cfg, records, out, manifest.to_dict()))
    write_trials_csv(paths["trials_csv"], cfg, records, __version__)
    write_summary_json(paths["summary_json"], report, manifest)
    write_manifest(paths["manifest_json"], manifest)
    status = "PASS" if report.passed else "FAIL"
    print(f"{cfg.kind.value}: {status} ({report.n_failed} failed trials of {report.n_trials})")
    for c in report.checks:
        print(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.value:.6g} (threshold {c.threshold:.6g})")
    print(f"wrote {', '.join(paths.values())}")
    return EXIT_OK


def cmd_sample_spectrum(args) -> int:
    law = TailLaw(args.alpha, theta=args.theta)
    m = sample_matrix(EnsembleSpec(args.n, law), args.seed)
    s = eigen_decompose(m)
    out = {"N": args.n, "seed": args.seed, "b_N": m.b_N, **summarize(s, args.eps).__dict__}
    if args.beta is not None:
        sr = solve_gamma(SaddleContext(s, args.beta))
        out.update(phase=sr.phase.value, gamma_over_bN=sr.w, X_N=sr.X_N)
    _emit(out)
    return EXIT_OK


def _parse_eigs(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"--eigs must be comma-separated numbers, got {text!r}") from None


def cmd_free_energy(args) -> int:
    if args.eigs is not None:
        eigs = _parse_eigs(args.eigs)
        if args.n is not None and args.n != eigs.size:
            raise InputError(f"--n {args.n} does not match {eigs.size} eigenvalues")
        if not np.all(np.isfinite(eigs)):
            raise InputError("eigenvalues must be finite")
        if args.bn is None or not args.bn > 0:
            raise InputError("--bn must be given and positive with --eigs")
        # the sphere average only sees the spectrum, so the diagonal matrix stands in for M
        m = SampledMatrix.from_dense(np.diag(eigs), args.bn)
        s = Spectrum.from_values(eigs, args.bn)
    else:
        if args.n is None or args.alpha is None:
            raise InputError("give either --eigs with --bn, or --n with --alpha to sample a matrix")
        m = sample_matrix(EnsembleSpec(args.n, TailLaw(args.alpha)), args.seed)
        s = eigen_decompose(m)
    if not args.beta > 0:
        raise InputError("--beta must be positive")
    ctx = SaddleContext(s, args.beta)
    sr = solve_gamma(ctx)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    results = [
        log_z_quadrature(ctx, sr),
        log_z_laplace(ctx, sr),
        log_z_sphere_mc(m, args.beta, args.mc_samples, rng),
    ]
    if s.N == 2:
        results.append(log_z_bessel_n2(s.eigs[0], s.eigs[1], args.beta, s.b_N))
    print(f"N={s.N} beta={args.beta} b_N={s.b_N:.17g} phase={sr.phase.value} gamma/b_N={sr.w:.17g}")
    for r in results:
        print(f"{r.method.value:<10} log Z = {r.log_z:.12f}  (error estimate {r.error_estimate:.3g})")
    if s.N != 2:
        print(f"{'BesselN2':<10} n/a (needs N = 2)")
    return EXIT_OK


def cmd_series(args) -> int:
    r = t_moment_series(args.alpha, args.beta, args.terms, args.threshold)
    _emit({"terms": r.terms, "mean_partial_sum": r.mean_partial, "variance_partial_sum": r.variance_partial,
           "diverging": r.diverging})
    return EXIT_OK


def cmd_diagnostics(args) -> int:
    law = TailLaw(args.alpha, theta=args.theta)
    spec = EnsembleSpec(args.n, law)
    counts = {"small_diagonal": 0, "no_big_pair_with_big_diagonal": 0, "no_row_with_two_big": 0,
              "dominant_entry_or_small_rest": 0}
    for t in range(args.replicates):
        rep = whp_diagnostics(sample_matrix(spec, derive_seed(args.seed, t)), args.delta, args.eps)
        for k in counts:
            counts[k] += getattr(rep, k)
    _emit({"N": args.n, "alpha": args.alpha, "replicates": args.replicates, "b_N": normalizers(law, args.n).b_N,
           "pass_fraction": {k: v / args.replicates for k, v in counts.items()}})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="levy-ssk", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("experiment", help="run an experiment config (JSON, or a trials CSV to re-run)")
    e.add_argument("--config", required=True)
    e.add_argument("--out", default="out")
    e.add_argument("--threads", type=int, default=None, help=f"worker count (fallback: ${THREADS_ENV})")
    e.add_argument("--plot", action="store_true", help="also write SVG figures")
    e.set_defaults(func=cmd_experiment)

    s = sub.add_parser("sample-spectrum", help="sample one matrix and summarize its spectrum")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--beta", type=float, default=None)
    s.set_defaults(func=cmd_sample_spectrum)

    f = sub.add_parser("free-energy", help="log Z_N of one spectrum by every method")
    f.add_argument("--n", type=int, default=None)
    f.add_argument("--eigs", default=None, help="comma-separated eigenvalues")
    f.add_argument("--bn", type=float, default=None)
    f.add_argument("--beta", type=float, required=True)
    f.add_argument("--alpha", type=float, default=None, help="sample a matrix with this exponent instead of --eigs")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--mc-samples", type=int, default=100_000)
    f.set_defaults(func=cmd_free_energy)

    r = sub.add_parser("series", help="partial sums of the formal mean/variance series")
    r.add_argument("--alpha", type=float, required=True)
    r.add_argument("--beta", type=float, required=True)
    r.add_argument("--terms", type=int, default=1000)
    r.add_argument("--threshold", type=float, default=1e-3)
    r.set_defaults(func=cmd_series)

    d = sub.add_parser("diagnostics", help="structural with-high-probability checks over replicates")
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--replicates", type=int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--theta", type=float, default=0.5)
    d.add_argument("--delta", type=float, default=0.1)
    d.add_argument("--eps", type=float, default=0.1)
    d.set_defaults(func=cmd_diagnostics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
