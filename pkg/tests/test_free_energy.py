import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import special

from levy_ssk.ensemble import EnsembleSpec, SampledMatrix, sample_matrix
from levy_ssk.experiments import derive_seed
from levy_ssk.free_energy import (
    Method,
    Phase,
    SaddleContext,
    classify_phase,
    g_value,
    high_temp_residual,
    log_c_n,
    log_z_bessel_n2,
    log_z_laplace,
    log_z_quadrature,
    log_z_sphere_mc,
    low_temp_limit,
    solve_gamma,
)
from levy_ssk.heavy_tail import TailLaw
from levy_ssk.spectra import Spectrum, eigen_decompose


def ctx_of(values, beta=0.5, b=1.0):
    return SaddleContext(Spectrum.from_values(values, b), beta)


def quad(ctx):
    return log_z_quadrature(ctx, solve_gamma(ctx))


def rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


class TestGValue:
    def test_examples(self):
        beta = 0.7
        zero = ctx_of([0.0] * 5, beta)
        assert g_value(zero, 1 / (2 * beta), 1) == pytest.approx(0.0, abs=1e-15)
        assert g_value(ctx_of([0.0] * 5), 1.0, 2) == pytest.approx(1.0)
        assert g_value(ctx_of([1.0, -1.0]), 2.0, 0) == pytest.approx(2.0 - 0.5 * (math.log(1) + math.log(3)))

    def test_pole_and_order(self):
        c = ctx_of([1.0, 0.0])
        with pytest.raises(ZeroDivisionError):
            g_value(c, 1.0, 2)
        with pytest.raises(ValueError):
            g_value(c, 3.0, 5)

    def test_complex_argument_uses_principal_log(self):
        c = ctx_of([1.0, -0.5, 0.2], beta=0.8)
        w = 1.7 + 0.9j
        direct = 2 * 0.8 * w - sum(np.log(w - m) for m in (1.0, -0.5, 0.2)) / 3
        assert g_value(c, w, 0) == pytest.approx(direct, rel=1e-14)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=20), st.floats(0.3, 3.0), st.integers(1, 4))
    def test_derivatives_match_finite_differences(self, vals, gap, k):
        c = ctx_of(vals, beta=0.6)
        w = max(vals) + gap
        h = 1e-4 * gap
        fd = (g_value(c, w + h, k - 1) - g_value(c, w - h, k - 1)) / (2 * h)
        assert g_value(c, w, k) == pytest.approx(fd, rel=1e-6, abs=1e-8)


class TestSolveGamma:
    def test_single_pole(self):
        sr = solve_gamma(ctx_of([0.0]))
        assert sr.gamma == pytest.approx(1.0, rel=1e-14)

    def test_quadratic_case(self):
        sr = solve_gamma(ctx_of([1.0, -1.0]))
        assert sr.gamma == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-14)

    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50),
        st.floats(0.01, 10.0),
        st.floats(1e-3, 1e9),
    )
    def test_root_postconditions(self, vals, beta, b):
        c = ctx_of(vals, beta, b)
        sr = solve_gamma(c)
        assert sr.bracket_ok
        assert sr.gap > 0 and sr.gamma > c.spectrum.eigs[0]
        assert abs(sr.residual) <= 1e-10
        # recomputing g' at w inherits the rounding of w itself, scaled by g''
        g2 = abs(g_value(c, sr.w, 2))
        assert abs(g_value(c, sr.w, 1)) <= 1e-9 * (1 + g2 * sr.gap) + 8 * np.spacing(sr.w) * g2
        N = c.N
        assert 1 / (4 * beta * N) <= sr.gap <= 1 / beta
        assert sr.X_N == pytest.approx(N * (2 * beta * sr.w - 1))
        assert sr.phase is classify_phase(c.spectrum, beta)

    def test_small_alpha_raw_scale(self):
        m = sample_matrix(EnsembleSpec(200, TailLaw(0.3)), 5)
        c = SaddleContext(eigen_decompose(m), 0.5)
        sr = solve_gamma(c)
        assert abs(sr.residual) <= 1e-10 and sr.stick_gap > 0


class TestPhase:
    def test_classification(self):
        beta, b = 0.8, 10.0
        edge = b / (2 * beta)
        assert classify_phase(Spectrum.from_values([0.9 * edge, 0.0], b), beta) is Phase.F1
        assert classify_phase(Spectrum.from_values([1.1 * edge, 0.0], b), beta) is Phase.F2
        assert classify_phase(Spectrum.from_values([edge, 0.0], b), beta) is Phase.F2


class TestLogCN:
    def test_examples(self):
        assert log_c_n(2, 0.3, 7.0) == pytest.approx(-math.log(2 * math.pi), rel=1e-15)
        assert log_c_n(4, 0.5, 10.0) == pytest.approx(math.log(5) - math.log(2 * math.pi), rel=1e-14)
        assert log_c_n(4, 0.5, 10.0) == pytest.approx(-0.228439, abs=1e-6)

    def test_stirling(self):
        N, beta, b = 1000, 0.5, 3.0
        stirling = 0.5 * math.log(4 * math.pi / N) + N / 2 * math.log(N / (2 * math.e)) + 1 / (6 * N)
        e = N / 2 - 1
        ref = stirling + e * math.log(b) - math.log(2 * math.pi) - e * math.log(N * beta)
        assert log_c_n(N, beta, b) == pytest.approx(ref, rel=1e-9)

    def test_domain(self):
        with pytest.raises(ValueError):
            log_c_n(0, 1.0, 1.0)


class TestQuadrature:
    def test_bessel_example(self):
        r = quad(ctx_of([1.0, -1.0]))
        assert r.method is Method.QUADRATURE
        assert r.log_z == pytest.approx(0.235914358507, abs=1e-10)
        assert r.error_estimate >= 0

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.05, 3.0), st.floats(0.1, 10.0))
    def test_matches_bessel_closed_form(self, l1, l2, beta, b):
        l1, l2 = max(l1, l2), min(l1, l2)
        r = quad(ctx_of([l1, l2], beta, b))
        assert r.log_z == pytest.approx(log_z_bessel_n2(l1, l2, beta, b).log_z, abs=1e-6)

    @pytest.mark.parametrize("N", [1, 2, 5, 50])
    def test_zero_matrix_gives_zero(self, N):
        assert quad(ctx_of([0.0] * N, beta=0.9)).log_z == pytest.approx(0.0, abs=1e-8)

    @given(st.floats(-3, 3), st.floats(0.1, 2.0))
    def test_single_site(self, lam, beta):
        # the radius-one sphere in one dimension is {-1, 1}, so Z = exp(beta lambda / b)
        assert quad(ctx_of([lam], beta, 1.0)).log_z == pytest.approx(beta * lam, abs=1e-7)

    def test_agrees_with_sphere_monte_carlo(self):
        m = sample_matrix(EnsembleSpec(10, TailLaw(1.0)), 3)
        q = quad(SaddleContext(eigen_decompose(m), 0.5)).log_z
        mc = log_z_sphere_mc(m, 0.5, 200_000, rng(1))
        assert abs(q - mc.log_z) <= 3 * mc.error_estimate

    @pytest.mark.parametrize("alpha,beta", [(1.0, 0.5), (0.5, 2.0), (1.7, 0.2)])
    def test_large_n_phases(self, alpha, beta):
        m = sample_matrix(EnsembleSpec(400, TailLaw(alpha)), 8)
        c = SaddleContext(eigen_decompose(m), beta)
        r = quad(c)
        assert np.isfinite(r.log_z) and r.error_estimate < 1e-6


class TestLaplace:
    def _trial(self, beta, phase, N=400):
        spec = EnsembleSpec(N, TailLaw(1.0))
        for t in range(200):
            c = SaddleContext(eigen_decompose(sample_matrix(spec, derive_seed(21, t))), beta)
            sr = solve_gamma(c)
            if sr.phase is phase:
                return c, sr
        raise AssertionError("no trial in the requested phase")

    def test_high_temperature_accuracy(self):
        c, sr = self._trial(0.4, Phase.F1)
        assert abs(log_z_laplace(c, sr).log_z - log_z_quadrature(c, sr).log_z) <= 0.05

    def test_low_temperature_accuracy_per_site(self):
        c, sr = self._trial(1.0, Phase.F2)
        diff = log_z_laplace(c, sr).log_z - log_z_quadrature(c, sr).log_z
        assert abs(diff) / c.N <= 0.02

    def test_tiny_n_breakdown_is_order_one(self):
        c = ctx_of([1.0, -1.0])
        diff = log_z_laplace(c, solve_gamma(c)).log_z - log_z_bessel_n2(1.0, -1.0, 0.5, 1.0).log_z
        assert 0.01 < abs(diff) < 1.0


class TestSphereMC:
    def test_zero_matrix(self):
        r = log_z_sphere_mc(SampledMatrix.from_dense(np.zeros((6, 6)), 2.0), 0.7, 1000, rng(0))
        assert r.log_z == 0.0 and r.method is Method.SPHERE_MC

    def test_single_site_exact(self):
        m = SampledMatrix.from_dense(np.array([[3.0]]), 2.0)
        r = log_z_sphere_mc(m, 0.5, 10, rng(0))
        assert r.log_z == pytest.approx(0.75, rel=1e-14)

    def test_chunking_does_not_change_result(self):
        m = sample_matrix(EnsembleSpec(8, TailLaw(1.0)), 2)
        a = log_z_sphere_mc(m, 0.5, 5000, rng(4), chunk=5000)
        b = log_z_sphere_mc(m, 0.5, 5000, rng(4), chunk=777)
        assert a.log_z == pytest.approx(b.log_z, rel=1e-12)

    def test_no_overflow_at_large_scale(self):
        m = SampledMatrix.from_dense(np.diag([1e6, 0.0, 0.0]), 1.0)
        r = log_z_sphere_mc(m, 1.0, 1000, rng(0))
        assert np.isfinite(r.log_z) and r.log_z > 1e6

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            log_z_sphere_mc(SampledMatrix.from_dense(np.eye(2), 1.0), 1.0, 0, rng(0))


class TestBessel:
    def test_examples(self):
        assert log_z_bessel_n2(1.0, -1.0, 0.5, 1.0).log_z == pytest.approx(0.235914, abs=1e-6)
        assert log_z_bessel_n2(2.5, 2.5, 0.4, 2.0).log_z == 0.4 * 5.0 / 2.0
        assert log_z_bessel_n2(2.0, 0.0, 0.5, 1.0).log_z == pytest.approx(1.235914, abs=1e-6)

    def test_against_scipy(self):
        x = 0.5 * 7.0 / 1.5
        ref = 0.5 * 3.0 / 1.5 + math.log(special.i0e(x)) + x
        assert log_z_bessel_n2(5.0, -2.0, 0.5, 1.5).log_z == pytest.approx(ref, rel=1e-12)


class TestResidualAndLimit:
    def test_high_temp_residual(self):
        assert high_temp_residual(0.0, 50) == 0.0
        assert high_temp_residual(1.0, 100) == pytest.approx(0.5 - 50 * math.log(1.01), rel=1e-12)
        assert high_temp_residual(1.0, 100) == pytest.approx(0.0024835, abs=1e-7)
        vals = [high_temp_residual(1.0, N) for N in (100, 1000, 10_000)]
        assert vals[0] > vals[1] > vals[2] > 0
        with pytest.raises(ValueError):
            high_temp_residual(-10.0, 10)

    def test_low_temp_limit(self):
        assert low_temp_limit(1.0 / (2 * 0.8), 0.8) == pytest.approx(0.0, abs=1e-15)
        assert low_temp_limit(2.0, 0.5) == pytest.approx(1 - 0.5 * math.log(2 * math.e), rel=1e-14)
        assert low_temp_limit(2.0, 0.5) == pytest.approx(0.153426, abs=1e-6)
        with pytest.raises(ValueError):
            low_temp_limit(0.9, 0.5)

    @given(st.floats(0.05, 5.0), st.floats(0.0, 50.0), st.floats(1e-6, 10.0))
    def test_low_temp_limit_increasing(self, beta, a, d):
        x0 = 1 / (2 * beta) + a
        assume(d > 1e-9 * x0)
        assert low_temp_limit(x0 + d, beta) > low_temp_limit(x0, beta)


class TestDerivativeScaling:
    """Sizes of g^(k) at the saddle: O(1) in F1, order N^(k-1) in F2."""

    @pytest.fixture(scope="class")
    @classmethod
    def values(cls):
        out = {}
        for N in (100, 400):
            spec = EnsembleSpec(N, TailLaw(1.0))
            rows = {Phase.F1: [], Phase.F2: []}
            for t in range(150):
                c = SaddleContext(eigen_decompose(sample_matrix(spec, derive_seed(9, t))), 0.5)
                sr = solve_gamma(c)
                scale = 1.0 if sr.phase is Phase.F1 else None
                rows[sr.phase].append(
                    [abs(g_value(c, sr.w, k)) / (scale or N ** (k - 1)) for k in (2, 3, 4)]
                )
            out[N] = {p: np.median(np.array(v), axis=0) for p, v in rows.items()}
        return out

    def test_high_temperature_derivatives_stay_bounded(self, values):
        assert np.all(values[400][Phase.F1] <= 1.5 * values[100][Phase.F1])

    def test_low_temperature_derivatives_scale_with_n(self, values):
        eps = 0.05
        k = np.array([2, 3, 4])
        for n in (100, 400):
            med = values[n][Phase.F2]
            assert np.all(med >= 0.1 * n ** (-k * eps)) and np.all(med <= 10 * n ** (k * eps))
