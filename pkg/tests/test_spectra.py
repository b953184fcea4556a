import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levy_ssk.ensemble import EnsembleSpec, SampledMatrix, max_abs_entry, sample_matrix
from levy_ssk.experiments import derive_seed
from levy_ssk.heavy_tail import TailLaw
from levy_ssk.spectra import (
    Spectrum,
    eigen_decompose,
    identity_residuals,
    log_statistic_T,
    power_sums,
    summarize,
)


def spec(values, b=1.0):
    return Spectrum.from_values(values, b)


class TestSpectrum:
    def test_rejects_unsorted_and_empty(self):
        with pytest.raises(ValueError):
            Spectrum(np.array([1.0, 2.0]), 1.0)
        with pytest.raises(ValueError):
            Spectrum(np.array([]), 1.0)
        with pytest.raises(ValueError):
            Spectrum(np.array([1.0]), 0.0)

    def test_mu_is_rescaled(self):
        s = spec([4.0, -2.0], 2.0)
        assert np.array_equal(s.mu, [2.0, -1.0])


class TestDecompose:
    def test_diagonal(self):
        m = SampledMatrix.from_dense(np.diag([3.0, 1.0, 2.0]), 1.0)
        assert np.allclose(eigen_decompose(m).eigs, [3.0, 2.0, 1.0])

    def test_two_by_two(self):
        m = SampledMatrix.from_dense(np.array([[0.0, 1.0], [1.0, 0.0]]), 1.0)
        assert np.allclose(eigen_decompose(m).eigs, [1.0, -1.0], atol=1e-15)

    def test_non_finite_rejected(self):
        M = np.array([[np.inf, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            eigen_decompose(SampledMatrix.from_dense(M, 1.0))

    @given(st.integers(1, 60), st.integers(0, 10**6), st.sampled_from([0.5, 1.0, 1.8]))
    def test_identities(self, N, seed, alpha):
        m = sample_matrix(EnsembleSpec(N, TailLaw(alpha)), seed)
        s = eigen_decompose(m)
        assert np.all(np.diff(s.eigs) <= 0)
        tr, fr = identity_residuals(m, s)
        assert tr <= 1e-8 and fr <= 1e-8


class TestSummary:
    def test_fields(self):
        s = spec([5.0, 1.0, 0.5, -6.0], 10.0)
        sm = summarize(s, eps=1.0)
        assert sm.lambda1 == 5.0 and sm.lambda2 == 1.0 and sm.lambdaN == -6.0
        assert sm.Gamma == 6.0
        assert sm.trace_over_bN == pytest.approx(0.05)
        assert sm.sumsq_over_bN2 == pytest.approx((25 + 1 + 0.25 + 36) / 100)
        assert sm.gap_over_bN == pytest.approx(0.4)
        # threshold 4^(-1) = 0.25 in units of b_N
        assert sm.big_count == 2

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
    def test_ordering_invariants(self, vals):
        sm = summarize(spec(vals, 3.0))
        assert sm.lambda1 >= sm.lambda2
        assert sm.Gamma >= abs(sm.lambda1)


class TestLogStatistic:
    def test_examples(self):
        assert log_statistic_T(spec([0.0, 0.0, 0.0]), 1.0) == 0.0
        assert log_statistic_T(spec([1.0]), 2.0) == pytest.approx(math.log(2.0), rel=1e-15)
        assert log_statistic_T(spec([1.0, -1.0]), 2.0) == pytest.approx(math.log(4 / 3), rel=1e-15)

    def test_needs_gamma_above_top(self):
        with pytest.raises(ValueError):
            log_statistic_T(spec([1.0, 0.0]), 1.0)
        with pytest.raises(ValueError):
            log_statistic_T(spec([-3.0, -4.0]), -1.0)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40), st.floats(1e-6, 10.0), st.floats(0.01, 1e4))
    def test_matches_direct_sum(self, vals, gap, b):
        s = spec(vals, b)
        g = max(s.eigs[0], 0.0) + gap
        direct = -sum(math.log((g - v) / g) for v in s.eigs)
        assert log_statistic_T(s, g) == pytest.approx(direct, rel=1e-10, abs=1e-12)


class TestPowerSums:
    def test_examples(self):
        S = power_sums(spec([1.0, -1.0]), 2.0, 2)
        assert S[0] == 0.0 and S[1] == pytest.approx(0.5)
        assert np.array_equal(power_sums(spec([0.0] * 4), 1.0, 5), np.zeros(5))

    def test_matches_brute_force(self):
        m = sample_matrix(EnsembleSpec(40, TailLaw(1.0)), 4)
        s = eigen_decompose(m)
        g = 1.3 * s.eigs[0]
        S = power_sums(s, g, 6)
        for k in range(1, 7):
            assert S[k - 1] == pytest.approx(sum((v / g) ** k for v in s.eigs), rel=1e-12, abs=1e-12)


class TestExtremeEigenvalues:
    """Top and bottom eigenvalues track the largest entry at alpha=1/2, N=300."""

    def test_extremes_track_largest_entry(self):
        spec_ = EnsembleSpec(300, TailLaw(0.5))
        top = bottom = 0
        trials = 500
        for t in range(trials):
            m = sample_matrix(spec_, derive_seed(31, t))
            s = eigen_decompose(m)
            mx = max_abs_entry(m)
            top += abs(s.eigs[0] - mx) / mx <= 0.2
            bottom += abs(abs(s.eigs[-1]) / mx - 1.0) <= 0.2
        assert top >= 0.9 * trials
        assert bottom >= 0.9 * trials
