"""Tests for Haar sampling and the distribution function Φ on U(N)"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from app.models.errors import DomainError, ResourceError, UsageError
from app.models.schemas import DistributionEstimate
from app.services.displacement import phi_batch
from app.services.haar_measure import (
    WeylPoint,
    bound_gap,
    haar_batch,
    haar_sample,
    in_weyl_box,
    parseval_samples,
    phi_closed_form_u1,
    phi_curve,
    phi_distribution_eigen_mc,
    phi_distribution_mc,
    phi_lower_bound,
    proof_chain_bound,
    sample_phis,
    sine_inequality_holds,
    sine_inequality_margin,
    vandermonde_det_sq,
    vandermonde_sq,
    weyl_phi_quadrature,
)
from app.utils.linalg import unitarity_residual
from app.utils.rng import make_rng

pytestmark = pytest.mark.unit


class TestSampling:
    """Haar sampling"""

    def test_samples_are_unitary(self):
        stack = haar_batch(4, 50, make_rng(1))
        for m in stack:
            assert unitarity_residual(m) < 1e-12

    def test_deterministic_per_seed(self):
        assert_allclose(haar_sample(3, 42).array, haar_sample(3, 42).array)
        assert not np.allclose(haar_sample(3, 42).array, haar_sample(3, 43).array)

    def test_negative_seed_is_a_distinct_stream(self):
        assert_allclose(haar_sample(2, -1).array, haar_sample(2, -1).array)
        assert not np.allclose(haar_sample(2, -1).array, haar_sample(2, 1).array)
        assert unitarity_residual(haar_sample(2, -5).array) < 1e-12

    def test_u1_phases_are_uniform(self):
        # Haar on U(1) is the uniform phase; KS against U(-1/2, 1/2)
        phases = np.angle(haar_batch(1, 5000, make_rng(3))[:, 0, 0]) / (2 * np.pi)
        assert stats.kstest(phases, "uniform", args=(-0.5, 1.0)).pvalue > 1e-3

    def test_trace_moment(self):
        # E|tr U|² = 1 for Haar U(N)
        traces = np.trace(haar_batch(3, 20000, make_rng(4)), axis1=1, axis2=2)
        assert np.mean(np.abs(traces) ** 2) == pytest.approx(1.0, abs=0.05)

    def test_left_translation_invariance(self, haar_matrices):
        # φ(UA₀) has the law of φ(U) for any fixed A₀
        A0 = haar_matrices[2][0].array
        shifted = phi_batch(haar_batch(2, 10000, make_rng(30)) @ A0)
        plain = phi_batch(haar_batch(2, 10000, make_rng(31)))
        assert stats.ks_2samp(shifted, plain).pvalue > 1e-3

    def test_worker_count_does_not_change_samples(self):
        one = sample_phis(2, 3000, seed=8, workers=1, chunk_size=512)
        four = sample_phis(2, 3000, seed=8, workers=4, chunk_size=512)
        assert np.array_equal(one, four)


class TestDistributionMC:
    """Monte Carlo estimates of Φ"""

    def test_phi_zero_is_zero(self):
        est = phi_distribution_mc(2, 0.0, 1000, seed=1)
        assert est.hits == 0 and est.estimate == 0.0

    def test_full_range_hits_everything_but_boundary(self):
        est = phi_distribution_mc(1, 2.0 + 1e-9, 1000, seed=1)
        assert est.estimate == 1.0

    def test_interval_contains_estimate(self):
        est = phi_distribution_mc(2, 1.0, 2000, seed=5)
        assert est.ci_low <= est.estimate <= est.ci_high

    def test_too_few_samples_is_usage_error(self):
        with pytest.raises(UsageError):
            phi_distribution_mc(2, 1.0, 10, seed=0)

    def test_negative_t_rejected(self):
        with pytest.raises(DomainError):
            phi_distribution_mc(2, -0.1, 1000, seed=0)

    @pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
    def test_u1_matches_closed_form(self, t):
        est = phi_distribution_mc(1, t, 20000, seed=21)
        assert abs(est.estimate - phi_closed_form_u1(t)) <= 4 * math.sqrt(0.25 / 20000)

    @pytest.mark.parametrize("n,t", [(1, 0.7), (2, 1.2), (3, 1.6)])
    def test_eigen_route_agrees(self, n, t):
        matrix = phi_distribution_mc(n, t, 2000, seed=13, chunk_size=700)
        eigen = phi_distribution_eigen_mc(n, t, 2000, seed=13, chunk_size=700)
        assert abs(matrix.hits - eigen.hits) <= 1

    def test_estimate_schema_invariants(self):
        with pytest.raises(ValueError):
            DistributionEstimate(t=1.0, n_samples=10, hits=3, estimate=0.5, ci_low=0.1, ci_high=0.6)


class TestBounds:
    """Lower bound and its proof chain"""

    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("t", [0.2, 0.6, 1.0, 1.4, 2.0])
    def test_quadrature_above_lower_bound(self, n, t):
        assert weyl_phi_quadrature(n, t) >= phi_lower_bound(n, t) - 1e-9

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("t", [0.3, 1.0, 1.9])
    def test_chain_ordering(self, n, t):
        assert phi_lower_bound(n, t) <= proof_chain_bound(n, t) + 1e-15
        if n <= 2:
            assert proof_chain_bound(n, t) <= weyl_phi_quadrature(n, t) + 1e-9

    def test_lower_bound_domain(self):
        with pytest.raises(DomainError):
            phi_lower_bound(2, 0.0)
        with pytest.raises(DomainError):
            phi_lower_bound(2, 2.5)

    def test_bound_gap_is_estimate_minus_bound(self):
        gap = bound_gap(2, 1.0, 2000, seed=3)
        assert gap["gap"] == pytest.approx(gap["estimate"] - gap["lower_bound"])


class TestQuadrature:
    """Weyl-formula quadrature"""

    @pytest.mark.parametrize("t", [0.5, 1.0, 1.5])
    def test_u1_closed_form(self, t):
        assert weyl_phi_quadrature(1, t, 64) == pytest.approx(2 * math.asin(t / 2) / math.pi, abs=1e-10)

    def test_phi_of_one_on_u1_is_one_third(self):
        assert weyl_phi_quadrature(1, 1.0) == pytest.approx(1 / 3, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_full_range_integrates_to_one(self, n):
        assert weyl_phi_quadrature(n, 2.0, 48) == pytest.approx(1.0, abs=1e-8)

    def test_dimension_limit(self):
        with pytest.raises(DomainError):
            weyl_phi_quadrature(4, 1.0)

    def test_grid_limit(self):
        with pytest.raises(ResourceError):
            weyl_phi_quadrature(3, 1.0, grid_points=1000)

    def test_u2_against_monte_carlo(self):
        est = phi_distribution_mc(2, 1.3, 20000, seed=77)
        quad = weyl_phi_quadrature(2, 1.3)
        assert est.ci_low - 0.01 <= quad <= est.ci_high + 0.01


class TestVandermonde:
    """Product and determinant forms of |E|²"""

    def test_forms_agree(self, rng):
        for _ in range(50):
            x = rng.uniform(-0.49, 0.49, size=3)
            assert vandermonde_det_sq(x) == pytest.approx(vandermonde_sq(x), abs=1e-10)

    def test_single_angle(self):
        assert vandermonde_sq(WeylPoint([0.2])) == 1.0

    def test_repeated_angle_vanishes(self):
        assert vandermonde_sq([0.1, 0.1]) == pytest.approx(0.0, abs=1e-28)

    def test_weyl_point_range(self):
        with pytest.raises(DomainError):
            WeylPoint([0.6])

    @pytest.mark.parametrize("n", [2, 3])
    def test_parseval_mean_is_one(self, n):
        values = parseval_samples(n, 40000, seed=n)
        sigma = values.std(ddof=1) / math.sqrt(values.size)
        assert abs(values.mean() - 1.0) <= 4 * sigma

    def test_weyl_box_matches_angle_condition(self):
        angles = np.array([[0.1, -0.05], [0.3, 0.0]])
        t = 2 * math.sin(math.pi * 0.2)
        assert in_weyl_box(angles, t).tolist() == [True, False]


class TestSineInequality:
    """(2w)²|e(x) − e(y)|² <= |e(2wx) − e(2wy)|² on the cube"""

    def test_vectorized_sweep(self, rng):
        w, x, y = rng.uniform(-0.5, 0.5, size=(3, 200000))
        assert np.all(sine_inequality_margin(w, x, y) >= -1e-12)

    @settings(max_examples=200, deadline=None)
    @given(
        w=st.floats(-0.5, 0.5),
        x=st.floats(-0.5, 0.5),
        y=st.floats(-0.5, 0.5),
    )
    def test_holds_everywhere(self, w, x, y):
        assert sine_inequality_holds(w, x, y)

    def test_outside_cube_rejected(self):
        with pytest.raises(DomainError):
            sine_inequality_margin(0.7, 0.0, 0.1)


class TestCurve:
    """Φ curves"""

    def test_mc_rows_are_monotone(self):
        rows = phi_curve(2, 0.0, 2.0, 11, n_samples=2000, seed=4)
        estimates = [r.estimate for r in rows]
        assert estimates == sorted(estimates)
        assert rows[0].estimate == 0.0 and rows[0].lower_bound == 0.0

    def test_quadrature_rows_have_degenerate_interval(self):
        rows = phi_curve(1, 0.5, 1.5, 3, method="quadrature")
        for row in rows:
            assert row.ci_low == row.estimate == row.ci_high
            assert row.estimate >= row.lower_bound - 1e-12

    def test_reversed_range_rejected(self):
        with pytest.raises(DomainError):
            phi_curve(2, 1.5, 0.5, 3)
