"""Tests for the δ-type searches and the randomized bound verifications"""
import math
from unittest.mock import patch

import numpy as np
import pytest

from app.models.errors import CardinalityError, DimensionError, ResourceError, UsageError
from app.models.schemas import DistributionEstimate, SearchResult
from app.services.dirichlet_search import (
    delta_jk,
    delta_jkl,
    delta_powers,
    delta_set,
    dirichlet_bound,
    powers_set,
    signed_order,
    verify_corollary,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3_unitary,
    word_collapse_gap,
)
from app.services.displacement import phi_value
from app.services.haar_measure import haar_samples
from app.utils.linalg import diagonal_unitary, identity, matrix_power

pytestmark = pytest.mark.unit

GOLDEN = (math.sqrt(5) - 1) / 2


def word(A, B, j, k):
    return matrix_power(A, j).array @ matrix_power(B, k).array


class TestDeltaSet:
    """δ(𝒜) over finite sets"""

    def test_plus_minus_identity(self):
        result = delta_set([identity(1), diagonal_unitary([0.5])])
        assert result.delta == pytest.approx(2.0)
        assert result.bound == pytest.approx(math.pi)
        assert result.satisfied and result.evaluations == 1

    def test_eighth_roots_of_unity(self):
        result = delta_set([diagonal_unitary([k / 8]) for k in range(8)])
        assert result.delta == pytest.approx(2 * math.sin(math.pi / 8), abs=1e-12)
        assert result.bound == pytest.approx(2 * math.pi / 8)
        assert result.satisfied
        assert result.evaluations == 28
        assert result.argmin == [0, 1]

    def test_duplicate_is_degenerate(self, haar_matrices):
        A = haar_matrices[2][0]
        result = delta_set([A, A])
        assert result.delta == 0.0 and result.degenerate

    def test_argmin_reevaluates_to_delta(self, haar_matrices):
        sets = haar_matrices[2][:12]
        result = delta_set(sets)
        i, j = result.argmin
        assert phi_value(sets[i].array @ sets[j].array.conj().T) == pytest.approx(result.delta, abs=1e-9)

    def test_workers_do_not_change_result(self, haar_matrices):
        sets = haar_matrices[3][:20]
        assert delta_set(sets, workers=1) == delta_set(sets, workers=4)

    def test_too_small(self):
        with pytest.raises(CardinalityError):
            delta_set([identity(2)])

    def test_mixed_dimensions(self):
        with pytest.raises(DimensionError):
            delta_set([identity(2), identity(3)])


class TestDeltaPowers:
    """δ_N(a) over powers"""

    def test_identity(self):
        result = delta_powers(identity(2), 5)
        assert result.delta == pytest.approx(0.0, abs=1e-15)
        assert result.argmin == [1] and result.degenerate

    def test_seventh_root(self):
        result = delta_powers(diagonal_unitary([1 / 7]), 6)
        assert result.delta == pytest.approx(2 * math.sin(math.pi / 7), abs=1e-12)
        assert result.argmin == [1]

    def test_golden_rotation(self):
        result = delta_powers(diagonal_unitary([GOLDEN]), 8)
        distance = abs(8 * GOLDEN - round(8 * GOLDEN))
        assert result.argmin == [8]
        assert result.delta == pytest.approx(2 * math.sin(math.pi * distance), abs=1e-12)
        assert result.bound == pytest.approx(2 * math.pi / 9)
        assert result.satisfied

    def test_zero_n_max_is_usage_error(self):
        with pytest.raises(UsageError):
            delta_powers(identity(1), 0)


class TestDeltaJK:
    """δ_{J,K}(A, B) over two-letter words"""

    def test_signed_order(self):
        assert signed_order(2) == [0, 1, -1, 2, -2]

    def test_golden_pair(self, golden_pair):
        A, B = golden_pair
        result = delta_jk(A, B, 1, 1)
        assert result.delta == pytest.approx(1.0, abs=1e-12)
        assert result.argmin == [1, 1]
        assert result.evaluations == 4
        assert result.bound == pytest.approx(math.pi / 2)

    def test_identities(self):
        result = delta_jk(identity(2), identity(2), 2, 3)
        assert result.delta == 0.0 and result.degenerate

    def test_evaluation_count(self, haar_pairs):
        A, B = haar_pairs[2][0]
        assert delta_jk(A, B, 3, 4).evaluations == 4 + 3 * 9

    def test_haar_pair_satisfies_bound(self, haar_pairs):
        A, B = haar_pairs[2][1]
        result = delta_jk(A, B, 6, 6)
        assert result.bound == pytest.approx(2 * math.pi * 49 ** -0.25)
        assert result.satisfied

    def test_argmin_reevaluates(self, haar_pairs):
        A, B = haar_pairs[3][2]
        result = delta_jk(A, B, 4, 5)
        j, k = result.argmin
        assert phi_value(word(A, B, j, k)) == pytest.approx(result.delta, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_set_delta(self, haar_pairs, n):
        for A, B in haar_pairs[n][:5]:
            expected = delta_set(powers_set(A, B, 3, 2))
            if expected.degenerate:
                continue
            assert delta_jk(A, B, 3, 2).delta == pytest.approx(expected.delta, abs=1e-9)

    def test_word_collapse(self, haar_pairs, rng):
        for A, B in haar_pairs[3][:5]:
            j1, k1, j2, k2 = rng.integers(-6, 7, size=4)
            assert word_collapse_gap(A, B, int(j1), int(k1), int(j2), int(k2)) <= 1e-9

    def test_deterministic(self, haar_pairs):
        A, B = haar_pairs[2][3]
        assert delta_jk(A, B, 5, 5) == delta_jk(A, B, 5, 5, workers=3)

    def test_zero_exponent_is_usage_error(self, golden_pair):
        with pytest.raises(UsageError):
            delta_jk(*golden_pair, 0, 3)

    def test_budget(self, golden_pair):
        with pytest.raises(ResourceError):
            delta_jk(*golden_pair, 10**4, 10**4)


class TestDeltaJKL:
    """Three-letter words, conjectural bound"""

    def test_identities(self):
        result = delta_jkl(identity(1), identity(1), identity(1), 1, 1, 1)
        assert result.delta == 0.0 and result.conjectural

    def test_trivial_third_letter(self, haar_pairs):
        A, B = haar_pairs[2][4]
        three = delta_jkl(A, B, identity(2), 3, 3, 2)
        assert three.degenerate and three.argmin == [0, 0, 1]

    def test_never_above_two_letter_delta(self, haar_pairs):
        A, B = haar_pairs[2][6]
        C = haar_samples(2, 1, 4, 0)[0]
        assert delta_jkl(A, B, C, 3, 3, 2).delta <= delta_jk(A, B, 3, 3).delta + 1e-12

    def test_evaluation_count(self, haar_pairs):
        A, B = haar_pairs[2][5]
        C = haar_samples(2, 1, 3, 0)[0]
        result = delta_jkl(A, B, C, 3, 3, 3)
        assert result.evaluations == (7**3 - 1) // 2
        assert result.conjectural


class TestVerification:
    """Randomized bound checks"""

    def test_theorem1(self):
        report = verify_theorem1(2, 16, 30, seed=7)
        assert report.passed and report.trials == 30
        assert 0 < report.max_ratio <= 1 + 1e-9

    def test_theorem1_cardinality_two(self):
        assert verify_theorem1(1, 2, 50, seed=1).passed

    def test_theorem1_rejects_singletons(self):
        with pytest.raises(CardinalityError):
            verify_theorem1(2, 1, 5, seed=0)

    def test_theorem2(self):
        report = verify_theorem2(1, 1, 1, 50, seed=3)
        assert report.passed
        assert report.parameters["J"] == 1

    def test_corollary(self):
        assert verify_corollary(2, 20, 20, seed=5).passed

    def test_seed_reproducibility(self):
        first = verify_theorem2(2, 3, 3, 5, seed=11)
        second = verify_theorem2(2, 3, 3, 5, seed=11, workers=2)
        assert first == second

    def test_unitary_chain_quadrature(self):
        report = verify_theorem3_unitary(2, 8, 5, seed=2)
        assert report.passed
        for record in report.records:
            assert record.lower_chain <= record.phi_half_delta + 1e-9
            assert record.phi_half_delta <= record.inverse_cardinality + 1e-9

    @pytest.mark.parametrize("ci_low,passed", [(0.1, True), (0.15, False)])
    def test_unitary_chain_mc_uses_interval(self, ci_low, passed):
        # cardinality 8: the upper side is 1/8, checked against ci_low
        est = DistributionEstimate(t=0.5, n_samples=100, hits=20, estimate=0.2, ci_low=ci_low, ci_high=0.3)
        with patch("app.services.dirichlet_search.phi_distribution_mc", return_value=est):
            report = verify_theorem3_unitary(2, 8, 2, seed=3, method="mc", mc_samples=100)
        assert report.passed is passed
        assert all(r.phi_half_delta == 0.2 for r in report.records)


class TestSearchResultSchema:
    """Invariants enforced by the result model"""

    def test_satisfied_flag_must_match(self):
        with pytest.raises(ValueError):
            SearchResult(delta=1.0, argmin=[0, 1], evaluations=1, bound=0.5, satisfied=True)

    def test_bound_helper(self):
        assert dirichlet_bound(1, 2, 2) == pytest.approx(math.pi / 2)
        assert dirichlet_bound(2, 16) == pytest.approx(math.pi)

    def test_powers_set_cardinality(self, golden_pair):
        assert len(powers_set(*golden_pair, 2, 3)) == 12
        assert np.allclose(powers_set(*golden_pair, 2, 3)[0].array, np.eye(1))
