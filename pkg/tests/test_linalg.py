"""Tests for the complex linear algebra layer"""
from unittest.mock import patch

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.errors import (
    ConvergenceFailure,
    DimensionError,
    DomainError,
    NonFiniteEntryError,
    NotUnitaryError,
)
from app.utils.linalg import (
    ComplexMatrix,
    check_unitary,
    diagonal_unitary,
    dims_match,
    hermitian_min_eigenpair,
    hermitian_min_eigenvalue,
    identity,
    matrix_power,
    power_table,
    reunitarize,
    unitarity_residual,
    unitary_eigen_angles,
)

pytestmark = pytest.mark.unit


class TestComplexMatrix:
    """Construction-time validation"""

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            ComplexMatrix(np.zeros((2, 3)))

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteEntryError):
            ComplexMatrix(np.array([[np.nan]]))

    def test_entries_are_read_only(self):
        m = ComplexMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5


class TestCheckUnitary:
    """Unitarity certification"""

    def test_identity_has_zero_residual(self):
        assert check_unitary(np.eye(3)).unitarity_residual == 0.0

    def test_scaled_identity_is_rejected(self):
        with pytest.raises(NotUnitaryError) as info:
            check_unitary(2 * np.eye(2))
        assert info.value.residual > 1.0
        assert info.value.exit_code == 3

    def test_rotation_accepted(self):
        c, s = np.cos(0.3), np.sin(0.3)
        U = check_unitary(np.array([[c, -s], [s, c]]))
        assert U.dim == 2

    def test_dims_match_rejects_mixed(self):
        with pytest.raises(DimensionError):
            dims_match(identity(2), identity(3))


class TestHermitianEigen:
    """Smallest eigenpair of Hermitian matrices"""

    def test_pauli_x(self):
        pair = hermitian_min_eigenpair(np.array([[0, 1], [1, 0]]))
        assert_allclose(pair.value, -1.0, atol=1e-14)
        assert_allclose(np.linalg.norm(pair.vector), 1.0, atol=1e-14)

    def test_matches_characteristic_polynomial(self, rng):
        x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        m = (x + x.conj().T) / 2
        roots = np.roots(np.poly(m)).real
        assert hermitian_min_eigenpair(m).value == pytest.approx(roots.min(), abs=1e-9)

    def test_negation_flips_to_largest(self, rng):
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = (x + x.conj().T) / 2
        assert hermitian_min_eigenvalue(-m) == pytest.approx(-np.linalg.eigvalsh(m)[-1], abs=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(DomainError):
            hermitian_min_eigenpair(np.array([[0, 1], [0, 0]]))


class TestEigenAngles:
    """Eigen-angles of unitaries"""

    def test_diagonal(self):
        angles = unitary_eigen_angles(diagonal_unitary([0.25, -0.1, 0.4])).angles
        assert_allclose(angles, [-0.1, 0.25, 0.4], atol=1e-12)

    def test_product_is_determinant(self, haar_matrices):
        for U in haar_matrices[2][:20]:
            eig = unitary_eigen_angles(U)
            assert np.prod(np.exp(2j * np.pi * eig.angles)) == pytest.approx(np.linalg.det(U.array), abs=1e-8)

    @pytest.mark.parametrize("k", [-100, -37, -1, 0, 1, 2, 17, 100])
    def test_powers_multiply_angles(self, haar_matrices, k):
        U = haar_matrices[3][2]
        expected = np.mod(k * unitary_eigen_angles(U).angles, 1.0)
        got = np.mod(unitary_eigen_angles(matrix_power(U, k)).angles, 1.0)
        gap = np.abs(expected[:, None] - got[None, :])
        circular = np.minimum(gap, 1.0 - gap)
        assert circular.min(axis=1).max() <= 1e-8
        assert circular.min(axis=0).max() <= 1e-8

    def test_minus_one_maps_to_half(self):
        angles = unitary_eigen_angles(np.diag([-1.0 + 0j])).angles
        assert angles[0] == pytest.approx(0.5)

    def test_random_unitary_roundtrip(self, haar_matrices):
        U = haar_matrices[3][0]
        eig = unitary_eigen_angles(U)
        rebuilt = eig.vectors @ np.diag(eig.values) @ eig.vectors.conj().T
        assert_allclose(rebuilt, U.array, atol=1e-10)


class TestReunitarize:
    """Polar projection"""

    def test_projects_perturbed_unitary(self, haar_matrices, rng):
        U = haar_matrices[2][0].array
        noise = rng.uniform(-1, 1, size=(2, 2)) + 1j * rng.uniform(-1, 1, size=(2, 2))
        projected = reunitarize(U + 1e-6 * noise)
        assert unitarity_residual(projected.array) <= 2e-14
        assert np.linalg.norm(projected.array - U, "fro") <= 3e-6

    def test_scalar_multiple_of_identity(self):
        assert_allclose(reunitarize(1.0001 * np.eye(2)).array, np.eye(2), atol=1e-14)

    def test_unitary_is_fixed(self, haar_matrices):
        U = haar_matrices[3][4].array
        assert_allclose(reunitarize(U).array, U, atol=1e-14)

    def test_idempotent(self, haar_matrices):
        once = reunitarize(haar_matrices[2][1].array + 1e-5 * np.eye(2))
        twice = reunitarize(once.array)
        assert np.linalg.norm(twice.array - once.array, "fro") <= 1e-13

    def test_too_far_rejected(self):
        with pytest.raises(DomainError):
            reunitarize(np.eye(2) * 1.5)

    def test_iteration_cap(self):
        with patch("app.utils.linalg.POLAR_MAX_ITER", 2):
            with pytest.raises(ConvergenceFailure) as info:
                reunitarize(1.03 * np.eye(2))
        assert info.value.exit_code == 3
        assert "after 2 iterations" in info.value.detail


class TestPowers:
    """Repeated squaring and power tables"""

    def test_power_of_diagonal(self):
        A = diagonal_unitary([0.1, 0.3])
        assert_allclose(np.diag(matrix_power(A, 7).array), np.exp(2j * np.pi * np.array([0.7, 2.1])), atol=1e-12)

    def test_negative_power_is_inverse(self, haar_matrices):
        A = haar_matrices[3][1]
        product = matrix_power(A, 5).array @ matrix_power(A, -5).array
        assert_allclose(product, np.eye(3), atol=1e-12)

    def test_zero_power_is_identity(self, haar_matrices):
        assert_allclose(matrix_power(haar_matrices[2][0], 0).array, np.eye(2))

    def test_power_bound(self):
        with pytest.raises(DomainError):
            matrix_power(identity(1), 10**6 + 1)

    def test_table_matches_matrix_power(self, haar_matrices):
        A = haar_matrices[2][3]
        table = power_table(A, -3, 4)
        for idx, k in enumerate(range(-3, 5)):
            assert_allclose(table[idx], matrix_power(A, k).array, atol=1e-12)
