"""Dense complex matrix arithmetic with unitarity certification.

Every other module works on top of these value types. Matrices are small (N <= 64),
dense and double precision; anything exact lives in the finite-action service.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg as sla

from app.models.errors import (
    ConvergenceFailure,
    DimensionError,
    DomainError,
    EigensolverFailure,
    NonFiniteEntryError,
    NotUnitaryError,
)

MAX_DIM = 64
UNITARITY_TOL_PER_DIM = 1e-10
HERMITIAN_TOL_PER_DIM = 1e-10
RECONSTRUCTION_TOL_PER_DIM = 1e-8
POLAR_TARGET_PER_DIM = 1e-14
POLAR_MAX_ITER = 50
POLAR_MAX_INPUT_RESIDUAL = 0.1
MAX_POWER = 10**6

ArrayLike = Union[np.ndarray, list, "ComplexMatrix", "UnitaryMatrix"]


def unitarity_tol(n: int) -> float:
    """Global unitarity tolerance ε_u for dimension n"""
    return UNITARITY_TOL_PER_DIM * n


def e(x):
    """e(x) = exp(2πix), elementwise"""
    return np.exp(2j * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ComplexMatrix:
    """Square complex matrix with finite entries"""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.complex128, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DimensionError("matrix must be square and nonempty", detail=f"shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntryError("matrix has NaN or Inf entries")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class UnitaryMatrix:
    """A certified element of U(N)"""

    matrix: ComplexMatrix
    unitarity_residual: float

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def array(self) -> np.ndarray:
        return self.matrix.entries

    def adjoint(self) -> "UnitaryMatrix":
        return UnitaryMatrix(ComplexMatrix(self.array.conj().T), self.unitarity_residual)

    def __matmul__(self, other: "UnitaryMatrix") -> "UnitaryMatrix":
        if other.dim != self.dim:
            raise DimensionError("dimension mismatch", detail=f"{self.dim} vs {other.dim}")
        return _certify(self.array @ other.array)


@dataclass(frozen=True)
class EigenvalueSet:
    """Eigen-angles x_n in (-1/2, 1/2], sorted; eigenvalues are e(x_n)"""

    angles: np.ndarray
    vectors: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        if np.any(angles <= -0.5) or np.any(angles > 0.5):
            raise DomainError("eigen-angles must lie in (-1/2, 1/2]")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    @property
    def values(self) -> np.ndarray:
        return e(self.angles)


@dataclass(frozen=True)
class HermitianEigenpair:
    value: float
    vector: np.ndarray


def _as_array(M: ArrayLike) -> np.ndarray:
    if isinstance(M, UnitaryMatrix):
        return M.array
    if isinstance(M, ComplexMatrix):
        return M.entries
    return ComplexMatrix(np.asarray(M)).entries


def unitarity_residual(M: np.ndarray) -> float:
    """‖M*M − I‖_F"""
    n = M.shape[0]
    return float(np.linalg.norm(M.conj().T @ M - np.eye(n), "fro"))


def _certify(M: np.ndarray) -> UnitaryMatrix:
    # internal products of certified unitaries; drift is handled by reunitarize
    n = M.shape[0]
    residual = unitarity_residual(M)
    if residual > unitarity_tol(n) / 2:
        return reunitarize(M)
    return UnitaryMatrix(ComplexMatrix(M), residual)


def identity(n: int) -> UnitaryMatrix:
    return UnitaryMatrix(ComplexMatrix(np.eye(n, dtype=np.complex128)), 0.0)


def diagonal_unitary(angles) -> UnitaryMatrix:
    """diag(e(x_1), ..., e(x_N))"""
    return check_unitary(np.diag(e(np.atleast_1d(angles))))


def check_unitary(M: ArrayLike, tol: Optional[float] = None) -> UnitaryMatrix:
    """Certify M as unitary: residual ‖M*M − I‖_F must not exceed tol (default ε_u)"""
    if isinstance(M, UnitaryMatrix):
        return M
    arr = _as_array(M)
    n = arr.shape[0]
    tol = unitarity_tol(n) if tol is None else tol
    residual = unitarity_residual(arr)
    if residual > tol:
        raise NotUnitaryError(residual, tol)
    return UnitaryMatrix(ComplexMatrix(arr), residual)


def hermitian_min_eigenpair(M: ArrayLike) -> HermitianEigenpair:
    """Smallest eigenvalue of the symmetrized matrix (M + M*)/2 with its unit eigenvector"""
    arr = _as_array(M)
    n = arr.shape[0]
    skew = float(np.linalg.norm(arr - arr.conj().T, "fro"))
    if skew > HERMITIAN_TOL_PER_DIM * n:
        raise DomainError("matrix is not Hermitian", detail=f"‖M − M*‖_F = {skew:.3e}")
    values, vectors = np.linalg.eigh((arr + arr.conj().T) / 2)
    return HermitianEigenpair(float(values[0]), vectors[:, 0])


def hermitian_min_eigenvalue(M: ArrayLike) -> float:
    return hermitian_min_eigenpair(M).value


def hermitian_part(A: ArrayLike) -> np.ndarray:
    arr = _as_array(A)
    return (arr + arr.conj().T) / 2


def _canonical_angles(values: np.ndarray) -> np.ndarray:
    angles = np.angle(values) / (2 * np.pi)
    # np.angle returns [-π, π]; fold -1/2 onto +1/2
    return np.where(angles <= -0.5, angles + 1.0, angles)


def unitary_eigen_angles(A: UnitaryMatrix) -> EigenvalueSet:
    """Eigen-angles of A via the complex Schur form (diagonal for normal matrices)"""
    A = check_unitary(A)
    arr = A.array
    n = A.dim
    T, Z = sla.schur(arr, output="complex")
    diag = np.diag(T)
    values = diag / np.abs(diag)
    rebuilt = Z @ np.diag(values) @ Z.conj().T
    error = float(np.linalg.norm(arr - rebuilt, "fro"))
    if error > RECONSTRUCTION_TOL_PER_DIM * n:
        raise EigensolverFailure(
            "eigendecomposition failed reconstruction check", detail=f"error {error:.3e}"
        )
    angles = _canonical_angles(values)
    order = np.argsort(angles, kind="stable")
    return EigenvalueSet(angles[order], Z[:, order])


def reunitarize(M: ArrayLike) -> UnitaryMatrix:
    """Nearest unitary (polar factor) by the Newton iteration X ← (X + X^{-*})/2"""
    arr = _as_array(M)
    n = arr.shape[0]
    residual = unitarity_residual(arr)
    if residual >= POLAR_MAX_INPUT_RESIDUAL:
        raise DomainError("matrix too far from unitary to project", detail=f"residual {residual:.3e}")
    target = POLAR_TARGET_PER_DIM * n
    X = np.array(arr)
    iterations = 0
    while residual > target:
        if iterations >= POLAR_MAX_ITER:
            raise ConvergenceFailure(
                "polar projection did not converge",
                detail=f"residual {residual:.3e} after {iterations} iterations",
            )
        X = 0.5 * (X + np.linalg.inv(X).conj().T)
        residual = unitarity_residual(X)
        iterations += 1
    if iterations:
        logger.debug(f"reunitarize: {iterations} Newton steps, residual {residual:.2e}")
    return UnitaryMatrix(ComplexMatrix(X), residual)


def matrix_power(A: UnitaryMatrix, k: int) -> UnitaryMatrix:
    """A^k by repeated squaring; negative k uses A* = A^{-1}"""
    A = check_unitary(A)
    if abs(k) > MAX_POWER:
        raise DomainError(f"|k| must be <= {MAX_POWER}", detail=f"k = {k}")
    n = A.dim
    result = np.eye(n, dtype=np.complex128)
    if k == 0:
        return identity(n)
    base = A.array if k > 0 else A.array.conj().T
    k = abs(k)
    drift_limit = unitarity_tol(n) / 2
    while k:
        if k & 1:
            result = result @ base
            if unitarity_residual(result) > drift_limit:
                result = reunitarize(result).array
        k >>= 1
        if k:
            base = base @ base
            if unitarity_residual(base) > drift_limit:
                base = reunitarize(base).array
    return UnitaryMatrix(ComplexMatrix(result), unitarity_residual(result))


def power_table(A: UnitaryMatrix, k_min: int, k_max: int) -> np.ndarray:
    """Stack of A^k for k_min <= k <= k_max, built incrementally with drift control"""
    A = check_unitary(A)
    n = A.dim
    drift_limit = unitarity_tol(n) / 2
    table = np.empty((k_max - k_min + 1, n, n), dtype=np.complex128)

    def walk(step: np.ndarray, count: int) -> list:
        out, current = [], np.eye(n, dtype=np.complex128)
        for _ in range(count):
            current = current @ step
            if unitarity_residual(current) > drift_limit:
                current = reunitarize(current).array
            out.append(current)
        return out

    positive = walk(A.array, max(k_max, 0))
    negative = walk(A.array.conj().T, max(-k_min, 0))
    for idx, k in enumerate(range(k_min, k_max + 1)):
        if k == 0:
            table[idx] = np.eye(n)
        elif k > 0:
            table[idx] = positive[k - 1]
        else:
            table[idx] = negative[-k - 1]
    return table


def dims_match(*matrices: UnitaryMatrix) -> Tuple[int, ...]:
    dims = tuple(m.dim for m in matrices)
    if len(set(dims)) > 1:
        raise DimensionError("all matrices must have the same dimension", detail=str(dims))
    if dims and dims[0] > MAX_DIM:
        raise DimensionError(f"dimension above {MAX_DIM} is not supported", detail=str(dims[0]))
    return dims
