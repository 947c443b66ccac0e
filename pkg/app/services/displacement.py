"""Displacement function φ and the induced metric ρ on U(N).

φ(A) = sup |Ax − x|₂ over unit vectors. Since (A − I)*(A − I) = 2I − (A + A*), the sup
is the largest singular value of A − I, and φ(A)² = 2 − 2λ_min((A + A*)/2). The top right
singular vector is the maximizing unit vector.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from app.models.errors import EigensolverFailure, UsageError
from app.utils.linalg import UnitaryMatrix, check_unitary, dims_match, hermitian_min_eigenvalue
from app.utils.rng import DEFAULT_CHUNK_SIZE, iter_chunk_rngs, standard_complex_normal

PHI_MAX = 2.0
WITNESS_NORM_TOL = 1e-12


@dataclass(frozen=True)
class DisplacementValue:
    """φ(A) with the unit vector attaining it"""

    value: float
    witness: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 <= self.value <= PHI_MAX:
            raise ValueError(f"displacement must lie in [0, 2], got {self.value}")
        if self.witness is not None:
            norm = float(np.linalg.norm(self.witness))
            if abs(norm - 1.0) > WITNESS_NORM_TOL:
                raise ValueError(f"witness must be a unit vector, norm {norm}")


def _phi_array(arr: np.ndarray, with_witness: bool = True) -> DisplacementValue:
    n = arr.shape[0]
    try:
        if not with_witness:
            sigma = np.linalg.svd(arr - np.eye(n), compute_uv=False)[0]
            return DisplacementValue(float(min(sigma, PHI_MAX)))
        _, s, vh = np.linalg.svd(arr - np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure("singular value decomposition failed", detail=str(exc)) from exc
    witness = vh[0].conj()
    witness = witness / np.linalg.norm(witness)
    return DisplacementValue(float(min(s[0], PHI_MAX)), witness)


def phi_unitary(A: UnitaryMatrix) -> DisplacementValue:
    """
    Exact φ(A) with the extremal vector

    Args:
        A: Unitary matrix (arrays are certified first)

    Returns:
        DisplacementValue in [0, 2]; |A·witness − witness|₂ equals the value
    """
    A = check_unitary(A)
    return _phi_array(A.array)


def phi_via_hermitian_part(A: UnitaryMatrix) -> float:
    """sqrt(2 − 2λ_min((A + A*)/2)), clamped; loses ~1e-8 absolute accuracy near A = I"""
    A = check_unitary(A)
    arr = A.array
    lam = hermitian_min_eigenvalue((arr + arr.conj().T) / 2)
    return float(np.sqrt(np.clip(2.0 - 2.0 * lam, 0.0, 4.0)))


def phi_batch(stack: np.ndarray) -> np.ndarray:
    """φ for a stack of unitaries of shape (..., N, N)"""
    stack = np.asarray(stack)
    n = stack.shape[-1]
    sigma = np.linalg.svd(stack - np.eye(n), compute_uv=False)[..., 0]
    return np.minimum(sigma, PHI_MAX)


def phi_empirical(
    A: UnitaryMatrix,
    samples: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> float:
    """Max of |Ax − x|₂ over `samples` uniform unit vectors (normalized complex Gaussians)"""
    if samples < 1:
        raise UsageError("samples must be >= 1", flag="samples")
    A = check_unitary(A)
    arr = A.array
    n = A.dim
    best = 0.0
    for rng, size in iter_chunk_rngs(seed, samples, chunk_size):
        x = standard_complex_normal(rng, (size, n))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        moved = np.linalg.norm(x @ arr.T - x, axis=1)
        best = max(best, float(moved.max()))
    logger.debug(f"phi_empirical: N={n}, samples={samples}, max={best:.12f}")
    return best


def rho(A: UnitaryMatrix, B: UnitaryMatrix) -> float:
    """ρ(A, B) = φ(AB*)"""
    A, B = check_unitary(A), check_unitary(B)
    dims_match(A, B)
    return _phi_array(A.array @ B.array.conj().T, with_witness=False).value


def phi_value(arr: np.ndarray) -> float:
    """φ of a raw (already trusted) unitary array, no witness"""
    return _phi_array(np.asarray(arr), with_witness=False).value
