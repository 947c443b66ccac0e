"""δ-type minimizations on U(N) and randomized verification of the Dirichlet bounds.

Enumeration order is canonical and fixes the argmin at ties:
  - set pairs (i, j), i < j, lexicographically;
  - exponent words by the first exponent ascending from 0, every later exponent in the
    order 0, 1, −1, 2, −2, ...; only one word of each ±pair is evaluated (the first
    nonzero exponent is positive), since φ(W⁻¹) = φ(W).
The argmin is the first word in that order whose φ is within TIE_TOL of the minimum.
"""
import math
from typing import Callable, List, Sequence, Tuple

import numpy as np
from loguru import logger

from app.models.errors import CardinalityError, DomainError
from app.models.schemas import (
    BOUND_SLACK,
    ChainRecord,
    ChainReport,
    SearchResult,
    TrialRecord,
    VerificationReport,
)
from app.services.displacement import phi_batch, phi_value
from app.services.haar_measure import haar_samples, phi_distribution_mc, weyl_phi_quadrature
from app.utils.linalg import UnitaryMatrix, check_unitary, dims_match, matrix_power, power_table
from app.utils.parallel import ordered_map
from app.utils.validate import validator

TIE_TOL = 1e-12
DISTINCT_TOL = 1e-8
SLICE_WORDS = 4096


def dirichlet_bound(n: int, *counts: int) -> float:
    """2π ∏ c^{−1/N²}"""
    return 2 * math.pi * math.prod(c ** (-1.0 / (n * n)) for c in counts)


def signed_order(k_max: int) -> List[int]:
    """0, 1, −1, 2, −2, ..., k_max, −k_max"""
    order = [0]
    for k in range(1, k_max + 1):
        order.extend((k, -k))
    return order


def _first_minimum(values: List[np.ndarray]) -> Tuple[float, int, int]:
    """(min, slice index, position) of the first entry within TIE_TOL of the minimum"""
    nonempty = [v for v in values if v.size]
    best = min(float(v.min()) for v in nonempty)
    for s, v in enumerate(values):
        if not v.size:
            continue
        hits = np.flatnonzero(v <= best + TIE_TOL)
        if hits.size:
            pos = int(hits[0])
            return float(v[pos]), s, pos
    raise RuntimeError("unreachable: minimum not found")


def _run_slices(evaluate: Callable, slices: Sequence, workers: int) -> List[np.ndarray]:
    return ordered_map(evaluate, slices, workers)


# δ(𝒜)

def delta_set(sets: List[UnitaryMatrix], workers: int = 1) -> SearchResult:
    """
    δ(𝒜) = min φ(ab*) over unordered pairs of distinct elements

    Args:
        sets: At least two unitaries of equal dimension
        workers: Thread count for the pair enumeration

    Returns:
        SearchResult with bound 2π|𝒜|^{−1/N²}; duplicates give delta 0 and the degenerate flag
    """
    if len(sets) < 2:
        raise CardinalityError(f"need at least 2 elements, got {len(sets)}")
    sets = [check_unitary(a) for a in sets]
    n = dims_match(*sets)[0]
    stack = np.stack([a.array for a in sets])
    size = len(sets)

    def evaluate(i: int) -> np.ndarray:
        return phi_batch(stack[i] @ stack[i + 1:].conj().transpose(0, 2, 1))

    values = _run_slices(evaluate, range(size - 1), workers)
    delta, i, pos = _first_minimum(values)
    argmin = (i, i + 1 + pos)
    degenerate = delta <= DISTINCT_TOL
    if degenerate:
        logger.warning(f"delta_set: elements {argmin} coincide (phi={delta:.2e}); set is degenerate")
        delta = 0.0
    return SearchResult.build(
        delta, argmin, size * (size - 1) // 2, dirichlet_bound(n, size),
        degenerate=degenerate, kind="set",
    )


# δ_N(a)

def delta_powers(a: UnitaryMatrix, n_max: int) -> SearchResult:
    """δ_N(a) = min φ(aⁿ), 1 <= n <= N; bound 2π(N + 1)^{−1/N²}"""
    n_max = validator.positive_int(n_max, "n-max")
    a = check_unitary(a)
    phis = phi_batch(power_table(a, 1, n_max))
    delta, _, pos = _first_minimum([phis])
    degenerate = delta <= DISTINCT_TOL
    if degenerate:
        logger.warning(f"delta_powers: a^{pos + 1} is the identity")
    return SearchResult.build(
        delta, [pos + 1], n_max, dirichlet_bound(a.dim, n_max + 1),
        degenerate=degenerate, kind="powers",
    )


# δ_{J,K}(A, B) and δ_{J,K,L}(A, B, C)

def _blocks(items: List[int], size: int) -> List[List[int]]:
    return [items[i:i + size] for i in range(0, len(items), size)] or [[]]


def delta_jk(A: UnitaryMatrix, B: UnitaryMatrix, J: int, K: int, workers: int = 1) -> SearchResult:
    """δ_{J,K}(A, B) = min φ(A^j B^k), |j| <= J, |k| <= K, (j, k) != (0, 0)"""
    J = validator.positive_int(J, "J")
    K = validator.positive_int(K, "K")
    validator.word_budget([J, K])
    A, B = check_unitary(A), check_unitary(B)
    n = dims_match(A, B)[0]

    a_pow = power_table(A, 0, J)
    b_pow = power_table(B, -K, K)
    ks = signed_order(K)

    slices = []
    for j in range(J + 1):
        row = [k for k in ks if j > 0 or k > 0]
        slices.extend((j, block) for block in _blocks(row, SLICE_WORDS))

    def evaluate(piece: Tuple[int, List[int]]) -> np.ndarray:
        j, block = piece
        idx = np.asarray(block, dtype=int) + K
        return phi_batch(a_pow[j] @ b_pow[idx])

    values = _run_slices(evaluate, slices, workers)
    delta, s, pos = _first_minimum(values)
    j, block = slices[s]
    evaluations = sum(len(b) for _, b in slices)
    logger.info(f"delta_jk: N={n}, J={J}, K={K}, delta={delta:.6g} at {(j, block[pos])}")
    return SearchResult.build(
        delta, (j, block[pos]), evaluations, dirichlet_bound(n, J + 1, K + 1),
        degenerate=delta <= DISTINCT_TOL, kind="jk",
    )


def delta_jkl(
    A: UnitaryMatrix, B: UnitaryMatrix, C: UnitaryMatrix, J: int, K: int, L: int, workers: int = 1
) -> SearchResult:
    """
    δ_{J,K,L}(A, B, C) over the exponent box minus the origin

    No bound is known for three letters; the reported bound is the product form
    2π∏(·+1)^{−1/N²} and the result carries conjectural=True.
    """
    J = validator.positive_int(J, "J")
    K = validator.positive_int(K, "K")
    L = validator.positive_int(L, "L")
    validator.word_budget([J, K, L])
    A, B, C = (check_unitary(m) for m in (A, B, C))
    n = dims_match(A, B, C)[0]

    a_pow = power_table(A, 0, J)
    b_pow = power_table(B, -K, K)
    c_pow = power_table(C, -L, L)
    ks, ls = signed_order(K), signed_order(L)

    slices = []
    for j in range(J + 1):
        for k in ks:
            if j == 0 and k < 0:
                continue
            row = [l for l in ls if j > 0 or k > 0 or l > 0]
            slices.extend((j, k, block) for block in _blocks(row, SLICE_WORDS))

    def evaluate(piece: Tuple[int, int, List[int]]) -> np.ndarray:
        j, k, block = piece
        idx = np.asarray(block, dtype=int) + L
        return phi_batch((a_pow[j] @ b_pow[k + K]) @ c_pow[idx])

    values = _run_slices(evaluate, slices, workers)
    delta, s, pos = _first_minimum(values)
    j, k, block = slices[s]
    evaluations = sum(len(b) for _, _, b in slices)
    logger.info(f"delta_jkl: N={n}, box=({J},{K},{L}), delta={delta:.6g} (conjectural bound)")
    return SearchResult.build(
        delta, (j, k, block[pos]), evaluations, dirichlet_bound(n, J + 1, K + 1, L + 1),
        degenerate=delta <= DISTINCT_TOL, conjectural=True, kind="jkl",
    )


def word_collapse_gap(A: UnitaryMatrix, B: UnitaryMatrix, j1: int, k1: int, j2: int, k2: int) -> float:
    """|φ(A^{j1}B^{k1}(A^{j2}B^{k2})*) − φ(A^{j1−j2}B^{k1−k2})|"""
    left = matrix_power(A, j1).array @ matrix_power(B, k1).array
    right = matrix_power(A, j2).array @ matrix_power(B, k2).array
    collapsed = matrix_power(A, j1 - j2).array @ matrix_power(B, k1 - k2).array
    return abs(phi_value(left @ right.conj().T) - phi_value(collapsed))


# Verification

def _record(trial: int, result: SearchResult) -> TrialRecord:
    ratio = result.delta / result.bound if result.bound > 0 else math.inf
    return TrialRecord(
        trial=trial, delta=result.delta, bound=result.bound, ratio=ratio,
        satisfied=result.satisfied, argmin=result.argmin,
    )


def _report(theorem: str, n: int, trials: int, records: List[TrialRecord], **parameters) -> VerificationReport:
    violations = [r for r in records if not r.satisfied]
    max_ratio = max((r.ratio for r in records), default=0.0)
    if violations:
        logger.error(f"theorem {theorem}: {len(violations)} violations in {trials} trials (N={n})")
    else:
        logger.info(f"theorem {theorem}: {trials} trials, no violations, max ratio {max_ratio:.4f}")
    return VerificationReport(
        theorem=theorem, n=n, parameters=parameters, trials=trials,
        violations=violations, max_ratio=max_ratio,
    )


def verify_theorem1(n: int, cardinality: int, trials: int, seed: int, workers: int = 1) -> VerificationReport:
    """δ(𝒜) <= 2π|𝒜|^{−1/N²} on Haar-random sets; trial i uses stream (seed, i)"""
    n = validator.dimension(n)
    cardinality = validator.positive_int(cardinality, "cardinality")
    if cardinality < 2:
        raise CardinalityError("cardinality must be >= 2")
    trials = validator.positive_int(trials, "trials")

    def run(trial: int) -> TrialRecord:
        return _record(trial, delta_set(haar_samples(n, cardinality, seed, trial)))

    records = ordered_map(run, range(trials), workers)
    return _report("1", n, trials, records, cardinality=cardinality, seed=seed)


def verify_theorem2(n: int, J: int, K: int, trials: int, seed: int, workers: int = 1) -> VerificationReport:
    """δ_{J,K}(A, B) <= 2π(J+1)^{−1/N²}(K+1)^{−1/N²} on Haar-random pairs"""
    n = validator.dimension(n)
    trials = validator.positive_int(trials, "trials")

    def run(trial: int) -> TrialRecord:
        A, B = haar_samples(n, 2, seed, trial)
        return _record(trial, delta_jk(A, B, J, K))

    records = ordered_map(run, range(trials), workers)
    return _report("2", n, trials, records, J=J, K=K, seed=seed)


def verify_corollary(n: int, n_max: int, trials: int, seed: int, workers: int = 1) -> VerificationReport:
    """δ_N(a) <= 2π(N + 1)^{−1/N²} on Haar-random a"""
    n = validator.dimension(n)
    trials = validator.positive_int(trials, "trials")

    def run(trial: int) -> TrialRecord:
        (a,) = haar_samples(n, 1, seed, trial)
        return _record(trial, delta_powers(a, n_max))

    records = ordered_map(run, range(trials), workers)
    return _report("corollary", n, trials, records, n_max=n_max, seed=seed)


def verify_theorem3_unitary(
    n: int,
    cardinality: int,
    trials: int,
    seed: int,
    method: str = "quadrature",
    grid_points: int = 64,
    mc_samples: int = 10**4,
) -> ChainReport:
    """(δ/2π)^{N²} <= Φ(δ/2) <= 1/|𝒜| on Haar-random sets"""
    n = validator.dimension(n)
    if method not in ("quadrature", "mc"):
        raise DomainError(f"unknown method '{method}'")
    records = []
    for trial in range(validator.positive_int(trials, "trials")):
        result = delta_set(haar_samples(n, cardinality, seed, trial))
        half = result.delta / 2
        lower_chain = (result.delta / (2 * math.pi)) ** (n * n)
        inverse = 1.0 / cardinality
        if half <= 0:
            phi_half, phi_low, phi_high = 0.0, 0.0, 0.0
        elif method == "quadrature":
            phi_half = weyl_phi_quadrature(n, half, grid_points)
            phi_low = phi_high = phi_half
        else:
            est = phi_distribution_mc(n, half, mc_samples, seed + trial + 1)
            phi_half, phi_low, phi_high = est.estimate, est.ci_low, est.ci_high
        # Φ(δ/2) may sit anywhere in [ci_low, ci_high]; each side takes the lenient end
        satisfied = lower_chain <= phi_high + BOUND_SLACK and phi_low <= inverse + BOUND_SLACK
        records.append(ChainRecord(
            trial=trial, delta=result.delta, lower_chain=lower_chain,
            phi_half_delta=phi_half, inverse_cardinality=inverse, satisfied=satisfied,
        ))
    violations = [r for r in records if not r.satisfied]
    if violations:
        logger.error(f"pigeonhole chain: {len(violations)} violations (N={n}, |A|={cardinality})")
    return ChainReport(
        n=n, cardinality=cardinality, method=method, trials=len(records),
        records=records, violations=violations,
    )


def powers_set(A: UnitaryMatrix, B: UnitaryMatrix, J: int, K: int) -> List[UnitaryMatrix]:
    """{A^j B^k : 0 <= j <= J, 0 <= k <= K}, the set behind the word collapse"""
    a_pow = power_table(A, 0, J)
    b_pow = power_table(B, 0, K)
    return [check_unitary(a_pow[j] @ b_pow[k]) for j in range(J + 1) for k in range(K + 1)]
