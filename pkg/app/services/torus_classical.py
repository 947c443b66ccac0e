"""Translation action of (ℝ/ℤ)^L on itself: the classical simultaneous-approximation case.

φ(g) = max_l ‖g_l‖ and Φ(t) = (2t)^L in closed form, so this module doubles as a
check on the general machinery.
"""
import math
from dataclasses import dataclass
from functools import partial
from typing import List, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from app.models.errors import CardinalityError, DimensionError, DomainError
from app.models.schemas import CurveRow, DistributionEstimate, SearchResult
from app.services.dirichlet_search import TIE_TOL, signed_order
from app.utils.parallel import ordered_map
from app.utils.rng import DEFAULT_CHUNK_SIZE, chunk_plan, make_rng
from app.utils.stats import wilson_interval
from app.utils.validate import validator

ZERO_TOL = 1e-12
SLICE_WORDS = 1 << 16


@dataclass(frozen=True)
class TorusPoint:
    """Point of (ℝ/ℤ)^L with coordinates reduced to [0, 1)"""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.coords, dtype=float))
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionError(f"torus point must be a non-empty vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("torus coordinates must be finite")
        reduced = np.mod(arr, 1.0)
        # np.mod can round a tiny negative up to exactly 1.0
        reduced[reduced >= 1.0] = 0.0
        reduced.setflags(write=False)
        object.__setattr__(self, "coords", reduced)

    @property
    def dim(self) -> int:
        return self.coords.size

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint(self.coords + other.coords)

    def __sub__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint(self.coords - other.coords)

    def __neg__(self) -> "TorusPoint":
        return TorusPoint(-self.coords)

    def scale(self, k: int) -> "TorusPoint":
        return TorusPoint(k * self.coords)


PointLike = Union[TorusPoint, Sequence[float], float]


def as_point(p: PointLike) -> TorusPoint:
    return p if isinstance(p, TorusPoint) else TorusPoint(p)


def dist_nearest_int(x):
    """‖x‖, distance to the nearest integer; works elementwise on arrays"""
    x = np.asarray(x, dtype=float)
    d = np.abs(x - np.round(x))
    return float(d) if d.ndim == 0 else d


def _phi_coords(coords: np.ndarray) -> np.ndarray:
    """max over the last axis of ‖·‖"""
    return np.abs(coords - np.round(coords)).max(axis=-1)


def phi_torus(g: PointLike) -> float:
    """φ(g) = max_l ‖g_l‖, in [0, ½]"""
    return float(_phi_coords(as_point(g).coords))


def torus_metric(x: PointLike, y: PointLike) -> float:
    """max_l ‖x_l − y_l‖"""
    x, y = as_point(x), as_point(y)
    if x.dim != y.dim:
        raise DimensionError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return phi_torus(x - y)


def torus_Phi(t: float, L: int) -> float:
    """Φ(t) = (2t)^L for t <= ½, else 1"""
    t = validator.threshold(t)
    L = validator.positive_int(L, "L")
    return 1.0 if t > 0.5 else (2 * t) ** L


def _chunk_hits(L: int, seed: int, t: float, chunk: Tuple[int, int]) -> int:
    index, size = chunk
    g = make_rng(seed, index).random((size, L))
    return int(np.count_nonzero(_phi_coords(g) < t))


def torus_phi_distribution_mc(
    L: int,
    t: float,
    n_samples: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> DistributionEstimate:
    """Fraction of uniform g in (ℝ/ℤ)^L with φ(g) < t"""
    L = validator.positive_int(L, "L")
    t = validator.threshold(t)
    n_samples = validator.mc_samples(n_samples)
    plan = chunk_plan(n_samples, chunk_size)
    hits = sum(ordered_map(partial(_chunk_hits, L, seed, t), plan, workers))
    low, high = wilson_interval(hits, n_samples)
    return DistributionEstimate(
        t=t, n_samples=n_samples, hits=hits, estimate=hits / n_samples,
        ci_low=low, ci_high=high, method="mc",
    )


def torus_phi_curve(
    L: int,
    steps: int,
    n_samples: int = 10**4,
    seed: int = 0,
    t_max: float = 0.5,
    workers: int = 1,
) -> List[CurveRow]:
    """Empirical Φ on t = 0 .. t_max against the exact (2t)^L"""
    L = validator.positive_int(L, "L")
    steps = validator.positive_int(steps, "steps")
    t_max = validator.threshold(t_max, upper=0.5)
    ts = np.linspace(0.0, t_max, steps) if steps > 1 else np.array([t_max])
    rows = []
    for t in ts:
        est = torus_phi_distribution_mc(L, float(t), n_samples, seed, workers)
        rows.append(CurveRow(
            t=float(t), estimate=est.estimate, ci_low=est.ci_low, ci_high=est.ci_high,
            lower_bound=torus_Phi(float(t), L),
        ))
    return rows


def _check_alphas(alphas: Sequence[PointLike], Ks: Sequence[int]) -> Tuple[np.ndarray, List[int]]:
    if len(alphas) < 1:
        raise CardinalityError("need at least one alpha")
    validator.same_length(alphas, Ks, "alphas/ks")
    points = [as_point(a) for a in alphas]
    dims = {p.dim for p in points}
    if len(dims) != 1:
        raise DimensionError(f"alphas have mixed dimensions {sorted(dims)}")
    Ks = [validator.positive_int(k, "ks") for k in Ks]
    return np.stack([p.coords for p in points]), Ks


def _tail_combinations(Ks: Sequence[int]) -> np.ndarray:
    """All exponent tuples for the non-leading coordinates, in signed order"""
    if not Ks:
        return np.zeros((1, 0), dtype=np.int64)
    orders = [np.asarray(signed_order(k), dtype=np.int64) for k in Ks]
    grids = np.meshgrid(*orders, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _first_nonzero_positive(combos: np.ndarray) -> np.ndarray:
    """Row mask: the first nonzero entry is positive (all-zero rows excluded)"""
    if combos.shape[1] == 0:
        return np.zeros(len(combos), dtype=bool)
    nonzero = combos != 0
    has = nonzero.any(axis=1)
    first = np.argmax(nonzero, axis=1)
    lead = combos[np.arange(len(combos)), first]
    return has & (lead > 0)


def torus_delta(alphas: Sequence[PointLike], Ks: Sequence[int], workers: int = 1) -> SearchResult:
    """
    min φ(j₁α₁ + ⋯ + j_Mα_M) over 0 < |j| in the box |j_m| <= K_m

    Args:
        alphas: M points of (ℝ/ℤ)^L
        Ks: M positive exponent bounds
        workers: Thread count over the leading exponent

    Returns:
        SearchResult with bound ∏(K_m + 1)^{−1/L}, i.e. δ^L ∏(K_m + 1) <= 1
    """
    coords, Ks = _check_alphas(alphas, Ks)
    L = coords.shape[1]
    validator.word_budget([2 * k + 1 for k in Ks], limit=validator.max_torus_box)

    tail = _tail_combinations(Ks[1:])
    slices = []
    for j in range(Ks[0] + 1):
        rows = tail if j > 0 else tail[_first_nonzero_positive(tail)]
        for start in range(0, len(rows), SLICE_WORDS):
            slices.append((j, rows[start:start + SLICE_WORDS]))
    slices = [s for s in slices if len(s[1])]

    def evaluate(piece: Tuple[int, np.ndarray]) -> np.ndarray:
        j, block = piece
        points = j * coords[0] + block.astype(float) @ coords[1:]
        return _phi_coords(points)

    values = ordered_map(evaluate, slices, workers)
    best = min(float(v.min()) for v in values)
    for (j, block), v in zip(slices, values):
        hits = np.flatnonzero(v <= best + TIE_TOL)
        if hits.size:
            pos = int(hits[0])
            delta = float(v[pos])
            argmin = [j, *block[pos].tolist()]
            break

    evaluations = sum(len(b) for _, b in slices)
    bound = math.prod(k + 1 for k in Ks) ** (-1.0 / L)
    degenerate = delta <= ZERO_TOL
    if degenerate:
        logger.warning(f"torus_delta: word {argmin} is zero mod 1; generated set is degenerate")
        delta = 0.0
    logger.info(f"torus_delta: L={L}, M={len(Ks)}, Ks={Ks}, delta={delta:.6g}")
    return SearchResult.build(delta, argmin, evaluations, bound, degenerate=degenerate, kind="torus")


def generated_set(alphas: Sequence[PointLike], Ks: Sequence[int]) -> List[TorusPoint]:
    """{Σ k_m α_m : 0 <= k_m <= K_m} in lexicographic order of k"""
    coords, Ks = _check_alphas(alphas, Ks)
    validator.word_budget([k + 1 for k in Ks], limit=validator.max_torus_box)
    grids = np.meshgrid(*[np.arange(k + 1) for k in Ks], indexing="ij")
    exps = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    return [TorusPoint(row) for row in exps @ coords]


def is_degenerate_set(points: Sequence[PointLike]) -> bool:
    """True iff two of the points coincide mod 1 (within 1e-12)"""
    return torus_delta_set(points).degenerate


def torus_delta_set(points: Sequence[PointLike]) -> SearchResult:
    """δ(𝒜) = min φ(p − q) over pairs p != q of an explicit point set; bound |𝒜|^{−1/L}"""
    if len(points) < 2:
        raise CardinalityError(f"need at least 2 points, got {len(points)}")
    pts = [as_point(p) for p in points]
    if len({p.dim for p in pts}) != 1:
        raise DimensionError("points have mixed dimensions")
    coords = np.stack([p.coords for p in pts])
    size, L = coords.shape
    best, argmin = math.inf, (0, 1)
    for i in range(size - 1):
        v = _phi_coords(coords[i] - coords[i + 1:])
        local = float(v.min())
        if local < best - TIE_TOL:
            best, argmin = local, (i, i + 1 + int(np.flatnonzero(v <= local + TIE_TOL)[0]))
    degenerate = best <= ZERO_TOL
    if degenerate:
        logger.warning(f"torus_delta_set: points {argmin} coincide")
        best = 0.0
    return SearchResult.build(
        best, argmin, size * (size - 1) // 2, size ** (-1.0 / L), degenerate=degenerate, kind="set",
    )
