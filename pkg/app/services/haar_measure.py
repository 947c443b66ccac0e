"""Haar measure on U(N) and the distribution function Φ(t) = μ{A : φ(A) < t}.

Three estimators of Φ live here: Monte Carlo over Haar samples (matrix route and
eigen-angle route, which must agree sample by sample), and tensor-product
Gauss–Legendre quadrature of the Weyl integration formula

    Φ(t) = (1/N!) ∫_{|y_n| < w} |E(y)|² dy,   t = 2 sin(πw),

where E is the Vandermonde determinant of e(y_1), ..., e(y_N).
"""
import math
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.special import roots_legendre

from app.models.errors import DomainError, ResourceError
from app.models.schemas import CurveRow, DistributionEstimate
from app.services.displacement import phi_batch
from app.utils.linalg import UnitaryMatrix, check_unitary, e
from app.utils.parallel import ordered_map
from app.utils.rng import DEFAULT_CHUNK_SIZE, chunk_plan, make_rng, standard_complex_normal
from app.utils.stats import wilson_interval
from app.utils.validate import validator

MAX_PARSEVAL_DIM = 6
SINE_SLACK = 1e-12


@dataclass(frozen=True)
class WeylPoint:
    """Eigen-angle point x in (-1/2, 1/2]^N"""

    x: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1 or np.any(x <= -0.5) or np.any(x > 0.5):
            raise DomainError("Weyl point coordinates must lie in (-1/2, 1/2]")
        object.__setattr__(self, "x", x)


# Sampling

def haar_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Stack of `count` Haar-random N×N unitaries

    Gaussian matrix → QR → multiply column j of Q by r_jj/|r_jj|. Without the phase
    correction the distribution of Q depends on the QR convention and is not Haar.
    """
    z = standard_complex_normal(rng, (count, n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def haar_sample(n: int, seed: int) -> UnitaryMatrix:
    """Haar-random element of U(N), deterministic per seed"""
    n = validator.dimension(n)
    return check_unitary(haar_batch(n, 1, make_rng(seed))[0])


def haar_samples(n: int, count: int, seed: int, *spawn_key: int) -> List[UnitaryMatrix]:
    """`count` Haar samples from the stream (seed, *spawn_key)"""
    stack = haar_batch(n, count, make_rng(seed, *spawn_key))
    return [check_unitary(m) for m in stack]


def _chunk_phis(n: int, seed: int, chunk: Tuple[int, int]) -> np.ndarray:
    index, size = chunk
    return phi_batch(haar_batch(n, size, make_rng(seed, index)))


def sample_phis(
    n: int,
    n_samples: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> np.ndarray:
    """φ of n_samples Haar matrices; identical for every worker count"""
    plan = chunk_plan(n_samples, chunk_size)
    parts = ordered_map(partial(_chunk_phis, n, seed), plan, workers)
    return np.concatenate(parts)


def _estimate(t: float, n_samples: int, hits: int, method: str) -> DistributionEstimate:
    low, high = wilson_interval(hits, n_samples)
    return DistributionEstimate(
        t=t, n_samples=n_samples, hits=hits, estimate=hits / n_samples,
        ci_low=low, ci_high=high, method=method,
    )


def phi_distribution_mc(
    n: int,
    t: float,
    n_samples: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> DistributionEstimate:
    """Monte Carlo Φ(t): fraction of Haar samples with φ < t (strict)"""
    n = validator.dimension(n)
    t = validator.threshold(t)
    n_samples = validator.mc_samples(n_samples)
    phis = sample_phis(n, n_samples, seed, workers, chunk_size)
    hits = int(np.count_nonzero(phis < t))
    logger.info(f"phi_distribution_mc: N={n}, t={t}, hits={hits}/{n_samples}")
    return _estimate(t, n_samples, hits, "mc")


# Eigen-angle route

def in_weyl_box(angles: np.ndarray, t: float) -> np.ndarray:
    """All eigen-angles satisfy 1 − t²/2 < cos 2πx_n (last axis)"""
    return np.all(np.cos(2 * np.pi * np.asarray(angles)) > 1 - t * t / 2, axis=-1)


def _chunk_eigen_hits(n: int, seed: int, t: float, chunk: Tuple[int, int]) -> int:
    index, size = chunk
    stack = haar_batch(n, size, make_rng(seed, index))
    angles = np.angle(np.linalg.eigvals(stack)) / (2 * np.pi)
    return int(np.count_nonzero(in_weyl_box(angles, t)))


def phi_distribution_eigen_mc(
    n: int,
    t: float,
    n_samples: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> DistributionEstimate:
    """Φ(t) via eigen-angles on the same sample stream as phi_distribution_mc"""
    n = validator.dimension(n)
    t = validator.threshold(t)
    n_samples = validator.mc_samples(n_samples)
    plan = chunk_plan(n_samples, chunk_size)
    hits = sum(ordered_map(partial(_chunk_eigen_hits, n, seed, t), plan, workers))
    return _estimate(t, n_samples, hits, "mc-eigen")


# Closed forms and bounds

def w_of_t(t: float) -> float:
    """The w in [0, 1/2] with t = 2 sin(πw)"""
    t = validator.threshold(t, upper=2.0)
    return math.asin(t / 2) / math.pi


def phi_lower_bound(n: int, t: float) -> float:
    """(t/π)^{N²} <= Φ(t) for 0 < t <= 2"""
    t = validator.threshold(t, upper=2.0, lower_open=True)
    return (t / math.pi) ** (n * n)


def proof_chain_bound(n: int, t: float) -> float:
    """(2w)^{N²}, which sits between (t/π)^{N²} and Φ(t)"""
    return (2 * w_of_t(t)) ** (n * n)


def phi_closed_form_u1(t: float) -> float:
    """Φ for U(1): 2·arcsin(t/2)/π, and 1 beyond t = 2"""
    t = validator.threshold(t)
    if t > 2:
        return 1.0
    return 2 * math.asin(t / 2) / math.pi


# Vandermonde density

def vandermonde_sq_batch(x: np.ndarray) -> np.ndarray:
    """∏_{m<n} |e(x_n) − e(x_m)|² along the last axis"""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n == 1:
        return np.ones(x.shape[:-1])
    vals = e(x)
    m_idx, n_idx = np.triu_indices(n, k=1)
    diffs = vals[..., n_idx] - vals[..., m_idx]
    return np.prod(np.abs(diffs) ** 2, axis=-1)


def vandermonde_sq(x: WeylPoint) -> float:
    """|E(x)|² in product form"""
    if not isinstance(x, WeylPoint):
        x = WeylPoint(x)
    return float(vandermonde_sq_batch(x.x))


def vandermonde_det_sq(x: WeylPoint) -> float:
    """|det(e((n−1)x_m))|², the determinant form of |E(x)|²"""
    if not isinstance(x, WeylPoint):
        x = WeylPoint(x)
    n = x.x.shape[0]
    matrix = e(np.outer(np.arange(n), x.x))
    return float(abs(np.linalg.det(matrix)) ** 2)


def weyl_phi_quadrature(n: int, t: float, grid_points: int = 64) -> float:
    """
    Φ(t) by Gauss–Legendre quadrature over the cube (−w, w)^N

    Args:
        n: Matrix dimension, at most 3 (cost is grid_points^N)
        t: Threshold in (0, 2]
        grid_points: Nodes per axis

    Returns:
        (1/N!) ∫_{|y_n| < w} |E(y)|² dy
    """
    if n < 1 or n > validator.max_quadrature_dim:
        raise DomainError(f"quadrature supports 1 <= N <= {validator.max_quadrature_dim}, got {n}")
    t = validator.threshold(t, upper=2.0, lower_open=True)
    grid_points = validator.positive_int(grid_points, "grid")
    if grid_points**n > validator.max_grid_cells:
        raise ResourceError(f"grid {grid_points}^{n} exceeds {validator.max_grid_cells} cells")

    w = w_of_t(t)
    nodes, weights = roots_legendre(grid_points)
    nodes, weights = w * nodes, w * weights

    if n == 1:
        return float(weights.sum())

    # outer loop over the first axis keeps memory at grid^(N-1)
    rest = np.stack(np.meshgrid(*([nodes] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    rest_w = np.prod(np.stack(np.meshgrid(*([weights] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1), axis=1)
    total = 0.0
    for y0, w0 in zip(nodes, weights):
        pts = np.column_stack([np.full(rest.shape[0], y0), rest])
        total += w0 * float(np.dot(rest_w, vandermonde_sq_batch(pts)))
    return total / math.factorial(n)


def parseval_samples(n: int, n_samples: int, seed: int, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
    """|E(x)|²/N! at uniform torus points"""
    if n < 1 or n > MAX_PARSEVAL_DIM:
        raise DomainError(f"parseval check supports 1 <= N <= {MAX_PARSEVAL_DIM}, got {n}")
    parts = []
    for index, size in chunk_plan(n_samples, chunk_size):
        x = make_rng(seed, index).uniform(-0.5, 0.5, size=(size, n))
        parts.append(vandermonde_sq_batch(x))
    return np.concatenate(parts) / math.factorial(n)


def parseval_check(n: int, n_samples: int, seed: int) -> float:
    """MC mean of |E|²/N! over the torus; converges to 1"""
    return float(parseval_samples(n, n_samples, seed).mean())


# Sine inequality

def sine_inequality_margin(w, x, y) -> np.ndarray:
    """|e(2wx) − e(2wy)|² − (2w)²|e(x) − e(y)|², elementwise"""
    w, x, y = (np.asarray(v, dtype=float) for v in (w, x, y))
    for name, v in (("w", w), ("x", x), ("y", y)):
        if np.any(np.abs(v) > 0.5):
            raise DomainError(f"|{name}| must be <= 1/2")
    lhs = (2 * w) ** 2 * np.abs(e(x) - e(y)) ** 2
    rhs = np.abs(e(2 * w * x) - e(2 * w * y)) ** 2
    return rhs - lhs


def sine_inequality_holds(w: float, x: float, y: float) -> bool:
    """(2w)²|e(x) − e(y)|² <= |e(2wx) − e(2wy)|² up to 1e-12"""
    return bool(sine_inequality_margin(w, x, y) >= -SINE_SLACK)


# Curves

def phi_curve(
    n: int,
    t_min: float,
    t_max: float,
    steps: int,
    n_samples: int = 10**4,
    seed: int = 0,
    method: str = "mc",
    grid_points: int = 64,
    workers: int = 1,
) -> List[CurveRow]:
    """Φ estimates on an evenly spaced t grid; MC rows share one sample set"""
    n = validator.dimension(n)
    steps = validator.positive_int(steps, "steps")
    t_min = validator.threshold(t_min, upper=2.0)
    t_max = validator.threshold(t_max, upper=2.0)
    if t_min > t_max:
        raise DomainError("t-min must not exceed t-max")
    ts = np.linspace(t_min, t_max, steps) if steps > 1 else np.array([t_max])

    phis: Optional[np.ndarray] = None
    if method == "mc":
        n_samples = validator.mc_samples(n_samples)
        phis = sample_phis(n, n_samples, seed, workers)
    elif method != "quadrature":
        raise DomainError(f"unknown method '{method}'")

    rows = []
    for t in ts:
        t = float(t)
        bound = phi_lower_bound(n, t) if t > 0 else 0.0
        if phis is not None:
            est = _estimate(t, n_samples, int(np.count_nonzero(phis < t)), "mc")
            rows.append(CurveRow(t=t, estimate=est.estimate, ci_low=est.ci_low, ci_high=est.ci_high, lower_bound=bound))
        else:
            value = weyl_phi_quadrature(n, t, grid_points) if t > 0 else 0.0
            rows.append(CurveRow(t=t, estimate=value, ci_low=value, ci_high=value, lower_bound=bound))
    return rows


def bound_gap(n: int, t: float, n_samples: int, seed: int, workers: int = 1) -> dict:
    """Measured Φ̂(t) − (t/π)^{N²}; reported only, no claim about its size"""
    est = phi_distribution_mc(n, t, n_samples, seed, workers)
    bound = phi_lower_bound(n, t)
    return {
        "n": n,
        "t": t,
        "estimate": est.estimate,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "lower_bound": bound,
        "gap": est.estimate - bound,
    }
