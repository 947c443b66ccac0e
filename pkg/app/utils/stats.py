"""Wilson score interval for Monte Carlo hit counts"""
from math import sqrt
from typing import Tuple

from scipy.stats import norm


def z_score(confidence: float) -> float:
    return float(norm.ppf(0.5 + confidence / 2))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Stays inside [0, 1] and keeps a nonzero width at 0 and n hits, which is where
    distribution-function lower bounds get checked.

    Args:
        successes: Number of hits
        trials: Number of samples
        confidence: Two-sided confidence level

    Returns:
        (lower, upper), always containing successes / trials
    """
    if trials <= 0:
        return (0.0, 1.0)

    z = z_score(confidence)
    p_hat = successes / trials

    denominator = 1 + z**2 / trials
    center = (p_hat + z**2 / (2 * trials)) / denominator
    margin = (z / denominator) * sqrt(p_hat * (1 - p_hat) / trials + z**2 / (4 * trials**2))

    lower = min(max(0.0, center - margin), p_hat)
    upper = max(min(1.0, center + margin), p_hat)
    return (lower, upper)


def half_width(lower: float, upper: float) -> float:
    return (upper - lower) / 2
