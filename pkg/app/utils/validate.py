"""Precondition checks shared by the services"""
import math
from typing import Iterable, Sequence

from app.models.errors import DomainError, ResourceError, UsageError


class ParameterValidator:
    """Validates operation parameters against the desk-scale limits"""

    def __init__(self):
        self.max_dim = 64
        self.max_words = 10**7
        self.max_torus_box = 10**8
        self.max_grid_cells = 10**8
        self.max_quadrature_dim = 3
        self.min_mc_samples = 100

    def positive_int(self, value: int, name: str) -> int:
        """
        Require an integer >= 1

        Args:
            value: Parameter value
            name: Flag or parameter name, quoted in the error

        Returns:
            The value as int
        """
        if isinstance(value, bool) or int(value) != value or value < 1:
            raise UsageError(f"{name} must be a positive integer, got {value}", flag=name)
        return int(value)

    def dimension(self, n: int) -> int:
        n = self.positive_int(n, "n")
        if n > self.max_dim:
            raise UsageError(f"n must be <= {self.max_dim}, got {n}", flag="n")
        return n

    def threshold(self, t: float, upper: float = math.inf, lower_open: bool = False) -> float:
        """Check a distribution threshold t >= 0 (or t > 0) and t <= upper"""
        if not math.isfinite(t):
            raise DomainError(f"t must be finite, got {t}")
        if (lower_open and t <= 0) or t < 0 or t > upper:
            bracket = "(0" if lower_open else "[0"
            raise DomainError(f"t must lie in {bracket}, {upper}], got {t}")
        return float(t)

    def mc_samples(self, n_samples: int) -> int:
        n_samples = self.positive_int(n_samples, "samples")
        if n_samples < self.min_mc_samples:
            raise UsageError(f"samples must be >= {self.min_mc_samples}, got {n_samples}", flag="samples")
        return n_samples

    def word_budget(self, extents: Sequence[int], limit: int = None) -> int:
        """Product of the exponent bounds must stay within the word budget"""
        limit = self.max_words if limit is None else limit
        total = math.prod(extents)
        if total > limit:
            raise ResourceError(
                f"enumeration too large: {' x '.join(map(str, extents))} = {total} > {limit}"
            )
        return total

    def same_length(self, first: Iterable, second: Iterable, names: str) -> None:
        if len(list(first)) != len(list(second)):
            raise UsageError(f"{names} must have the same length", flag=names)


# Global validator instance
validator = ParameterValidator()
