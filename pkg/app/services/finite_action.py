"""Exact verification of the pigeonhole bounds for finite groups acting on finite metric spaces.

Haar measure is counting measure, so Φ(t) = |{g : φ(g) < t}| / |G| is rational. Distances
are rationals; each space stores them as integers over one common denominator so every
comparison below stays exact while running on integer numpy arrays.
"""
import math
from fractions import Fraction
from itertools import combinations
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from app.models.errors import CardinalityError, DomainError, InvalidTableError, NotFaithfulError, NotIsometricError
from app.models.schemas import (
    ActionSweep,
    CatalogSweepReport,
    FiniteCorollaryReport,
    FiniteTheorem3Report,
    FiniteTheorem4Report,
    InequalityCheck,
    MetricReport,
)
from app.services.dirichlet_search import signed_order
from app.utils.parallel import ordered_map
from app.utils.rng import make_rng
from app.utils.validate import validator

EXHAUSTIVE_ASSOCIATIVITY_MAX = 64
ASSOCIATIVITY_SAMPLES = 10**5
SWEEP_EXHAUSTIVE_MAX = 10**5

RationalLike = Union[int, str, Fraction]


def to_fraction(value: RationalLike) -> Fraction:
    """int, Fraction or "p/q" string"""
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidTableError(f"not a rational number: {value!r}") from exc


def _int_table(table, name: str) -> np.ndarray:
    arr = np.asarray(table)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidTableError(f"'{name}' must be a non-empty 2-d table")
    if not np.issubdtype(arr.dtype, np.integer):
        raise InvalidTableError(f"'{name}' entries must be integers")
    return arr.astype(np.int64)


def _is_permutation_rows(arr: np.ndarray) -> bool:
    return bool(np.all(np.sort(arr, axis=1) == np.arange(arr.shape[1])))


class FiniteGroup:
    """Group given by its multiplication table on element indices 0..n−1"""

    def __init__(self, mul, name: str = "group"):
        mul = _int_table(mul, "mul")
        n = mul.shape[0]
        if mul.shape != (n, n):
            raise InvalidTableError(f"'mul' must be square, got {mul.shape}")
        if mul.min() < 0 or mul.max() >= n:
            raise InvalidTableError("'mul' entries must be element indices")
        if not (_is_permutation_rows(mul) and _is_permutation_rows(mul.T)):
            raise InvalidTableError("'mul' is not a Latin square")

        rows = np.flatnonzero(np.all(mul == np.arange(n), axis=1))
        if rows.size != 1 or not np.array_equal(mul[:, rows[0]], np.arange(n)):
            raise InvalidTableError("'mul' has no two-sided identity")
        identity = int(rows[0])

        inv = np.argmax(mul == identity, axis=1)
        if not np.all(mul[inv, np.arange(n)] == identity):
            raise InvalidTableError("left and right inverses differ")

        self.mul = mul
        self.inv = inv
        self.identity = identity
        self.order = n
        self.name = name
        self._check_associative()
        self.mul.setflags(write=False)
        self.inv.setflags(write=False)

    def _check_associative(self):
        mul, n = self.mul, self.order
        if n <= EXHAUSTIVE_ASSOCIATIVITY_MAX:
            left = mul[mul]
            right = mul[np.arange(n)[:, None, None], mul[None, :, :]]
            bad = np.argwhere(left != right)
        else:
            a, b, c = make_rng(0).integers(0, n, size=(3, ASSOCIATIVITY_SAMPLES))
            mask = mul[mul[a, b], c] != mul[a, mul[b, c]]
            bad = np.stack([a[mask], b[mask], c[mask]], axis=1)
        if len(bad):
            raise InvalidTableError("'mul' is not associative", detail=f"first failing triple {bad[0].tolist()}")

    def power(self, g: int, k: int) -> int:
        """g^k for any integer k"""
        base = g if k >= 0 else int(self.inv[g])
        result = self.identity
        for _ in range(abs(k)):
            result = int(self.mul[result, base])
        return result

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"FiniteGroup({self.name}, order={self.order})"


class FiniteMetricSpace:
    """Points 0..size−1 with a rational distance table"""

    def __init__(self, dist: Sequence[Sequence[RationalLike]], name: str = "space"):
        rows = [[to_fraction(v) for v in row] for row in dist]
        size = len(rows)
        if size == 0 or any(len(r) != size for r in rows):
            raise InvalidTableError("'dist' must be a non-empty square table")
        self.scale = math.lcm(*(v.denominator for r in rows for v in r))
        units = np.array([[int(v * self.scale) for v in r] for r in rows], dtype=np.int64)

        if np.any(units < 0):
            raise InvalidTableError("distances must be nonnegative")
        if not np.array_equal(units, units.T):
            raise InvalidTableError("'dist' is not symmetric")
        off = ~np.eye(size, dtype=bool)
        if np.any(np.diag(units) != 0) or np.any(units[off] == 0):
            raise InvalidTableError("dist(x, y) = 0 must hold exactly when x = y")
        direct = units[:, None, :]
        if np.any(direct > units[:, :, None] + units[None, :, :]):
            raise InvalidTableError("'dist' violates the triangle inequality")

        self.units = units
        self.units.setflags(write=False)
        self.size = size
        self.name = name
        self.nonarchimedean = bool(np.all(direct <= np.maximum(units[:, :, None], units[None, :, :])))

    def dist(self, x: int, y: int) -> Fraction:
        return Fraction(int(self.units[x, y]), self.scale)

    def table(self) -> List[List[str]]:
        return [[str(self.dist(x, y)) for y in range(self.size)] for x in range(self.size)]

    def __repr__(self):
        return f"FiniteMetricSpace({self.name}, size={self.size}, nonarchimedean={self.nonarchimedean})"


class FiniteAction:
    """Faithful action of a FiniteGroup on a FiniteMetricSpace by a point table act[g, x]"""

    def __init__(self, group: FiniteGroup, space: FiniteMetricSpace, act, name: Optional[str] = None):
        act = _int_table(act, "act")
        if act.shape != (group.order, space.size):
            raise InvalidTableError(f"'act' must have shape {(group.order, space.size)}, got {act.shape}")
        if not _is_permutation_rows(act):
            raise InvalidTableError("every element must act as a permutation of the points")
        if not np.array_equal(act[group.identity], np.arange(space.size)):
            raise InvalidTableError("identity does not act trivially")
        composed = act[np.arange(group.order)[:, None, None], act[None, :, :]]
        if not np.array_equal(act[group.mul], composed):
            raise InvalidTableError("'act' is not compatible with 'mul'")

        kernel = [g for g in np.flatnonzero(np.all(act == np.arange(space.size), axis=1)) if g != group.identity]
        if kernel:
            raise NotFaithfulError(int(g) for g in kernel)

        self.group = group
        self.space = space
        self.act = act
        self.act.setflags(write=False)
        self.name = name or f"{group.name} on {space.name}"

        moved = space.units[act, np.arange(space.size)[None, :]]
        self.phi_units = moved.max(axis=1)
        self.phi_units.setflags(write=False)
        self.sorted_phi = np.sort(self.phi_units)
        self.sorted_twice_phi = 2 * self.sorted_phi
        images = space.units[act[:, :, None], act[:, None, :]]
        self.isometric = bool(np.all(images == space.units[None, :, :]))

    @classmethod
    def from_permutations(
        cls, elements: Sequence[Sequence[int]], space: FiniteMetricSpace, name: str = "group"
    ) -> "FiniteAction":
        """Action of the group formed by the given point permutations, (gh)(x) = g(h(x))"""
        perms = [tuple(int(v) for v in p) for p in elements]
        index = {p: i for i, p in enumerate(perms)}
        if len(index) != len(perms):
            raise InvalidTableError("duplicate permutations")
        mul = np.empty((len(perms), len(perms)), dtype=np.int64)
        for i, g in enumerate(perms):
            for j, h in enumerate(perms):
                gh = tuple(g[x] for x in h)
                if gh not in index:
                    raise InvalidTableError(f"elements are not closed under composition: {i}·{j}")
                mul[i, j] = index[gh]
        group = FiniteGroup(mul, name=name)
        return cls(group, space, np.array(perms, dtype=np.int64), name=f"{name} on {space.name}")

    @property
    def order(self) -> int:
        return self.group.order

    @property
    def nonarchimedean(self) -> bool:
        return self.space.nonarchimedean

    def element_index(self, permutation: Sequence[int]) -> int:
        """Index of the element acting as the given point permutation"""
        target = np.asarray(permutation, dtype=np.int64)
        hits = np.flatnonzero(np.all(self.act == target, axis=1))
        if hits.size != 1:
            raise DomainError(f"no element acts as {list(permutation)}")
        return int(hits[0])

    def quotient(self, a: int, b: int) -> int:
        """a b⁻¹"""
        return int(self.group.mul[a, self.group.inv[b]])

    def fraction(self, units: int) -> Fraction:
        return Fraction(int(units), self.space.scale)

    def count_below_units(self, t_units: Fraction) -> int:
        """|{g : phi_units[g] < t_units}|"""
        return int(np.searchsorted(self.sorted_phi, math.ceil(t_units), side="left"))

    def __repr__(self):
        return f"FiniteAction({self.name}, order={self.order}, isometric={self.isometric})"


def _check_element(action: FiniteAction, g: int) -> int:
    if isinstance(g, bool) or int(g) != g or not 0 <= g < action.order:
        raise DomainError(f"element index {g} out of range 0..{action.order - 1}")
    return int(g)


def phi_exact(action: FiniteAction, g: int) -> Fraction:
    """φ(g) = max_x dist(gx, x)"""
    return action.fraction(action.phi_units[_check_element(action, g)])


def Phi_exact(action: FiniteAction, t: RationalLike) -> Fraction:
    """|{g : φ(g) < t}| / |G|, strict"""
    t = to_fraction(t)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return Fraction(action.count_below_units(t * action.space.scale), action.order)


def rho_exact(action: FiniteAction, g: int, h: int) -> Fraction:
    """ρ(g, h) = φ(gh⁻¹)"""
    return phi_exact(action, action.quotient(_check_element(action, g), _check_element(action, h)))


def _check_subset(action: FiniteAction, subset: Sequence[int]) -> List[int]:
    subset = [_check_element(action, g) for g in subset]
    if len(subset) < 2:
        raise CardinalityError(f"need at least 2 elements, got {len(subset)}")
    if len(set(subset)) != len(subset):
        raise CardinalityError("subset elements must be distinct")
    return subset


def delta_exact(action: FiniteAction, subset: Sequence[int]) -> Fraction:
    """δ(𝒜) = min φ(ab⁻¹) over distinct pairs"""
    subset = _check_subset(action, subset)
    best = min(int(action.phi_units[action.quotient(a, b)]) for a, b in combinations(subset, 2))
    return action.fraction(best)


def _bound_checks(
    action: FiniteAction, delta: Fraction, bound: Fraction
) -> Tuple[InequalityCheck, Optional[InequalityCheck]]:
    half = InequalityCheck.compare(Phi_exact(action, delta / 2), bound)
    full = InequalityCheck.compare(Phi_exact(action, delta), bound) if action.nonarchimedean else None
    return half, full


def verify_theorem3_exact(action: FiniteAction, subset: Sequence[int]) -> FiniteTheorem3Report:
    """Φ(δ/2) <= 1/|𝒜|, and Φ(δ) <= 1/|𝒜| on nonarchimedean spaces"""
    subset = _check_subset(action, subset)
    delta = delta_exact(action, subset)
    half, full = _bound_checks(action, delta, Fraction(1, len(subset)))
    return FiniteTheorem3Report(
        subset=subset, cardinality=len(subset), delta=delta,
        half_delta_check=half, full_delta_check=full, nonarchimedean=action.nonarchimedean,
    )


def delta_mn_exact(action: FiniteAction, a: int, b: int, m_max: int, n_max: int) -> Tuple[Fraction, List[int]]:
    """min φ(a^m b^n) over the half box, first minimum in canonical order"""
    group = action.group
    best, argmin = None, None
    for m in range(m_max + 1):
        am = group.power(a, m)
        for n in signed_order(n_max):
            if m == 0 and n <= 0:
                continue
            units = int(action.phi_units[group.mul[am, group.power(b, n)]])
            if best is None or units < best:
                best, argmin = units, [m, n]
    return action.fraction(best), argmin


def verify_theorem4_exact(action: FiniteAction, a: int, b: int, m_max: int, n_max: int) -> FiniteTheorem4Report:
    """
    δ_{M,N}(a, b) with Φ(δ/2) <= (M+1)⁻¹(N+1)⁻¹, and Φ(δ) on nonarchimedean spaces

    Requires an action by isometries. When the set {a^m b^n : 0 <= m <= M, 0 <= n <= N}
    has (M+1)(N+1) distinct elements its δ must equal δ_{M,N}; matches_set_delta records
    that comparison (None when the set collapses).
    """
    if not action.isometric:
        raise NotIsometricError(f"{action.name} does not act by isometries")
    a, b = _check_element(action, a), _check_element(action, b)
    m_max = validator.positive_int(m_max, "m-max")
    n_max = validator.positive_int(n_max, "n-max")

    delta, argmin = delta_mn_exact(action, a, b, m_max, n_max)
    degenerate = delta == 0
    group = action.group
    words = [
        int(group.mul[group.power(a, m), group.power(b, n)])
        for m in range(m_max + 1)
        for n in range(n_max + 1)
    ]
    matches = None
    if len(set(words)) == len(words):
        matches = delta_exact(action, words) == delta
        if not matches:
            logger.error(f"{action.name}: set δ differs from δ_(M,N) for a={a}, b={b}")
    half, full = _bound_checks(action, delta, Fraction(1, (m_max + 1) * (n_max + 1)))
    return FiniteTheorem4Report(
        a=a, b=b, m_max=m_max, n_max=n_max, delta=delta, argmin=argmin, degenerate=degenerate,
        matches_set_delta=matches, half_delta_check=half, full_delta_check=full,
    )


def delta_powers_exact(action: FiniteAction, a: int, n_max: int) -> Tuple[Fraction, int]:
    """min φ(aⁿ), 1 <= n <= N, and the first n attaining it"""
    a = _check_element(action, a)
    n_max = validator.positive_int(n_max, "n-max")
    best, argmin, power = None, 1, action.group.identity
    for n in range(1, n_max + 1):
        power = int(action.group.mul[power, a])
        units = int(action.phi_units[power])
        if best is None or units < best:
            best, argmin = units, n
    return action.fraction(best), argmin


def verify_corollary_exact(action: FiniteAction, a: int, n_max: int) -> FiniteCorollaryReport:
    """Φ(δ_N/2) <= (N+1)⁻¹, and Φ(δ_N) <= (N+1)⁻¹ on nonarchimedean spaces"""
    delta, argmin = delta_powers_exact(action, a, n_max)
    half, full = _bound_checks(action, delta, Fraction(1, n_max + 1))
    return FiniteCorollaryReport(
        a=a, n_max=n_max, delta=delta, argmin=argmin, half_delta_check=half, full_delta_check=full,
    )


def metric_report(action: FiniteAction) -> MetricReport:
    """Exact check of the φ identities, and of ρ being a metric on G"""
    group, phi = action.group, action.phi_units
    mul, inv, e = group.mul, group.inv, group.identity
    others = np.arange(action.order) != e

    products = phi[mul]
    symmetric = bool(np.array_equal(phi[inv], phi))
    positive = bool(phi[e] == 0 and np.all(phi[others] > 0))
    subadditive = bool(np.all(products <= phi[:, None] + phi[None, :]))
    ultrametric = None
    if action.nonarchimedean:
        ultrametric = bool(np.all(products <= np.maximum(phi[:, None], phi[None, :])))

    commuting = conjugation = None
    if action.isometric:
        commuting = bool(np.array_equal(products, products.T))
        conj = mul[mul, inv[:, None]]
        conjugation = bool(np.all(phi[conj] == phi[None, :]))

    report = MetricReport(
        name=action.name, order=action.order, symmetric=symmetric, positive=positive,
        subadditive=subadditive, ultrametric=ultrametric, isometric=action.isometric,
        product_symmetric=commuting, conjugation_invariant=conjugation,
    )
    if not report.passed:
        logger.error(f"metric_report: identity failure on {action.name}: {report.model_dump()}")
    return report


# Catalog sweeps

def _subset_batches(order: int, size: int, samples: int, rng) -> Tuple[np.ndarray, bool]:
    total = math.comb(order, size)
    if total <= SWEEP_EXHAUSTIVE_MAX:
        return np.array(list(combinations(range(order), size)), dtype=np.int64).reshape(-1, size), False
    picks = np.stack([np.sort(rng.choice(order, size=size, replace=False)) for _ in range(samples)])
    return picks, True


def _theorem3_batch(action: FiniteAction, subsets: np.ndarray) -> Dict[str, np.ndarray]:
    """δ (in units) and both Φ counts for every row of subsets"""
    group = action.group
    pairs = list(combinations(range(subsets.shape[1]), 2))
    quotients = np.stack([group.mul[subsets[:, i], group.inv[subsets[:, j]]] for i, j in pairs], axis=1)
    delta_units = action.phi_units[quotients].min(axis=1)
    return {
        "delta": delta_units,
        # 2φ < δ  <=>  φ < δ/2
        "half": np.searchsorted(action.sorted_twice_phi, delta_units, side="left"),
        "full": np.searchsorted(action.sorted_phi, delta_units, side="left"),
    }


def _sweep_action_theorem3(action: FiniteAction, max_subset_size: int, samples: int, seed: int) -> ActionSweep:
    rng = make_rng(seed, action.order)
    sweep = ActionSweep(
        name=action.name, order=action.order,
        nonarchimedean=action.nonarchimedean, isometric=action.isometric,
    )
    violations: List[Dict[str, Any]] = []
    for size in range(2, min(max_subset_size, action.order) + 1):
        subsets, sampled = _subset_batches(action.order, size, samples, rng)
        sweep.sampled = sweep.sampled or sampled
        stats = _theorem3_batch(action, subsets)
        # Φ <= 1/|𝒜|  <=>  count·|𝒜| <= |G|
        checks = [("half", stats["half"] * size)]
        if action.nonarchimedean:
            checks.append(("full", stats["full"] * size))
        equal = np.zeros(len(subsets), dtype=bool)
        for label, scaled in checks:
            equal |= scaled == action.order
            for row in np.flatnonzero(scaled > action.order):
                violations.append({
                    "subset": subsets[row].tolist(),
                    "check": label,
                    "delta": str(action.fraction(stats["delta"][row])),
                    "lhs": str(Fraction(int(scaled[row]) // size, action.order)),
                    "rhs": str(Fraction(1, size)),
                })
        sweep.checked += len(subsets)
        sweep.equality_cases += int(np.count_nonzero(equal))
    sweep.violations = violations
    return sweep


def sweep_theorem3(
    actions: Iterable[FiniteAction],
    max_subset_size: int = 4,
    samples: int = 1000,
    seed: int = 0,
    workers: int = 1,
) -> CatalogSweepReport:
    """
    Theorem-3 bounds on every subset of size 2..max_subset_size of each action

    Sizes whose subset count exceeds 10⁵ are replaced by `samples` uniform subsets
    drawn from the stream (seed, |G|).
    """
    max_subset_size = validator.positive_int(max_subset_size, "subset-size")
    samples = validator.positive_int(samples, "samples")
    actions = list(actions)
    sweeps = ordered_map(
        lambda action: _sweep_action_theorem3(action, max_subset_size, samples, seed), actions, workers
    )
    report = CatalogSweepReport(theorem="3", actions=sweeps)
    logger.info(
        f"sweep_theorem3: {len(sweeps)} actions, {sum(s.checked for s in sweeps)} subsets, "
        f"{report.violation_count} violations"
    )
    return report


def _sweep_action_theorem4(action: FiniteAction, max_exponent: int) -> ActionSweep:
    sweep = ActionSweep(
        name=action.name, order=action.order,
        nonarchimedean=action.nonarchimedean, isometric=action.isometric,
    )
    for a in range(action.order):
        for b in range(action.order):
            for m_max in range(1, max_exponent + 1):
                for n_max in range(1, max_exponent + 1):
                    report = verify_theorem4_exact(action, a, b, m_max, n_max)
                    sweep.checked += 1
                    checks = [report.half_delta_check, report.full_delta_check]
                    sweep.equality_cases += int(any(c is not None and c.equality for c in checks))
                    if not report.passed:
                        sweep.violations.append(report.model_dump(mode="json"))
    return sweep


def sweep_theorem4(
    actions: Iterable[FiniteAction], max_exponent: int = 2, workers: int = 1
) -> CatalogSweepReport:
    """Theorem-4 bounds for all (a, b) and 1 <= M, N <= max_exponent; non-isometric actions are skipped"""
    max_exponent = validator.positive_int(max_exponent, "max-exponent")
    eligible = []
    for action in actions:
        if action.isometric:
            eligible.append(action)
        else:
            logger.warning(f"sweep_theorem4: skipping {action.name}, not isometric")
    sweeps = ordered_map(lambda action: _sweep_action_theorem4(action, max_exponent), eligible, workers)
    report = CatalogSweepReport(theorem="4", actions=sweeps)
    logger.info(f"sweep_theorem4: {len(sweeps)} actions, {report.violation_count} violations")
    return report
