"""Built-in finite actions and the JSON table format {mul, act, dist}"""
import re
from itertools import permutations
from typing import Any, Dict, List, Optional

from loguru import logger

from app.models.errors import InvalidTableError, UsageError
from app.services.finite_action import FiniteAction, FiniteGroup, FiniteMetricSpace

MAX_CYCLIC = 24
MAX_SYMMETRIC = 5
MIN_DIHEDRAL, MAX_DIHEDRAL = 3, 8

METRICS = ("circular", "discrete")


def circular_space(n: int) -> FiniteMetricSpace:
    """ℤ_n with dist(x, y) = min(|x − y|, n − |x − y|)"""
    return FiniteMetricSpace(
        [[min(abs(x - y), n - abs(x - y)) for y in range(n)] for x in range(n)], name=f"C{n}",
    )


def discrete_space(n: int) -> FiniteMetricSpace:
    return FiniteMetricSpace([[int(x != y) for y in range(n)] for x in range(n)], name=f"discrete{n}")


def make_space(metric: str, n: int) -> FiniteMetricSpace:
    if metric == "circular":
        return circular_space(n)
    if metric == "discrete":
        return discrete_space(n)
    raise UsageError(f"unknown metric '{metric}', expected one of {METRICS}", flag="metric")


def cyclic_action(n: int, metric: str = "circular") -> FiniteAction:
    """ℤ_n acting on itself by translation; element g is the index g"""
    elements = [tuple((x + g) % n for x in range(n)) for g in range(n)]
    return FiniteAction.from_permutations(elements, make_space(metric, n), name=f"Z{n}")


def symmetric_action(n: int, metric: str = "discrete") -> FiniteAction:
    """S_n on {0..n−1}; elements in lexicographic order, identity first"""
    elements = list(permutations(range(n)))
    return FiniteAction.from_permutations(elements, make_space(metric, n), name=f"S{n}")


def dihedral_action(n: int, metric: str = "circular") -> FiniteAction:
    """D_n on the n-cycle: rotations x ↦ x + k first, then reflections x ↦ k − x"""
    if n < MIN_DIHEDRAL:
        raise UsageError(f"dihedral group needs n >= {MIN_DIHEDRAL}", flag="group")
    rotations = [tuple((x + k) % n for x in range(n)) for k in range(n)]
    reflections = [tuple((k - x) % n for x in range(n)) for k in range(n)]
    return FiniteAction.from_permutations(rotations + reflections, make_space(metric, n), name=f"D{n}")


def catalog(
    max_cyclic: int = MAX_CYCLIC,
    max_symmetric: int = MAX_SYMMETRIC,
    max_dihedral: int = MAX_DIHEDRAL,
) -> List[FiniteAction]:
    """Every natural catalog action: ℤ_n (2..24, circular), S_n (2..5, discrete), D_n (3..8, circular)"""
    actions = [cyclic_action(n) for n in range(2, max_cyclic + 1)]
    actions += [symmetric_action(n) for n in range(2, max_symmetric + 1)]
    actions += [dihedral_action(n) for n in range(MIN_DIHEDRAL, max_dihedral + 1)]
    logger.debug(f"catalog: {len(actions)} actions")
    return actions


_NAME = re.compile(r"^([zsd])(\d+)$")


def action_by_name(name: str, metric: Optional[str] = None) -> FiniteAction:
    """'z12', 's4', 'd6', optionally with a non-default metric"""
    match = _NAME.match(name.strip().lower())
    if not match:
        raise UsageError(f"unknown group '{name}', expected z<n>, s<n> or d<n>", flag="group")
    family, n = match.group(1), int(match.group(2))
    limits = {"z": (1, MAX_CYCLIC), "s": (1, MAX_SYMMETRIC), "d": (MIN_DIHEDRAL, MAX_DIHEDRAL)}
    low, high = limits[family]
    if not low <= n <= high:
        raise UsageError(f"{family}{n} outside the catalog range {low}..{high}", flag="group")
    builders = {"z": cyclic_action, "s": symmetric_action, "d": dihedral_action}
    defaults = {"z": "circular", "s": "discrete", "d": "circular"}
    return builders[family](n, metric or defaults[family])


# JSON tables

def action_from_tables(data: Dict[str, Any], name: str = "custom") -> FiniteAction:
    """Build an action from {mul, act, dist}; dist entries are ints or "p/q" strings"""
    missing = [key for key in ("mul", "act", "dist") if key not in data]
    if missing:
        raise InvalidTableError(f"table file is missing {missing}")
    group = FiniteGroup(data["mul"], name=data.get("name", name))
    space = FiniteMetricSpace(data["dist"], name=data.get("space", "X"))
    return FiniteAction(group, space, data["act"])


def action_to_tables(action: FiniteAction) -> Dict[str, Any]:
    return {
        "name": action.group.name,
        "space": action.space.name,
        "mul": action.group.mul.tolist(),
        "act": action.act.tolist(),
        "dist": action.space.table(),
    }
