"""Pydantic schemas for results, reports and manifests"""
from datetime import datetime, timezone
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, field_validator, model_validator

BOUND_SLACK = 1e-9


class MatrixPayload(BaseModel):
    """Matrix JSON format: {"n": N, "re": [[...]], "im": [[...]]}, row-major"""
    n: int = Field(..., ge=1, le=64)
    re: List[List[float]]
    im: List[List[float]]

    @model_validator(mode="after")
    def check_shape(self):
        for name in ("re", "im"):
            rows = getattr(self, name)
            if len(rows) != self.n or any(len(row) != self.n for row in rows):
                raise ValueError(f"'{name}' must be an {self.n}x{self.n} array")
        return self


class DistributionEstimate(BaseModel):
    """Monte Carlo estimate of Φ(t) with a 95% Wilson interval"""
    t: float = Field(..., ge=0)
    n_samples: int = Field(..., ge=1)
    hits: int = Field(..., ge=0)
    estimate: float
    ci_low: float
    ci_high: float
    method: str = "mc"

    @model_validator(mode="after")
    def check_invariants(self):
        if self.hits > self.n_samples:
            raise ValueError("hits cannot exceed n_samples")
        if self.estimate != self.hits / self.n_samples:
            raise ValueError("estimate must equal hits / n_samples")
        if not (0.0 <= self.ci_low <= self.estimate <= self.ci_high <= 1.0):
            raise ValueError("interval must satisfy 0 <= ci_low <= estimate <= ci_high <= 1")
        return self

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2


class QuadratureEstimate(BaseModel):
    """Deterministic Weyl-quadrature value of Φ(t)"""
    t: float
    n: int
    grid_points: int
    estimate: float
    method: str = "quadrature"


class CurveRow(BaseModel):
    t: float
    estimate: float
    ci_low: float
    ci_high: float
    lower_bound: float


class SearchResult(BaseModel):
    """Minimal displacement with its argmin word and the applicable bound"""
    delta: float = Field(..., ge=0)
    argmin: List[int]
    evaluations: int = Field(..., ge=0)
    bound: float
    satisfied: bool
    degenerate: bool = False
    conjectural: bool = False
    kind: str = "set"

    @model_validator(mode="after")
    def check_satisfied(self):
        if self.satisfied != (self.delta <= self.bound + BOUND_SLACK):
            raise ValueError("satisfied must equal (delta <= bound + 1e-9)")
        return self

    @classmethod
    def build(cls, delta: float, argmin, evaluations: int, bound: float, **kwargs) -> "SearchResult":
        delta = max(float(delta), 0.0)
        return cls(
            delta=delta,
            argmin=[int(i) for i in argmin],
            evaluations=int(evaluations),
            bound=float(bound),
            satisfied=delta <= bound + BOUND_SLACK,
            **kwargs,
        )


class TrialRecord(BaseModel):
    trial: int
    delta: float
    bound: float
    ratio: float
    satisfied: bool
    argmin: List[int] = []


class VerificationReport(BaseModel):
    """Outcome of a randomized bound verification"""
    theorem: str
    n: int
    parameters: Dict[str, Any] = {}
    trials: int
    violations: List[TrialRecord] = []
    max_ratio: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations


class ChainRecord(BaseModel):
    """One instance of (δ/2π)^{N²} <= Φ(δ/2) <= 1/|𝒜| on U(N)"""
    trial: int
    delta: float
    lower_chain: float
    phi_half_delta: float
    inverse_cardinality: float
    satisfied: bool


class ChainReport(BaseModel):
    theorem: str = "3-unitary"
    n: int
    cardinality: int
    method: str
    trials: int
    records: List[ChainRecord] = []
    violations: List[ChainRecord] = []

    @property
    def passed(self) -> bool:
        return not self.violations


ExactFraction = Annotated[Fraction, PlainSerializer(str, return_type=str, when_used="json")]


class _ExactModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class InequalityCheck(_ExactModel):
    """lhs <= rhs, compared exactly"""
    lhs: ExactFraction
    rhs: ExactFraction
    holds: bool
    equality: bool

    @classmethod
    def compare(cls, lhs: Fraction, rhs: Fraction) -> "InequalityCheck":
        return cls(lhs=lhs, rhs=rhs, holds=lhs <= rhs, equality=lhs == rhs)


class FiniteTheorem3Report(_ExactModel):
    subset: List[int]
    cardinality: int
    delta: ExactFraction
    half_delta_check: InequalityCheck
    full_delta_check: Optional[InequalityCheck] = None
    nonarchimedean: bool

    @property
    def passed(self) -> bool:
        ok = self.half_delta_check.holds
        if self.full_delta_check is not None:
            ok = ok and self.full_delta_check.holds
        return ok


class FiniteTheorem4Report(_ExactModel):
    a: int
    b: int
    m_max: int
    n_max: int
    delta: ExactFraction
    argmin: List[int]
    degenerate: bool
    matches_set_delta: Optional[bool] = None
    half_delta_check: InequalityCheck
    full_delta_check: Optional[InequalityCheck] = None

    @property
    def passed(self) -> bool:
        ok = self.half_delta_check.holds and self.matches_set_delta is not False
        if self.full_delta_check is not None:
            ok = ok and self.full_delta_check.holds
        return ok


class FiniteCorollaryReport(_ExactModel):
    a: int
    n_max: int
    delta: ExactFraction
    argmin: int
    half_delta_check: InequalityCheck
    full_delta_check: Optional[InequalityCheck] = None

    @property
    def passed(self) -> bool:
        ok = self.half_delta_check.holds
        if self.full_delta_check is not None:
            ok = ok and self.full_delta_check.holds
        return ok


class ActionSweep(_ExactModel):
    name: str
    order: int
    nonarchimedean: bool
    isometric: bool
    checked: int = 0
    sampled: bool = False
    equality_cases: int = 0
    violations: List[Dict[str, Any]] = []


class CatalogSweepReport(BaseModel):
    theorem: str
    actions: List[ActionSweep] = []

    @property
    def violation_count(self) -> int:
        return sum(len(a.violations) for a in self.actions)

    @property
    def passed(self) -> bool:
        return self.violation_count == 0


class ExperimentManifest(BaseModel):
    """Everything needed to replay one CLI run"""
    command: str
    parameters: Dict[str, Any]
    version: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    result: Any = None

    @field_validator("command")
    @classmethod
    def non_empty(cls, v):
        if not v:
            raise ValueError("command must not be empty")
        return v


class MetricReport(BaseModel):
    """Exact φ identities on one finite action; None where the hypothesis does not apply"""
    name: str
    order: int
    symmetric: bool
    positive: bool
    subadditive: bool
    ultrametric: Optional[bool] = None
    isometric: bool
    product_symmetric: Optional[bool] = None
    conjugation_invariant: Optional[bool] = None

    @property
    def passed(self) -> bool:
        flags = [self.symmetric, self.positive, self.subadditive,
                 self.ultrametric, self.product_symmetric, self.conjugation_invariant]
        return all(f is not False for f in flags)
