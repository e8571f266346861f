from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal, Optional, Union

from app.models.shape import ShapeKind
from app.schemas.reports import EstimatorMethod

Command = Literal[
    "verify-score",
    "estimate",
    "compare-estimators",
    "robustness",
    "bounds",
    "distance",
    "verify-shapes",
]

STATISTIC_MENU = ("linear", "scaled_linear", "square", "cube", "wscores")


def parse_vector(value):
    """Accept "1,2,3" as well as [1, 2, 3]."""
    if value is None or isinstance(value, list):
        return value
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(",") if p]
        if not parts:
            raise ValueError("empty vector")
        return [float(p) for p in parts]
    raise ValueError("invalid vector format")


def parse_matrix(value):
    """Accept "I", "2,1;1,2" (rows split by ';') or nested lists."""
    if value is None or isinstance(value, list):
        return value
    if isinstance(value, (int, float)):
        return [[float(value)]]
    if isinstance(value, str):
        text = value.replace(" ", "")
        if text.upper() == "I":
            return "I"
        rows = [parse_vector(row) for row in text.split(";") if row]
        if not rows or any(len(row) != len(rows[0]) for row in rows):
            raise ValueError("matrix rows must have equal length")
        return rows
    raise ValueError("invalid matrix format")


class ExperimentConfig(BaseModel):
    """Everything one CLI run needs. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    shape: Optional[ShapeKind] = None
    nu: Optional[float] = Field(None, gt=2)
    dim: Optional[int] = Field(None, ge=1, le=50)

    mu: Optional[List[float]] = None
    lam: Optional[Union[Literal["I"], List[List[float]]]] = None
    mu2: Optional[List[float]] = None
    lam2: Optional[Union[Literal["I"], List[List[float]]]] = None
    theta_seed: Optional[int] = Field(None, ge=0)

    method: Optional[EstimatorMethod] = None
    methods: List[EstimatorMethod] = [EstimatorMethod.WMOMENT, EstimatorMethod.MLE]
    data: Optional[str] = None
    tol: Optional[float] = Field(None, gt=0)
    max_iter: Optional[int] = Field(None, ge=1)

    n: int = Field(10_000, ge=1, le=10_000_000)
    replications: int = Field(200, ge=1, le=100_000)
    n_thetas: int = Field(10, ge=1, le=1000)
    n_points: int = Field(100, ge=1, le=100_000)
    sigma2: List[float] = [1e-3, 2e-3, 4e-3]
    statistics: List[str] = list(STATISTIC_MENU)

    seed: int = Field(0, ge=0)
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"

    @field_validator("mu", "mu2", mode="before")
    @classmethod
    def parse_mu(cls, v):
        return parse_vector(v)

    @field_validator("lam", "lam2", mode="before")
    @classmethod
    def parse_lam(cls, v):
        return parse_matrix(v)

    @field_validator("sigma2")
    @classmethod
    def check_sigma2(cls, v):
        if len(v) < 1 or any(s <= 0 for s in v):
            raise ValueError("sigma2 values must be positive")
        return sorted(v)

    @field_validator("statistics")
    @classmethod
    def check_statistics(cls, v):
        unknown = [s for s in v if s not in STATISTIC_MENU]
        if unknown:
            raise ValueError(f"unknown statistics {unknown}; choose from {list(STATISTIC_MENU)}")
        return v

    @model_validator(mode="after")
    def check_consistency(self):
        if self.shape is ShapeKind.STUDENT_T and self.nu is None:
            raise ValueError("student-t shape requires nu")
        if self.command == "estimate":
            if self.method is None:
                raise ValueError("estimate requires method")
            if self.data is None:
                raise ValueError("estimate requires data")
        if self.command == "distance":
            if self.mu is None or self.mu2 is None:
                raise ValueError("distance requires mu and mu2")
        return self
