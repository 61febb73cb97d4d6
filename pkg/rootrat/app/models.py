"""
Pydantic models for driver options and CLI report validation
"""

from typing import Any, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rootrat.config import settings


# Request Models
class Options(BaseModel):
    """Options accepted by every driver entry point"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    variables: Optional[List[Any]] = Field(
        default=None,
        description="Variables the transformation may change, in order (others stay fixed)",
    )
    output_variables: Optional[List[Any]] = Field(
        default=None,
        description="Names of the new variables",
    )
    multiple_solutions: bool = Field(
        default=False,
        description="Return every distinct result instead of the first",
    )
    general_c: bool = Field(
        default=False,
        description="Let the d-1 point depend on free parameters C1, C2, ...",
    )
    general_t: bool = Field(
        default=False,
        description="Keep every line parameter t0..tn instead of fixing one to 1",
    )
    force_fdecomposition: bool = Field(
        default=False,
        description="Skip the direct algorithm and use F-decompositions",
    )
    f_polynomials: Optional[List[Any]] = Field(
        default=None,
        description="F-decomposition triple (f_{d/2-1}, f_{d/2}, f_{d/2+1})",
    )
    point: Optional[List[Any]] = Field(
        default=None,
        description="Affine coordinates of the d-1 point, in the active variable order",
    )
    fix_index: Optional[int] = Field(
        default=None,
        description="Index of the line parameter set to 1",
        ge=0,
    )
    perfect_squares: Literal["auto", "keep", "strip", "exhaustive"] = Field(
        default="auto",
        description="Whether square factors of the radicand are kept or stripped",
    )

    # Search bounds
    height: int = Field(default_factory=lambda: settings.height, ge=1, le=50)
    scan_limit: int = Field(default_factory=lambda: settings.scan_limit, ge=0)
    solve_limit: int = Field(default_factory=lambda: settings.solve_limit, ge=1)
    elimination_degree_cap: int = Field(default_factory=lambda: settings.elimination_degree_cap, ge=2)
    fdecomp_depth: int = Field(default_factory=lambda: settings.fdecomp_depth, ge=0, le=5)
    max_orderings: int = Field(default_factory=lambda: settings.max_orderings, ge=1)
    timeout: Optional[float] = Field(default_factory=lambda: settings.timeout, gt=0)

    @field_validator("output_variables")
    @classmethod
    def validate_output_variables(cls, v):
        """Output names must be pairwise distinct"""
        if v is not None and len({str(name) for name in v}) != len(v):
            raise ValueError("output variables must be pairwise distinct")
        return v

    @field_validator("f_polynomials")
    @classmethod
    def validate_f_polynomials(cls, v):
        """An F-decomposition is a triple"""
        if v is not None and len(v) != 3:
            raise ValueError("f_polynomials must contain exactly three polynomials")
        return v

    @model_validator(mode="after")
    def validate_combination(self):
        """general_t emits every t, so an explicit t index is meaningless"""
        if self.general_t and self.fix_index is not None:
            raise ValueError("general_t and fix_index cannot be combined")
        return self


# Response Models
class SubstitutionModel(BaseModel):
    """One entry of a substitution list"""

    var: str
    value: str


class ResultModel(BaseModel):
    """One rationalization or parametrization"""

    substitutions: List[SubstitutionModel]
    root_value: Optional[str] = None
    strategy: Literal["direct", "fdecomp", "composed"] = "direct"
    point: Optional[List[str]] = None


class ReportModel(BaseModel):
    """Output of one CLI invocation"""

    input: str
    results: List[ResultModel] = Field(default_factory=list)
    status: Literal["ok", "empty"] = "empty"


class BatchLineModel(BaseModel):
    """Outcome of one batch line"""

    line: int
    task: str
    outcome: Literal["succeeded", "failed", "errored"]
    report: Optional[ReportModel] = None
    error: Optional[str] = None


class BatchReport(BaseModel):
    """Per-line batch outcomes plus summary counters"""

    lines: List[BatchLineModel] = Field(default_factory=list)
    succeeded: int = 0
    failed: int = 0
    errored: int = 0
