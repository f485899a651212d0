# isostokes/cli/schemas.py
from __future__ import annotations
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union
import json

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from ..core.errors import SchemaViolation
from ..core.models import PrefactorConvention, ReportStatus, Side
from ..infrastructure.config import IsoStokesConfig

class StrictModel(BaseModel):
    """Base for job configuration models: unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid")

# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

Entry = Union[float, Tuple[float, float]]

class RandomHermitianSpec(StrictModel):
    n: int = Field(ge=1, le=12, description="Matrix size")
    norm: float = Field(default=1.0, gt=0.0, le=100.0, description="Frobenius norm of the draw")

class RandomHermitianInput(StrictModel):
    """Hermitian matrix drawn from numpy.random.default_rng(seed)."""
    random: RandomHermitianSpec

MatrixInput = Union[List[List[Entry]], RandomHermitianInput]

class RandomPointSpec(StrictModel):
    n: int = Field(ge=1, le=12, description="Number of coordinates")
    gap_min: float = Field(default=0.5, gt=0.0, description="Smallest drawn gap")
    gap_max: float = Field(default=3.0, gt=0.0, description="Largest drawn gap")
    start: float = Field(default=0.0, description="First coordinate")

    @model_validator(mode="after")
    def check_gap_range(self) -> "RandomPointSpec":
        if self.gap_max < self.gap_min:
            raise ValueError("gap_max must be at least gap_min")
        return self

class RandomPointInput(StrictModel):
    """Increasing coordinates with uniformly drawn gaps."""
    random: RandomPointSpec

PointInput = Union[List[float], RandomPointInput]

class RandomPathSpec(RandomPointSpec):
    length: float = Field(default=1.0, gt=0.0, le=100.0, description="Euclidean length of the straight path")

class RandomPathInput(StrictModel):
    """Random regular start point and a straight path of given length from it."""
    random: RandomPathSpec

PathInput = Union[List[List[float]], RandomPathInput]

class CanonicalPoint(StrictModel):
    z: Entry = Field(description="Evaluation point, real or [re, im]")
    which: Side = Field(default=Side.PLUS, description="Canonical solution")
    arg: Optional[float] = Field(default=None, description="Argument of z on the solution's sheet")

class SettingsOverrides(StrictModel):
    """Per-job overrides of the numerical settings sections."""
    numerics: Dict[str, Any] = Field(default_factory=dict)
    flow: Dict[str, Any] = Field(default_factory=dict)
    stokes: Dict[str, Any] = Field(default_factory=dict)
    solver: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_against_settings(self) -> "SettingsOverrides":
        try:
            IsoStokesConfig().with_overrides(self.as_overrides())
        except ValidationError as e:
            first = e.errors()[0]
            path = ".".join(str(p) for p in first["loc"])
            raise ValueError(f"{path}: {first['msg']}") from None
        return self

    def as_overrides(self) -> Dict[str, Dict[str, Any]]:
        return {k: v for k, v in self.model_dump().items() if v}

# ---------------------------------------------------------------------------
# Jobs
# ---------------------------------------------------------------------------

class JobBase(StrictModel):
    job_id: Optional[str] = Field(default=None, description="Identifier echoed in the report")
    seed: int = Field(default=0, ge=0, description="Seed for random inputs")
    settings: SettingsOverrides = Field(default_factory=SettingsOverrides)

class SeedJob(JobBase):
    command: Literal["seed"]
    A: MatrixInput = Field(description="Asymptotic data of the zone")
    rho: float = Field(gt=1.0, description="Zone scale")
    zone: Side = Field(default=Side.PLUS)
    direct: bool = Field(default=False, description="Minus zone: use the explicit product conjugator")

class ExtractJob(JobBase):
    command: Literal["extract"]
    phi: MatrixInput
    u: PointInput
    zone: Side = Field(default=Side.PLUS)

class EvolveJob(JobBase):
    command: Literal["evolve"]
    phi: MatrixInput
    path: PathInput = Field(description="Waypoints, or a random straight path")
    samples: int = Field(default=2, ge=2, le=200, description="Equally spaced samples per path segment, endpoints included")
    check_stokes: bool = Field(default=False, description="Compare Stokes pairs at the samples")

class StokesNumJob(JobBase):
    command: Literal["stokes-num"]
    A: MatrixInput
    u: PointInput
    anchor_radius: Optional[float] = Field(default=None, gt=0.0, description="Fixed anchor radius R")
    canonical: List[CanonicalPoint] = Field(default_factory=list, description="Points where F_plus/F_minus are reported")

class StokesClosedJob(JobBase):
    command: Literal["stokes-closed"]
    A: MatrixInput = Field(description="A_inf (zone plus) or A_minus_inf (zone minus)")
    zone: Side = Field(default=Side.PLUS)
    convention: PrefactorConvention = Field(default=PrefactorConvention.SUM)
    compare_rho: Optional[float] = Field(default=None, gt=1.0, description="Also compare against numerics at this rho")

class ConnectFlowJob(JobBase):
    command: Literal["connect-flow"]
    A: MatrixInput = Field(description="A_inf, or A_minus_inf when direction is minus")
    rho: float = Field(gt=1.0)
    direction: Side = Field(default=Side.PLUS, description="plus: A_inf -> A_minus_inf")
    tol: Optional[float] = Field(default=None, gt=0.0, description="Flow tolerance override")

class ConnectSolveJob(JobBase):
    command: Literal["connect-solve"]
    A_inf: MatrixInput
    rho: float = Field(gt=1.0)
    initial_guess: Optional[MatrixInput] = Field(default=None, description="Defaults to the flow answer")

class VerifyConnectionJob(JobBase):
    command: Literal["verify-connection"]
    A_inf: MatrixInput
    A_minus_inf: Optional[MatrixInput] = Field(default=None, description="Defaults to the flow answer")
    rho: float = Field(gt=1.0)
    tol: float = Field(default=1e-2, gt=0.0, description="Accepted relative residual")

class PVIParamsJob(JobBase):
    command: Literal["pvi-params"]
    phi: MatrixInput
    u: PointInput

    @field_validator("u")
    @classmethod
    def three_coordinates(cls, v):
        n = len(v) if isinstance(v, list) else v.random.n
        if n != 3:
            raise ValueError("PVI parameters need exactly three coordinates")
        return v

class SelftestJob(JobBase):
    command: Literal["selftest"]

JobConfig = Annotated[
    Union[
        SeedJob,
        ExtractJob,
        EvolveJob,
        StokesNumJob,
        StokesClosedJob,
        ConnectFlowJob,
        ConnectSolveJob,
        VerifyConnectionJob,
        PVIParamsJob,
        SelftestJob,
    ],
    Field(discriminator="command"),
]

COMMANDS = (
    "seed", "extract", "evolve", "stokes-num", "stokes-closed",
    "connect-flow", "connect-solve", "verify-connection", "pvi-params", "selftest",
)

class BatchConfig(StrictModel):
    jobs: List[JobConfig] = Field(min_length=1)

job_adapter: TypeAdapter = TypeAdapter(JobConfig)

# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class ErrorReport(BaseModel):
    """Machine-readable error object."""
    error: str = Field(description="Exception type")
    message: str = Field(description="Human-readable error message")
    details: Dict[str, Any] = Field(default_factory=dict, description="Reason, suggestion, field path, ...")
    job_id: Optional[str] = Field(default=None)

class Report(BaseModel):
    """Result of one job."""
    schema_version: str
    version: str
    job_id: Optional[str] = None
    command: str
    status: ReportStatus
    exit_code: int = 0
    config: Dict[str, Any] = Field(default_factory=dict, description="Echo of the validated job")
    results: Dict[str, Any] = Field(default_factory=dict)
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
    timings: Dict[str, Any] = Field(default_factory=dict, description="Excluded from determinism checks")
    error: Optional[ErrorReport] = None

# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _field_path(loc: Tuple[Any, ...]) -> str:
    parts = [str(p) for p in loc]
    # drop the union tag pydantic inserts for discriminated unions
    if parts and parts[0] in COMMANDS:
        parts = parts[1:]
    if len(parts) > 1 and parts[0] == "jobs" and len(parts) > 2 and parts[2] in COMMANDS:
        parts = parts[:2] + parts[3:]
    return ".".join(parts) or "<root>"

def schema_violation(e: ValidationError) -> SchemaViolation:
    first = e.errors()[0]
    return SchemaViolation(_field_path(tuple(first["loc"])), first["msg"], errors=len(e.errors()))

def _load(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation("<root>", f"invalid JSON: {e.msg} at line {e.lineno}") from None

def parse_config(text: str):
    """
    Validate a job configuration.

    Raises:
        SchemaViolation: With the dotted path of the first offending field
    """
    data = _load(text)
    try:
        return job_adapter.validate_python(data)
    except ValidationError as e:
        raise schema_violation(e) from None

def parse_batch(text: str) -> BatchConfig:
    data = _load(text)
    try:
        return BatchConfig.model_validate(data)
    except ValidationError as e:
        raise schema_violation(e) from None

def is_batch(text: str) -> bool:
    data = _load(text)
    return isinstance(data, dict) and "jobs" in data

def job_schema() -> Dict[str, Any]:
    return {
        "job": job_adapter.json_schema(),
        "batch": BatchConfig.model_json_schema(),
        "report": Report.model_json_schema(),
    }
