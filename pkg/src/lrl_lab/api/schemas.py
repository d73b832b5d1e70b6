"""
Schema module for the LRL laboratory API.

This module provides:
- The RunConfig model accepted by every command, CLI and server alike
- Output models describing each command's JSON envelope
"""

from typing import Any, Dict, Generic, List, Literal, Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..utils.constants import DEFAULT_VALUES, FAMILIES, VALIDATION_RULES

_INT = DEFAULT_VALUES["integration"]
_RULES = VALIDATION_RULES["integration"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSpec(_Strict):
    family: str
    params: Dict[str, Any] = Field(default_factory=dict)
    functions: Dict[str, str] = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _known_family(cls, v: str) -> str:
        if v not in FAMILIES:
            raise ValueError(f"{VALIDATION_RULES['family']['message']}: {v!r}")
        return v


class InitialState(_Strict):
    r0: List[float] = Field(min_length=3, max_length=3)
    v0: List[float] = Field(min_length=3, max_length=3)
    t0: float = 0.0


class IntegrationSettings(_Strict):
    rel_tol: float = Field(_INT["rel_tol"], ge=_RULES["rel_tol"]["min"], le=_RULES["rel_tol"]["max"])
    abs_tol: float = Field(_INT["abs_tol"], ge=_RULES["abs_tol"]["min"], le=_RULES["abs_tol"]["max"])
    max_steps: int = Field(_INT["max_steps"], ge=1)
    t: Optional[float] = Field(None, gt=0, description="Integration span; defaults to three orbital times")


class OutputSettings(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = DEFAULT_VALUES["output"]["format"]


class OrbitOptions(_Strict):
    theta_start: Optional[float] = Field(None, description="Defaults to the initial orbit angle")
    theta_stop: Optional[float] = Field(None, description="Defaults to one turn after theta_start")
    count: int = Field(361, ge=2)
    compare: bool = Field(False, description="Also integrate and report the closed-form residual")


class LawscanOptions(_Strict):
    alphas: List[float] = Field(default_factory=lambda: [-3.0, -1.0, 0.0, 1.0, 3.0])
    eccentricities: List[float] = Field(default_factory=lambda: [0.1, 0.4, 0.7])
    mu: float = Field(1.0, gt=0)
    rel_tol: float = Field(1e-11, gt=0)
    workers: Optional[int] = Field(None, ge=1)


class PbcheckOptions(_Strict):
    suite: str = "kepler_negative"
    params: Dict[str, float] = Field(default_factory=dict)
    points: int = Field(DEFAULT_VALUES["poisson"]["points"], ge=1)
    seed: int = DEFAULT_VALUES["poisson"]["seed"]
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("suite")
    @classmethod
    def _known_suite(cls, v: str) -> str:
        rule = VALIDATION_RULES["pbcheck"]["suite"]
        if v not in rule["values"]:
            raise ValueError(f"{rule['message']}: {v!r}")
        return v


class ReduceOptions(_Strict):
    dy: float = Field(DEFAULT_VALUES["reduction"]["dy"], gt=0)


class ExprOptions(_Strict):
    text: str = ""
    var: str = "th"
    at: Optional[float] = None
    params: Dict[str, float] = Field(default_factory=dict)


class RunConfig(_Strict):
    """Everything one command needs; unknown keys are rejected."""

    model: Optional[ModelSpec] = None
    state: Optional[InitialState] = None
    integration: IntegrationSettings = Field(default_factory=IntegrationSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    orbit: OrbitOptions = Field(default_factory=OrbitOptions)
    lawscan: LawscanOptions = Field(default_factory=LawscanOptions)
    pbcheck: PbcheckOptions = Field(default_factory=PbcheckOptions)
    reduce: ReduceOptions = Field(default_factory=ReduceOptions)
    expr: ExprOptions = Field(default_factory=ExprOptions)


# ---------------------------------------------------------------- outputs

T = TypeVar("T")


class Envelope(BaseModel, Generic[T]):
    success: bool
    message: str
    data: T


class TableData(BaseModel):
    path: Optional[str] = None
    columns: Optional[List[str]] = None
    rows: Optional[List[List[float]]] = None


class SimulateData(TableData):
    family: str
    samples: int
    t_span: List[float]


class VerifyData(BaseModel):
    family: str
    samples: int
    initial: Dict[str, Any]
    max_abs_drift: Dict[str, float]
    max_rel_drift: Dict[str, float]
    relations: Dict[str, float]


class OrbitData(TableData):
    family: str
    theta0: float
    invariants: Dict[str, Any]
    orbit_residual: Optional[float] = None


class PeriodData(BaseModel):
    family: str
    T: float
    R: float
    law_residual: float
    l: Optional[float] = None
    e: Optional[float] = None
    plane_semi_major: Optional[float] = None
    plane_residual: Optional[float] = None
    T_quadrature: Optional[float] = None
    cross_check: Optional[float] = None
    T_measured: Optional[float] = None


class LawscanData(TableData):
    count: int


class PbcheckData(BaseModel):
    suite: str
    points: int
    params: Dict[str, float]
    residuals: Dict[str, float]
    max_residual: float


class EBData(BaseModel):
    J_plus: List[float]
    J_minus: List[float]
    modulus: float
    scatter: float


class ReduceData(TableData):
    family: str
    variable: str
    samples: int
    drift: Dict[str, float]
    harmonic_residual: float
    eb: EBData


class ExprData(BaseModel):
    variable: str
    expression: str
    derivative: str
    second_derivative: str
    at: Optional[float] = None
    value: Optional[float] = None
    derivative_value: Optional[float] = None
    second_derivative_value: Optional[float] = None


OUTPUT_MODELS = {
    "simulate": Envelope[SimulateData],
    "verify": Envelope[VerifyData],
    "orbit": Envelope[OrbitData],
    "period": Envelope[PeriodData],
    "lawscan": Envelope[LawscanData],
    "pbcheck": Envelope[PbcheckData],
    "reduce": Envelope[ReduceData],
    "expr": Envelope[ExprData],
}


def json_schema(command: str) -> Dict[str, Any]:
    """Published JSON schema: 'config' for RunConfig, else the command's output envelope."""
    if command == "config":
        return RunConfig.model_json_schema()
    if command not in OUTPUT_MODELS:
        raise KeyError(command)
    return OUTPUT_MODELS[command].model_json_schema()
