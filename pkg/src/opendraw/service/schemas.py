"""Request and response models for the reliability service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class TensionSection(BaseModel):
    t0: list[float] = Field(min_length=1)
    c_t: list[float] = Field(default=[0.0], min_length=1)
    a: float = Field(default=1.0, gt=0)

    @field_validator("t0")
    @classmethod
    def _t0_positive(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("every t0 must be strictly positive")
        return v

    @field_validator("c_t")
    @classmethod
    def _cv_nonnegative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("c_t values must be nonnegative")
        return v


class GeometrySection(BaseModel):
    span: float = Field(gt=0)
    half_width: float = Field(gt=0)
    thickness: float = Field(gt=0)


class MaterialSection(BaseModel):
    youngs: float = Field(gt=0)
    g_c: float = Field(gt=0)


class CracksSection(BaseModel):
    mean_length: list[float] = Field(min_length=1)
    shape: float = Field(default=0.8, gt=0)

    @field_validator("mean_length")
    @classmethod
    def _positive(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("mean crack lengths must be strictly positive")
        return v


class SpacingSection(BaseModel):
    model: Literal["poisson", "binomial", "deterministic", "lognormal"]
    pitch: Optional[list[float]] = None
    p_s: Optional[float] = Field(default=None, gt=0, le=1)
    zone: Optional[list[float]] = None
    rate: Optional[list[float]] = None
    mean_gap: Optional[list[float]] = None
    cv: Optional[float] = Field(default=None, gt=0)
    shift: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _model_keys(self):
        needed = {
            "poisson": ("rate",),
            "binomial": ("pitch", "p_s", "zone"),
            "deterministic": ("pitch",),
            "lognormal": ("mean_gap", "cv"),
        }[self.model]
        missing = [k for k in needed if getattr(self, k) is None]
        if missing:
            raise ValueError(f"spacing model {self.model} needs {', '.join(missing)}")
        return self


class RunSection(BaseModel):
    band_length: float = Field(gt=0)
    samples: int = Field(default=100, ge=1)
    inner: int = Field(default=20000, ge=1)
    seed: int = 0
    threads: int = Field(default=1, ge=1)
    weight_table: Optional[str] = None


class ReliabilityRequest(BaseModel):
    tension: TensionSection
    geometry: GeometrySection
    material: MaterialSection
    cracks: CracksSection
    spacing: SpacingSection
    run: RunSection


class SweepRow(BaseModel):
    model: str
    t0: float
    c_T: float
    a: float
    mean_crack: float
    spacing_param: float
    estimate: float
    std_error: float
    error_bound: float
    M: int
    n_inner: int
    seed: int


class SweepResponse(BaseModel):
    metadata: dict[str, str]
    rows: list[SweepRow]


class CriticalSection(BaseModel):
    target: float = Field(gt=0, lt=1)
    bracket_low: Optional[float] = Field(default=None, gt=0)
    bracket_high: Optional[float] = Field(default=None, gt=0)
    tol: float = Field(default=1e-3, gt=0)


class CriticalTensionRequest(ReliabilityRequest):
    critical: CriticalSection


class FirstPassageSection(BaseModel):
    boundaries_sd: list[float] = Field(min_length=1)
    s_values: list[float] = Field(min_length=1)
    start_quantiles: list[float] = Field(default=[0.5], min_length=1)
    paths: int = Field(default=100000, ge=1)
    step: float = Field(default=1e-3, gt=0)

    @field_validator("s_values")
    @classmethod
    def _positive(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("s values must be strictly positive")
        return v

    @field_validator("start_quantiles")
    @classmethod
    def _open_unit(cls, v):
        if any(not 0 < x < 1 for x in v):
            raise ValueError("start quantiles must lie in (0, 1)")
        return v


class FirstPassageRequest(BaseModel):
    tension: TensionSection
    geometry: GeometrySection
    material: MaterialSection
    run: RunSection
    first_passage: FirstPassageSection


class FirstPassageRow(BaseModel):
    t0: float
    c_T: float
    a: float
    boundary: float
    start: float
    s: float
    spectral: float
    oracle: float
    oracle_se: float
    abs_diff: float
    within_3se: int


class FirstPassageResponse(BaseModel):
    metadata: dict[str, str]
    rows: list[FirstPassageRow]


class ValidateRequest(BaseModel):
    level: Literal["quick", "full"] = "quick"
    seed: int = 0


class ValidateCheck(BaseModel):
    check: str
    passed: int
    detail: str


class ValidateResponse(BaseModel):
    metadata: dict[str, str]
    rows: list[ValidateCheck]
    passed: bool
