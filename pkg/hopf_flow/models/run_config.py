from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator
from typing import List, Optional, Tuple
from hopf_flow.constants.flow_constants import (
    CurveFamilyName,
    DifferentiationMethod,
    FlowDefaults,
    TerminationReason,
    TimeScheme,
)
from hopf_flow.models.flow import FlowConfig


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class CurveFamily(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: CurveFamilyName
    theta: float = Field(1.0471975511965976, gt=0, lt=3.141592653589793)
    amplitude: float = Field(0.05, ge=0)
    modes: List[int] = Field(default_factory=lambda: [2])
    seed: int = 0
    frequencies: Tuple[int, int] = (1, 2)
    phase: float = 0.1
    lissajous_amplitude: float = Field(0.5, gt=0)
    path: Optional[str] = None

    @model_validator(mode="after")
    def _check_family(self):
        if self.name == CurveFamilyName.FROM_FILE and not self.path:
            raise ValueError("from_file family requires curve_file")
        if any(mode < 1 for mode in self.modes):
            raise ValueError("perturbation modes must be positive")
        return self


class RunConfig(BaseModel):
    """Flat key=value run configuration; every key is documented in README.md."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    curve_family: CurveFamilyName = CurveFamilyName.LATITUDE
    theta: float = Field(1.0471975511965976, gt=0, lt=3.141592653589793)
    amplitude: float = Field(0.05, ge=0)
    modes: List[int] = Field(default_factory=lambda: [2])
    seed: int = 0
    lissajous_frequencies: Tuple[int, int] = (1, 2)
    lissajous_phase: float = 0.1
    lissajous_amplitude: float = Field(0.5, gt=0)
    curve_file: Optional[str] = Field(None, validate_default=True)

    nodes: int = Field(FlowDefaults.NODES, ge=64)
    scheme: TimeScheme = TimeScheme.IMEX
    differentiation: DifferentiationMethod = DifferentiationMethod.STENCIL
    dt: float = Field(FlowDefaults.DT, gt=0)
    dt_min: float = Field(FlowDefaults.DT_MIN, gt=0)
    dt_max: float = Field(FlowDefaults.DT_MAX, gt=0)
    dt_growth: float = Field(FlowDefaults.DT_GROWTH, ge=1.0)
    cfl: float = Field(FlowDefaults.CFL, gt=0)
    energy_tolerance: float = Field(FlowDefaults.ENERGY_TOLERANCE, gt=0)
    max_halvings: int = Field(FlowDefaults.MAX_HALVINGS, ge=1)
    resample_every: int = Field(FlowDefaults.RESAMPLE_EVERY, ge=0)
    max_steps: int = Field(FlowDefaults.MAX_STEPS, ge=1)
    t_max: float = Field(FlowDefaults.T_MAX, gt=0)
    kappa_tol: float = Field(FlowDefaults.KAPPA_TOL, gt=0)
    energy_gap_tol: float = Field(FlowDefaults.ENERGY_GAP_TOL, gt=0)
    gradient_tol: float = Field(FlowDefaults.GRADIENT_TOL, gt=0)
    kappa_ceiling: float = Field(FlowDefaults.KAPPA_CEILING, gt=0)
    regime_check: bool = True

    output_dir: str = "output"
    sample_every: int = Field(FlowDefaults.SAMPLE_EVERY, ge=1)
    snapshot_every: int = Field(0, ge=0, description="Samples between snapshot files; 0 writes only the final one")
    mesh_every: int = Field(0, ge=0, description="Samples between mesh exports; 0 disables")
    fiber_resolution: int = Field(64, ge=16)
    verify_hopf: bool = False
    verify_evolution: bool = False
    track_moduli: bool = True
    request_area: bool = True

    @field_validator("modes", "lissajous_frequencies", mode="before")
    @classmethod
    def _split(cls, value):
        return _split_list(value)

    @field_validator("curve_file")
    @classmethod
    def _require_file(cls, value: Optional[str], info: ValidationInfo) -> Optional[str]:
        if info.data.get("curve_family") == CurveFamilyName.FROM_FILE and not value:
            raise ValueError("curve_file is required for the from_file family")
        return value

    def family(self) -> CurveFamily:
        return CurveFamily(
            name=self.curve_family,
            theta=self.theta,
            amplitude=self.amplitude,
            modes=self.modes,
            seed=self.seed,
            frequencies=self.lissajous_frequencies,
            phase=self.lissajous_phase,
            lissajous_amplitude=self.lissajous_amplitude,
            path=self.curve_file,
        )

    def flow_config(self) -> FlowConfig:
        return FlowConfig(**self.model_dump(include=set(FlowConfig.model_fields)))


class RunSummary(BaseModel):
    termination: TerminationReason
    initial_energy: float
    final_energy: float
    reference_energy: float
    final_time: float
    steps: int
    rejections: int
    resample_events: int
    sup_kappa: float
    length: float
    area: Optional[float] = None
    area_nominal: bool = False
    embedded: Optional[bool] = None
    tau_reduced: Optional[Tuple[float, float]] = None
    reduction_word: Optional[str] = None
    exponential_rate: Optional[float] = None
    exponential_r_squared: Optional[float] = None
    bound_failures: List[str] = Field(default_factory=list)
    hopf_max_residual: Optional[float] = None
    evolution_max_residual: Optional[float] = None
