from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import List
from hopf_flow.constants.flow_constants import (
    DifferentiationMethod,
    FlowDefaults,
    TerminationReason,
    TimeScheme,
)
from hopf_flow.models.curve import CurveGeometry, DiscreteCurve
from hopf_flow.models.report import EnergyReport


class FlowConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

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
    resample_every: int = Field(FlowDefaults.RESAMPLE_EVERY, ge=0, description="0 disables redistribution")
    max_steps: int = Field(FlowDefaults.MAX_STEPS, ge=1)
    t_max: float = Field(FlowDefaults.T_MAX, gt=0)
    kappa_tol: float = Field(FlowDefaults.KAPPA_TOL, gt=0)
    energy_gap_tol: float = Field(FlowDefaults.ENERGY_GAP_TOL, gt=0)
    gradient_tol: float = Field(FlowDefaults.GRADIENT_TOL, gt=0)
    kappa_ceiling: float = Field(FlowDefaults.KAPPA_CEILING, gt=0)
    regime_check: bool = True
    sample_every: int = Field(FlowDefaults.SAMPLE_EVERY, ge=1)

    @model_validator(mode="after")
    def _check_dt_range(self):
        if not self.dt_min <= self.dt <= self.dt_max:
            raise ValueError("dt must lie in [dt_min, dt_max]")
        return self


class StepStatistics(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt_used: float = 0.0
    next_dt: float
    velocity_sup: float = 0.0
    rejections: int = 0
    resample_events: int = 0
    constraint_error: float = 0.0
    steps: int = 0


class FlowState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float
    curve: DiscreteCurve
    geometry: CurveGeometry
    report: EnergyReport
    stats: StepStatistics


class FlowResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    trajectory: List[FlowState]
    reason: TerminationReason
    initial_energy: float
    reference_energy: float = Field(..., description="Discrete great-circle energy at the run's resolution")

    @property
    def final(self) -> FlowState:
        return self.trajectory[-1]


class ExponentialFit(BaseModel):
    rate: float
    intercept: float
    r_squared: float
    samples: int
