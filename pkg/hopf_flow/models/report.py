from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Optional, Tuple
import numpy as np
from hopf_flow.constants.flow_constants import FindingSeverity
from hopf_flow.models.curve import frozen_array


class EnergyReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    energy: float = Field(..., description="Elastic energy ∫ 1 + κ² dμ")
    length: float
    total_curvature: float = Field(..., description="Signed ∫ κ dμ")
    abs_total_curvature: float
    curvature_l2: float = Field(..., description="∫ κ² dμ")
    extrinsic_energy: float
    area: Optional[float] = Field(None, description="Left-hand area; None when undefined")
    area_nominal: bool = Field(False, description="True when area is the raw 2π − ∫κ dμ of a non-embedded curve")
    embedded: Optional[bool] = None
    crossing: Optional[Tuple[int, int]] = None
    sup_kappa: float
    gradient: np.ndarray
    dissipation_density: np.ndarray
    gradient_l2: float
    dissipation: float
    gradient_residual: float = Field(..., description="Mutual residual of the covariant and expanded gradient paths")

    @field_validator("gradient", "dissipation_density", mode="before")
    @classmethod
    def _freeze(cls, value):
        return frozen_array(value)


class BoundFinding(BaseModel):
    name: str
    passed: bool
    severity: FindingSeverity = FindingSeverity.ERROR
    value: float
    bound: float
    message: str = ""
