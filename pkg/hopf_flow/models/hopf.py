from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Dict, List
import numpy as np
from hopf_flow.models.curve import frozen_array


class HorizontalLift(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray = Field(..., description="η(x_m), shape (N, 4)")
    end_point: np.ndarray = Field(..., description="η after one full period")
    seed: np.ndarray
    holonomy: float = Field(..., description="δ in (−π, π] with η(end) = e^{iδ}·η(start) in the traversal sense")
    curve_nodes: np.ndarray
    orientation: int = 1
    fiber_residual: float
    horizontality_residual: float

    @field_validator("points", "end_point", "seed", "curve_nodes", mode="before")
    @classmethod
    def _freeze(cls, value):
        return frozen_array(value)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def parameter_holonomy(self) -> float:
        """Phase accumulated along increasing parameter, which is how points are stored."""
        return self.orientation * self.holonomy


class HopfTorusMesh(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray = Field(..., description="X(x_m, φ_n) = e^{iφ_n}·η(x_m), shape (N, M, 4)")
    phases: np.ndarray
    lift: HorizontalLift

    @field_validator("points", "phases", mode="before")
    @classmethod
    def _freeze(cls, value):
        return frozen_array(value)

    @property
    def shape(self):
        return self.points.shape[:2]

    @property
    def holonomy(self) -> float:
        return self.lift.holonomy


class SurfaceGeometry(BaseModel):
    """Discrete differential geometry of a Hopf torus mesh; tensors are stored per grid point in (x, φ) coordinates."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    metric: np.ndarray
    area_density: np.ndarray
    unit_normal: np.ndarray
    second_form: np.ndarray
    mean_curvature: np.ndarray = Field(..., description="Scalar H = g^{ij}h_ij along the unit normal")
    mean_curvature_vector: np.ndarray
    tracefree_form: np.ndarray
    tracefree_norm2: np.ndarray
    normal_laplacian: np.ndarray
    cubic_term: np.ndarray
    willmore_gradient: np.ndarray
    second_form_r4: np.ndarray
    mean_curvature_r4: np.ndarray
    concentration: np.ndarray = Field(..., description="|A|² density")
    off_diagonal: np.ndarray = Field(..., description="A(e_1, e_2) in the orthonormal (lift, fiber) frame")
    area: float
    willmore_energy: float
    concentration_integral: float

    @field_validator(
        "metric", "area_density", "unit_normal", "second_form", "mean_curvature",
        "mean_curvature_vector", "tracefree_form", "tracefree_norm2", "normal_laplacian",
        "cubic_term", "willmore_gradient", "second_form_r4", "mean_curvature_r4",
        "concentration", "off_diagonal",
        mode="before",
    )
    @classmethod
    def _freeze(cls, value):
        return frozen_array(value)


class IdentityResidual(BaseModel):
    name: str
    residual: float
    lhs_norm: float
    rhs_norm: float


class ResidualReport(BaseModel):
    title: str
    resolution: List[int]
    residuals: List[IdentityResidual] = Field(default_factory=list)
    values: Dict[str, float] = Field(default_factory=dict)

    def residual(self, name: str) -> float:
        for item in self.residuals:
            if item.name == name:
                return item.residual
        raise KeyError(name)

    @property
    def max_residual(self) -> float:
        return max((item.residual for item in self.residuals), default=0.0)
