from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
import numpy as np
from hopf_flow.config import get_settings
from hopf_flow.constants.flow_constants import DifferentiationMethod
from hopf_flow.exceptions.geometry_exceptions import NonUnitInputError

settings = get_settings()


def frozen_array(value, ndim: int = None, trailing: int = None) -> np.ndarray:
    array = np.array(value, dtype=float, copy=True)
    if ndim is not None and array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-dimensional array, got shape {array.shape}")
    if trailing is not None and array.shape[-1] != trailing:
        raise ValueError(f"expected trailing dimension {trailing}, got shape {array.shape}")
    array.setflags(write=False)
    return array


class DiscreteCurve(BaseModel):
    """Closed curve on S² sampled at x_m = 2πm/N; row m holds the (1, j, k) coordinates of γ(x_m)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray
    orientation: int = Field(default=1, description="+1 traverses in increasing parameter, -1 reversed")

    @field_validator("nodes", mode="before")
    @classmethod
    def _freeze_nodes(cls, value):
        return frozen_array(value, ndim=2, trailing=3)

    @field_validator("orientation")
    @classmethod
    def _check_orientation(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        return value

    @model_validator(mode="after")
    def _check_unit(self):
        deviation = np.abs(np.linalg.norm(self.nodes, axis=1) - 1.0)
        if deviation.size and deviation.max() > settings.UNIT_TOLERANCE:
            raise NonUnitInputError(f"max node norm deviation {deviation.max():.3e}")
        return self

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def parameters(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.size) / self.size

    def reversed(self) -> "DiscreteCurve":
        return DiscreteCurve(nodes=self.nodes, orientation=-self.orientation)

    def with_nodes(self, nodes: np.ndarray) -> "DiscreteCurve":
        return DiscreteCurve(nodes=nodes, orientation=self.orientation)


class CurveGeometry(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    curve: DiscreteCurve
    method: DifferentiationMethod
    # d/dx, d²/dx², d³/dx³, d⁴/dx⁴ of the node sequence, shape (4, N, 3)
    derivatives: np.ndarray
    speed: np.ndarray
    arclength_weights: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    # full second arclength derivative of γ in ℝ³
    ambient_curvature: np.ndarray
    curvature_vector: np.ndarray
    kappa: np.ndarray
    kappa_s: np.ndarray
    kappa_ss: np.ndarray
    normal_derivatives: np.ndarray = Field(..., description="(∇⊥)^k κ⃗ for k = 1, 2, 3, shape (3, N, 3)")
    length: float

    @field_validator(
        "derivatives", "speed", "arclength_weights", "tangent", "normal", "ambient_curvature",
        "curvature_vector", "kappa", "kappa_s", "kappa_ss", "normal_derivatives",
        mode="before",
    )
    @classmethod
    def _freeze(cls, value):
        return frozen_array(value)

    @property
    def nodes(self) -> np.ndarray:
        return self.curve.nodes

    @property
    def size(self) -> int:
        return self.curve.size

    @property
    def orientation(self) -> int:
        return self.curve.orientation

    @property
    def step(self) -> float:
        return 2.0 * np.pi / self.size
