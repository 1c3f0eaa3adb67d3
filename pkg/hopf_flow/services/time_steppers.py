import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from hopf_flow.constants.flow_constants import TimeScheme
from hopf_flow.interfaces.stepper_interface import ITimeStepper
from hopf_flow.models.curve import CurveGeometry
from hopf_flow.models.flow import FlowConfig
from hopf_flow.services.curve import geometry
from hopf_flow.services.differentiation import get_differentiator, spectral_radius
from hopf_flow.services.energy import gradient
from hopf_flow.services.quat_sphere import normalize

# Extent of the RK4 stability region along the negative real axis
RK4_STABILITY = 2.785


def velocity(geom: CurveGeometry) -> np.ndarray:
    """V = −(κ² + 1)⁻² ∇𝔈"""
    return -gradient(geom) / ((geom.kappa ** 2 + 1.0) ** 2)[:, None]


def classical_velocity(geom: CurveGeometry) -> np.ndarray:
    return -gradient(geom)


class ExplicitRK4Stepper(ITimeStepper):
    def __init__(self, cfl: float, method=None):
        self.cfl = cfl
        self.method = method

    def admissible_dt(self, geom: CurveGeometry, dt: float) -> float:
        differentiator = get_differentiator(geom.size, geom.method)
        stiffness = spectral_radius(differentiator, 4) * geom.step ** 4
        h_min = float(np.min(geom.arclength_weights))
        factor = float(np.min((geom.kappa ** 2 + 1.0) ** 2))
        bound = self.cfl * RK4_STABILITY * h_min ** 4 * factor / (2.0 * stiffness)
        return min(dt, bound)

    def _rate(self, geom: CurveGeometry, nodes: np.ndarray) -> np.ndarray:
        return velocity(geometry(geom.curve.with_nodes(normalize(nodes)), geom.method))

    def advance(self, geom: CurveGeometry, dt: float) -> np.ndarray:
        start = geom.nodes
        k1 = velocity(geom)
        k2 = self._rate(geom, start + 0.5 * dt * k1)
        k3 = self._rate(geom, start + 0.5 * dt * k2)
        k4 = self._rate(geom, start + dt * k3)
        return start + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class IMEXStepper(ITimeStepper):
    """Linearly implicit Euler: the frozen leading term −2(κ²+1)⁻²σ⁻⁴∂ₓ⁴ is implicit, the rest explicit."""

    def admissible_dt(self, geom: CurveGeometry, dt: float) -> float:
        return dt

    def advance(self, geom: CurveGeometry, dt: float) -> np.ndarray:
        differentiator = get_differentiator(geom.size, geom.method)
        fourth = differentiator.matrix(4)
        coefficient = 2.0 / ((geom.kappa ** 2 + 1.0) ** 2 * geom.speed ** 4)
        start = geom.nodes
        stabilized = start + dt * (velocity(geom) + coefficient[:, None] * (fourth @ start))
        if sp.issparse(fourth):
            system = sp.identity(geom.size, format="csc") + dt * sp.diags(coefficient) @ fourth
            return splu(system.tocsc()).solve(stabilized)
        system = np.eye(geom.size) + dt * coefficient[:, None] * fourth
        return scipy.linalg.lu_solve(scipy.linalg.lu_factor(system), stabilized)


def build_stepper(config: FlowConfig) -> ITimeStepper:
    if config.scheme == TimeScheme.EXPLICIT_RK4:
        return ExplicitRK4Stepper(config.cfl, config.differentiation)
    return IMEXStepper()
