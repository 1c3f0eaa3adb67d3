import math
from typing import List
import numpy as np
from hopf_flow.config import get_settings
from hopf_flow.constants.flow_constants import ENERGY_REGIME, TWO_PI, FindingSeverity
from hopf_flow.exceptions.geometry_exceptions import NotEmbeddedError
from hopf_flow.models.curve import CurveGeometry
from hopf_flow.models.report import BoundFinding, EnergyReport
from hopf_flow.services.curve import row_dot, is_embedded, normal_projection
from hopf_flow.utils.logger import logger, log_error

settings = get_settings()


def integrate(geom: CurveGeometry, density: np.ndarray) -> float:
    return float(np.sum(density * geom.arclength_weights))


def elastic_energy(geom: CurveGeometry) -> float:
    return integrate(geom, 1.0 + geom.kappa ** 2)


def extrinsic_energy(geom: CurveGeometry) -> float:
    return integrate(geom, np.sum(geom.ambient_curvature ** 2, axis=1))


def gradient(geom: CurveGeometry) -> np.ndarray:
    """∇𝔈 = 2(∇⊥)²κ⃗ + |κ⃗|²κ⃗ + κ⃗ in the covariant form."""
    curvature = geom.curvature_vector
    squared = np.sum(curvature ** 2, axis=1)[:, None]
    return 2.0 * geom.normal_derivatives[1] + squared * curvature + curvature


def fourth_arclength_derivative(geom: CurveGeometry):
    """Coordinate expansion of ∂ₛ²γ and ∂ₛ⁴γ in the parameter derivatives of γ, w = 1/|γ′|."""
    d1, d2, d3, d4 = geom.derivatives
    sigma = geom.speed
    a = row_dot(d1, d2)
    b = row_dot(d2, d2) + row_dot(d1, d3)
    b_prime = 3.0 * row_dot(d2, d3) + row_dot(d1, d4)

    sigma_1 = a / sigma
    sigma_2 = b / sigma - a ** 2 / sigma ** 3
    sigma_3 = b_prime / sigma - 3.0 * a * b / sigma ** 3 + 3.0 * a ** 3 / sigma ** 5

    w = 1.0 / sigma
    w_1 = -sigma_1 / sigma ** 2
    w_2 = -sigma_2 / sigma ** 2 + 2.0 * sigma_1 ** 2 / sigma ** 3
    w_3 = -sigma_3 / sigma ** 2 + 6.0 * sigma_1 * sigma_2 / sigma ** 3 - 6.0 * sigma_1 ** 3 / sigma ** 4

    second = (w ** 2)[:, None] * d2 + (w * w_1)[:, None] * d1
    fourth = (
        (w ** 4)[:, None] * d4
        + (6.0 * w ** 3 * w_1)[:, None] * d3
        + (7.0 * w ** 2 * w_1 ** 2 + 4.0 * w ** 3 * w_2)[:, None] * d2
        + (w * w_1 ** 3 + 4.0 * w ** 2 * w_1 * w_2 + w ** 3 * w_3)[:, None] * d1
    )
    return second, fourth


def gradient_expanded(geom: CurveGeometry) -> np.ndarray:
    gamma = geom.nodes
    second, fourth = fourth_arclength_derivative(geom)
    curvature = second - row_dot(gamma, second)[:, None] * gamma
    squared = np.sum(curvature ** 2, axis=1)[:, None]
    normal_second = normal_projection(fourth, geom.normal) + np.sum(second ** 2, axis=1)[:, None] * curvature
    return 2.0 * normal_second + squared * curvature + curvature


def relative_residual(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.max(np.abs(lhs - rhs)) / max(float(np.max(np.abs(rhs))), 1.0))


def gradient_residual(geom: CurveGeometry) -> float:
    return relative_residual(gradient(geom), gradient_expanded(geom))


def nominal_area(geom: CurveGeometry) -> float:
    return TWO_PI - integrate(geom, geom.kappa)


def enclosed_area(geom: CurveGeometry) -> float:
    embedded, crossing = is_embedded(geom.curve)
    if not embedded:
        raise NotEmbeddedError(f"segments {crossing} cross")
    return nominal_area(geom)


def dissipation_density(geom: CurveGeometry, grad: np.ndarray = None) -> np.ndarray:
    grad = gradient(geom) if grad is None else grad
    return np.sum(grad ** 2, axis=1) / (geom.kappa ** 2 + 1.0) ** 2


@log_error(logger)
def energy_report(geom: CurveGeometry, check_embedding: bool = True) -> EnergyReport:
    grad = gradient(geom)
    density = dissipation_density(geom, grad)
    area, nominal, embedded, crossing = nominal_area(geom), True, None, None
    if check_embedding:
        embedded, crossing = is_embedded(geom.curve)
        nominal = not embedded
    return EnergyReport(
        energy=elastic_energy(geom),
        length=geom.length,
        total_curvature=integrate(geom, geom.kappa),
        abs_total_curvature=integrate(geom, np.abs(geom.kappa)),
        curvature_l2=integrate(geom, geom.kappa ** 2),
        extrinsic_energy=extrinsic_energy(geom),
        area=area,
        area_nominal=nominal,
        embedded=embedded,
        crossing=crossing,
        sup_kappa=float(np.max(np.abs(geom.kappa))),
        gradient=grad,
        dissipation_density=density,
        gradient_l2=math.sqrt(integrate(geom, np.sum(grad ** 2, axis=1))),
        dissipation=integrate(geom, density),
        gradient_residual=relative_residual(grad, gradient_expanded(geom)),
    )


def _finding(name: str, value: float, bound: float, passed: bool, message: str,
             severity: FindingSeverity = FindingSeverity.ERROR) -> BoundFinding:
    return BoundFinding(name=name, passed=bool(passed), severity=severity, value=value, bound=bound, message=message)


def check_bounds(report: EnergyReport, initial_energy: float) -> List[BoundFinding]:
    slack = settings.BOUND_SLACK
    relative = settings.BOUND_RELATIVE_SLACK
    energy, length = report.energy, report.length
    findings = [
        _finding("length_le_initial_energy", length, initial_energy,
                 length <= initial_energy + slack, "L <= E0"),
        _finding("curvature_l2_le_initial_energy", report.curvature_l2, initial_energy,
                 report.curvature_l2 <= initial_energy + slack, "int kappa^2 <= E0"),
        _finding("energy_le_initial_energy", energy, initial_energy,
                 energy <= initial_energy + slack * max(1.0, initial_energy), "E <= E0"),
    ]

    lower = min(math.pi, 3.0 * math.pi ** 2 / energy)
    findings.append(_finding("length_lower_bound", length, lower, length >= lower - slack,
                             "L >= min(pi, 3 pi^2 / E)"))

    teufel = 4.0 * math.pi ** 2 - length ** 2
    findings.append(_finding("total_curvature_lower_bound", report.abs_total_curvature ** 2, teufel,
                             report.abs_total_curvature ** 2 >= teufel - relative * 4.0 * math.pi ** 2,
                             "(int |kappa|)^2 >= 4 pi^2 - L^2"))

    if initial_energy < ENERGY_REGIME:
        findings.append(_finding("length_ge_pi", length, math.pi, length >= math.pi - slack, "L >= pi"))
        low, high = 2.0 * (math.pi - 2.0), 2.0 * (math.pi + 2.0)
        if report.area is None or report.area_nominal:
            findings.append(_finding("area_bounds", float("nan"), low, False,
                                     "area undefined for a non-embedded curve"))
        else:
            findings.append(_finding("area_bounds", report.area, low,
                                     low - slack < report.area < high + slack,
                                     "2(pi - 2) < A < 2(pi + 2)"))
    else:
        logger.warning("Initial energy outside the regime E0 < 8",
                       extra={"props": {"initial_energy": initial_energy}})
        findings.append(_finding("energy_regime", initial_energy, ENERGY_REGIME, False,
                                 "E0 >= 8: embeddedness and area bounds not guaranteed",
                                 severity=FindingSeverity.WARNING))
    return findings
