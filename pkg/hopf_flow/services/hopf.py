import math
from typing import Optional
import numpy as np
from hopf_flow.config import get_settings
from hopf_flow.exceptions.geometry_exceptions import (
    DegenerateMetricError,
    MeshCurveMismatchError,
    SeedOffFiberError,
    TooCoarseError,
)
from hopf_flow.models.curve import CurveGeometry, DiscreteCurve
from hopf_flow.models.hopf import (
    HopfTorusMesh,
    HorizontalLift,
    IdentityResidual,
    ResidualReport,
    SurfaceGeometry,
)
from hopf_flow.services.curve import geometry, row_dot
from hopf_flow.services.differentiation import TrigonometricInterpolant, get_differentiator
from hopf_flow.services.energy import elastic_energy, gradient, integrate, nominal_area
from hopf_flow.services.quat_sphere import (
    embed_s2,
    exp_i,
    fiber_seed,
    hopf_differential,
    hopf_map,
    lift_generator,
    normalize,
    onto_fiber,
    qconj,
    qmul,
    qtilde,
    wrap_angle,
)
from hopf_flow.services.time_steppers import velocity
from hopf_flow.utils.logger import logger, log_error

settings = get_settings()

SEED_TOLERANCE = 1e-8
FIBER_TOLERANCE = 1e-6
MIN_FIBER_RESOLUTION = 16
_UNIT_I = np.array([0.0, 1.0, 0.0, 0.0])


def _lift_rate(eta: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    return qmul(lift_generator(eta, tangent), eta)


def _untwisted_derivative(values: np.ndarray, phase: float, differentiator, order: int) -> np.ndarray:
    """x-derivatives of an equivariant field V(x + 2π) = e^{iδ}V(x) through the periodic V̂ = e^{−iωx}V."""
    omega = phase / (2.0 * math.pi)
    x = 2.0 * math.pi * np.arange(values.shape[0]) / values.shape[0]
    shape = (-1,) + (1,) * (values.ndim - 2) + (4,)
    twist = exp_i(omega * x).reshape(shape)
    untwisted = qmul(exp_i(-omega * x).reshape(shape), values)
    rotation = omega * _UNIT_I
    first = differentiator.derivative(untwisted, 1, axis=0)
    if order == 1:
        return qmul(twist, first + qmul(rotation, untwisted))
    second = differentiator.derivative(untwisted, 2, axis=0)
    return qmul(twist, second + 2.0 * qmul(rotation, first) + qmul(rotation, qmul(rotation, untwisted)))


@log_error(logger)
def horizontal_lift(curve: DiscreteCurve, seed=None, method=None) -> HorizontalLift:
    """Horizontal lift through seed by classical RK4 on the parameter grid, tangents from the trigonometric interpolant."""
    gamma = curve.nodes
    size = curve.size
    seed = fiber_seed(gamma[0]) if seed is None else np.asarray(
        seed.as_array() if hasattr(seed, "as_array") else seed, dtype=float)
    offset = float(np.linalg.norm(hopf_map(seed) - gamma[0]))
    if offset > SEED_TOLERANCE:
        raise SeedOffFiberError(f"|pi(q*) - gamma_0| = {offset:.3e}")

    h = 2.0 * math.pi / size
    x = curve.parameters
    interpolant = TrigonometricInterpolant(gamma)
    at_nodes = interpolant.evaluate(x, order=1)
    at_midpoints = interpolant.evaluate(x + 0.5 * h, order=1)
    at_next = np.roll(at_nodes, -1, axis=0)

    # Each step lands exactly on the next fiber, so η(end) = e^{iδ}·η(start) with no transverse defect at the seam.
    targets = np.roll(gamma, -1, axis=0)
    points = np.empty((size + 1, 4))
    points[0] = eta = onto_fiber(normalize(seed), gamma[0])
    for m in range(size):
        k1 = _lift_rate(eta, at_nodes[m])
        k2 = _lift_rate(eta + 0.5 * h * k1, at_midpoints[m])
        k3 = _lift_rate(eta + 0.5 * h * k2, at_midpoints[m])
        k4 = _lift_rate(eta + h * k3, at_next[m])
        eta = onto_fiber(eta + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), targets[m])
        points[m + 1] = eta

    phase = qmul(points[size], qconj(points[0]))
    forward = math.atan2(phase[1], phase[0])
    lifted = points[:size]

    derivative = _untwisted_derivative(lifted, forward, get_differentiator(size, method), order=1)
    vertical = row_dot(derivative, qmul(_UNIT_I, lifted))
    horizontality = float(np.max(np.abs(vertical)) / max(float(np.max(np.linalg.norm(derivative, axis=1))), 1e-300))
    fiber = float(np.max(np.linalg.norm(hopf_map(lifted) - gamma, axis=1)))

    logger.debug(
        "Horizontal lift integrated",
        extra={"props": {"nodes": size, "holonomy": forward, "fiber_residual": fiber,
                         "horizontality_residual": horizontality}},
    )
    return HorizontalLift(
        points=lifted,
        end_point=points[size],
        seed=seed,
        holonomy=float(wrap_angle(curve.orientation * forward)),
        curve_nodes=gamma,
        orientation=curve.orientation,
        fiber_residual=fiber,
        horizontality_residual=horizontality,
    )


def expected_holonomy(geom: CurveGeometry) -> float:
    """Holonomy predicted by the left-hand area, −A/2 mod 2π."""
    return float(wrap_angle(-0.5 * nominal_area(geom)))


def build_torus(lift: HorizontalLift, fiber_resolution: int) -> HopfTorusMesh:
    if fiber_resolution < MIN_FIBER_RESOLUTION:
        raise TooCoarseError(f"M = {fiber_resolution} < {MIN_FIBER_RESOLUTION}")
    phases = 2.0 * math.pi * np.arange(fiber_resolution) / fiber_resolution
    points = qmul(exp_i(phases)[None, :, :], lift.points[:, None, :])
    return HopfTorusMesh(points=points, phases=phases, lift=lift)


def _metric_inverse(metric: np.ndarray):
    det = metric[..., 0, 0] * metric[..., 1, 1] - metric[..., 0, 1] * metric[..., 1, 0]
    if det.min() <= 1e-12 * max(float(det.max()), 1e-300):
        raise DegenerateMetricError(f"min det g = {det.min():.3e}")
    inverse = np.empty_like(metric)
    inverse[..., 0, 0] = metric[..., 1, 1] / det
    inverse[..., 1, 1] = metric[..., 0, 0] / det
    inverse[..., 0, 1] = inverse[..., 1, 0] = -metric[..., 0, 1] / det
    return det, inverse


def _frame_normal(points: np.ndarray, d_x: np.ndarray, d_phi: np.ndarray) -> np.ndarray:
    """Unit vector of ℝ⁴ orthogonal to X, X_x and X_φ (cofactor expansion)."""
    frame = np.stack([points, d_x, d_phi], axis=-2)
    components = []
    for column in range(4):
        minor = np.delete(frame, column, axis=-1)
        components.append((-1.0) ** (column + 1) * np.linalg.det(minor))
    return normalize(np.stack(components, axis=-1))


def _pair(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    return np.stack([np.stack([a, b], axis=-1), np.stack([c, d], axis=-1)], axis=-2)


def _contract(inverse: np.ndarray, form: np.ndarray, other: np.ndarray) -> np.ndarray:
    """g^{ik} g^{jl} S_ij T_kl"""
    return np.einsum("...ik,...jl,...ij,...kl->...", inverse, inverse, form, other)


@log_error(logger)
def surface_geometry(mesh: HopfTorusMesh, method=None) -> SurfaceGeometry:
    size, fibers = mesh.shape
    if size < 64 or fibers < MIN_FIBER_RESOLUTION:
        raise TooCoarseError(f"mesh {size}x{fibers} below 64x{MIN_FIBER_RESOLUTION}")
    points = mesh.points
    along = get_differentiator(size, method)
    around = get_differentiator(fibers, method)
    phase = mesh.lift.parameter_holonomy

    d_x = _untwisted_derivative(points, phase, along, order=1)
    d_xx = _untwisted_derivative(points, phase, along, order=2)
    d_phi = around.derivative(points, 1, axis=1)
    d_phiphi = around.derivative(points, 2, axis=1)
    d_xphi = around.derivative(d_x, 1, axis=1)

    metric = _pair(row_dot(d_x, d_x), row_dot(d_x, d_phi), row_dot(d_phi, d_x), row_dot(d_phi, d_phi))
    det, inverse = _metric_inverse(metric)
    area_density = np.sqrt(det)

    normal = _frame_normal(points, d_x, d_phi)
    profile = geometry(DiscreteCurve(nodes=mesh.lift.curve_nodes, orientation=mesh.lift.orientation), method)
    reference = qmul(qtilde(qconj(points)), embed_s2(profile.normal)[:, None, :])
    normal = normal * np.where(row_dot(normal, reference) < 0.0, -1.0, 1.0)[..., None]

    second = _pair(row_dot(d_xx, normal), row_dot(d_xphi, normal), row_dot(d_xphi, normal), row_dot(d_phiphi, normal))
    mean = np.einsum("...ij,...ij->...", inverse, second)
    tracefree = second - 0.5 * metric * mean[..., None, None]
    tracefree_norm2 = _contract(inverse, tracefree, tracefree)
    concentration = _contract(inverse, second, second)

    def divergence_of_gradient(values: np.ndarray) -> np.ndarray:
        v_x = along.derivative(values, 1, axis=0)
        v_phi = around.derivative(values, 1, axis=1)
        flux_x = area_density * (inverse[..., 0, 0] * v_x + inverse[..., 0, 1] * v_phi)
        flux_phi = area_density * (inverse[..., 1, 0] * v_x + inverse[..., 1, 1] * v_phi)
        return (along.derivative(flux_x, 1, axis=0) + around.derivative(flux_phi, 1, axis=1)) / area_density

    normal_laplacian = divergence_of_gradient(mean)[..., None] * normal
    cubic = (tracefree_norm2 * mean)[..., None] * normal

    tangents = np.stack([d_x, d_phi], axis=-2)
    hessian = np.stack([np.stack([d_xx, d_xphi], axis=-2), np.stack([d_xphi, d_phiphi], axis=-2)], axis=-3)
    tangential = np.einsum("...ijc,...kc,...kl,...ld->...ijd", hessian, tangents, inverse, tangents)
    second_r4 = hessian - tangential

    g_xx, g_xphi = metric[..., 0, 0], metric[..., 0, 1]
    lift_speed = np.sqrt(g_xx)
    fiber_part = np.sqrt(metric[..., 1, 1] - g_xphi ** 2 / g_xx)
    off_diagonal = (second[..., 0, 1] - g_xphi / g_xx * second[..., 0, 0]) / (lift_speed * fiber_part)

    cell = (2.0 * math.pi / size) * (2.0 * math.pi / fibers)
    weights = area_density * cell
    return SurfaceGeometry(
        metric=metric,
        area_density=area_density,
        unit_normal=normal,
        second_form=second,
        mean_curvature=mean,
        mean_curvature_vector=mean[..., None] * normal,
        tracefree_form=tracefree,
        tracefree_norm2=tracefree_norm2,
        normal_laplacian=normal_laplacian,
        cubic_term=cubic,
        willmore_gradient=0.5 * (normal_laplacian + cubic),
        second_form_r4=second_r4,
        mean_curvature_r4=np.einsum("...ij,...ijd->...d", inverse, second_r4),
        concentration=concentration,
        off_diagonal=off_diagonal,
        area=float(np.sum(weights)),
        willmore_energy=float(np.sum((1.0 + 0.25 * mean ** 2) * weights)),
        concentration_integral=float(np.sum(concentration * weights)),
    )


def _residual(name: str, lhs, rhs) -> IdentityResidual:
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    return IdentityResidual(
        name=name,
        residual=float(np.max(np.abs(lhs - rhs)) / max(float(np.max(np.abs(rhs))), 1.0)),
        lhs_norm=float(np.max(np.abs(lhs))),
        rhs_norm=float(np.max(np.abs(rhs))),
    )


def _check_match(mesh: HopfTorusMesh, geom: CurveGeometry) -> None:
    if mesh.shape[0] != geom.size:
        raise MeshCurveMismatchError(f"mesh has {mesh.shape[0]} rows, curve has {geom.size} nodes")
    if np.max(np.abs(mesh.lift.curve_nodes - geom.nodes)) > 1e-12:
        raise MeshCurveMismatchError("lift was integrated along a different curve")
    drift = float(np.max(np.linalg.norm(hopf_map(mesh.points) - geom.nodes[:, None, :], axis=-1)))
    if drift > FIBER_TOLERANCE:
        raise MeshCurveMismatchError(f"fibers miss the curve by {drift:.3e}")


@log_error(logger)
def verify_hopf_identities(mesh: HopfTorusMesh, geom: CurveGeometry,
                           surface: Optional[SurfaceGeometry] = None) -> ResidualReport:
    _check_match(mesh, geom)
    surface = surface or surface_geometry(mesh, geom.method)
    normal = surface.unit_normal
    kappa = geom.kappa[:, None]
    kappa_ss = geom.kappa_ss[:, None]
    energy = elastic_energy(geom)

    squared = np.sum(surface.willmore_gradient ** 2, axis=-1)
    surface_dissipation = float(np.sum(squared / surface.tracefree_norm2 ** 2 * surface.area_density)
                                * (2.0 * math.pi / mesh.shape[0]) * (2.0 * math.pi / mesh.shape[1]))
    grad = gradient(geom)
    curve_dissipation = integrate(geom, np.sum(grad ** 2, axis=1) / (geom.kappa ** 2 + 1.0) ** 2)

    expected_r4 = (surface.second_form[..., None] * normal[..., None, None, :]
                   - surface.metric[..., None] * mesh.points[..., None, None, :])
    residuals = [
        _residual("mean_curvature", surface.mean_curvature_vector, (2.0 * kappa)[..., None] * normal),
        _residual("tracefree_norm", surface.tracefree_norm2, 2.0 * (kappa ** 2 + 1.0) * np.ones_like(surface.tracefree_norm2)),
        _residual("cubic_term", surface.cubic_term, (4.0 * (kappa ** 3 + kappa))[..., None] * normal),
        _residual("normal_laplacian", surface.normal_laplacian, (8.0 * kappa_ss)[..., None] * normal),
        _residual("off_diagonal", np.abs(surface.off_diagonal), np.ones_like(surface.off_diagonal)),
        _residual("willmore_gradient", surface.willmore_gradient,
                  (2.0 * (2.0 * kappa_ss + kappa ** 3 + kappa))[..., None] * normal),
        _residual("willmore_energy", surface.willmore_energy, math.pi * energy),
        _residual("dissipation", surface_dissipation, math.pi * curve_dissipation),
        _residual("ambient_second_form", surface.second_form_r4, expected_r4),
        _residual("ambient_mean_curvature", surface.mean_curvature_r4,
                  surface.mean_curvature_vector - 2.0 * mesh.points),
    ]
    return ResidualReport(
        title="hopf_identities",
        resolution=list(mesh.shape),
        residuals=residuals,
        values={
            "willmore_energy": surface.willmore_energy,
            "pi_elastic_energy": math.pi * energy,
            "area": surface.area,
            "holonomy": mesh.holonomy,
            "expected_holonomy": expected_holonomy(geom),
            "holonomy_error": float(abs(wrap_angle(mesh.holonomy - expected_holonomy(geom)))),
            "tracefree_norm_mean": float(np.mean(surface.tracefree_norm2)),
            "mean_curvature_sup": float(np.max(np.abs(surface.mean_curvature))),
            "off_diagonal_mean": float(np.mean(np.abs(surface.off_diagonal))),
            "concentration_integral": surface.concentration_integral,
            "fiber_residual": mesh.lift.fiber_residual,
            "horizontality_residual": mesh.lift.horizontality_residual,
        },
    )


@log_error(logger)
def verify_flow_correspondence(mesh: HopfTorusMesh, geom: CurveGeometry,
                               surface: Optional[SurfaceGeometry] = None) -> ResidualReport:
    _check_match(mesh, geom)
    surface = surface or surface_geometry(mesh, geom.method)
    points = mesh.points
    pushed_gradient = hopf_differential(points, surface.willmore_gradient)
    surface_velocity = -surface.willmore_gradient / (surface.tracefree_norm2 ** 2)[..., None]
    pushed_velocity = hopf_differential(points, surface_velocity)
    curve_velocity = velocity(geom)
    return ResidualReport(
        title="flow_correspondence",
        resolution=list(mesh.shape),
        residuals=[
            _residual("hopf_willmore", pushed_gradient, 4.0 * gradient(geom)[:, None, :] * np.ones_like(pushed_gradient)),
            _residual("pushed_velocity", pushed_velocity, curve_velocity[:, None, :] * np.ones_like(pushed_velocity)),
        ],
        values={
            "pushed_velocity_sup": float(np.max(np.linalg.norm(pushed_velocity, axis=-1))),
            "curve_velocity_sup": float(np.max(np.linalg.norm(curve_velocity, axis=-1))),
        },
    )
