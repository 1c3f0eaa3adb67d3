from typing import Optional, Tuple
import numpy as np
from hopf_flow.config import get_settings
from hopf_flow.constants.flow_constants import DifferentiationMethod
from hopf_flow.exceptions.geometry_exceptions import DegenerateCurveError
from hopf_flow.models.curve import CurveGeometry, DiscreteCurve
from hopf_flow.services.differentiation import TrigonometricInterpolant, get_differentiator
from hopf_flow.services.quat_sphere import normalize
from hopf_flow.utils.logger import logger, log_error

settings = get_settings()

_SPEED_FLOOR = 1e-12
_CROSSING_TOLERANCE = 1e-12
_RESAMPLE_ITERATIONS = 60


def row_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", a, b)


def normal_projection(values: np.ndarray, normal: np.ndarray) -> np.ndarray:
    return row_dot(values, normal)[..., None] * normal


def differentiate(curve: DiscreteCurve, order: int, method=None) -> np.ndarray:
    return get_differentiator(curve.size, method).derivative(curve.nodes, order)


def chord_lengths(nodes: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)


def check_regular(curve: DiscreteCurve) -> None:
    chords = chord_lengths(curve.nodes)
    if chords.min() <= 0.0:
        raise DegenerateCurveError(f"coincident nodes at index {int(np.argmin(chords))}")
    ratio = chords.max() / chords.min()
    if ratio > settings.QUASI_UNIFORM_RATIO:
        logger.warning(
            "Curve is not quasi-uniform",
            extra={"props": {"chord_ratio": ratio, "threshold": settings.QUASI_UNIFORM_RATIO}},
        )


def geometry(curve: DiscreteCurve, method=None) -> CurveGeometry:
    check_regular(curve)
    method = DifferentiationMethod(method or settings.DIFFERENTIATION)
    differentiator = get_differentiator(curve.size, method)
    gamma = curve.nodes
    derivatives = np.stack([differentiator.derivative(gamma, order) for order in range(1, 5)])
    first, second = derivatives[0], derivatives[1]

    speed = np.linalg.norm(first, axis=1)
    if speed.min() < _SPEED_FLOOR * max(speed.max(), 1.0):
        raise DegenerateCurveError(f"speed {speed.min():.3e} at index {int(np.argmin(speed))}")

    h = 2.0 * np.pi / curve.size
    orientation = curve.orientation
    unit = first / speed[:, None]
    tangent = orientation * unit
    ambient = (second - row_dot(second, unit)[:, None] * unit) / speed[:, None] ** 2
    curvature_vector = ambient - row_dot(gamma, ambient)[:, None] * gamma
    normal = normalize(np.cross(gamma, tangent))
    kappa = row_dot(curvature_vector, normal)

    def d_s(values: np.ndarray) -> np.ndarray:
        scale = orientation / speed
        return differentiator.derivative(values, 1) * scale.reshape((-1,) + (1,) * (values.ndim - 1))

    normal_derivatives = []
    field = curvature_vector
    for _ in range(3):
        field = normal_projection(d_s(field), normal)
        normal_derivatives.append(field)
    kappa_s = d_s(kappa)

    return CurveGeometry(
        curve=curve,
        method=method,
        derivatives=derivatives,
        speed=speed,
        arclength_weights=speed * h,
        tangent=tangent,
        normal=normal,
        ambient_curvature=ambient,
        curvature_vector=curvature_vector,
        kappa=kappa,
        kappa_s=kappa_s,
        kappa_ss=d_s(kappa_s),
        normal_derivatives=np.stack(normal_derivatives),
        length=float(np.sum(speed) * h),
    )


def is_embedded(curve: DiscreteCurve) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Pairwise test of non-adjacent geodesic segments γ_m γ_{m+1}; returns the first crossing pair."""
    start = curve.nodes
    end = np.roll(start, -1, axis=0)
    size = curve.size
    planes = np.cross(start, end)

    lines = np.cross(planes[:, None, :], planes[None, :, :])
    line_norm = np.linalg.norm(lines, axis=-1)
    plane_norm = np.linalg.norm(planes, axis=-1)
    transversal = line_norm > 1e-14 * np.outer(plane_norm, plane_norm)
    points = lines / np.where(transversal, line_norm, 1.0)[..., None]

    index = np.arange(size)
    gap = np.abs(index[:, None] - index[None, :]) % size
    candidates = transversal & (gap > 1) & (gap < size - 1) & (index[:, None] < index[None, :])

    def on_arc(p: np.ndarray, a: np.ndarray, b: np.ndarray, plane: np.ndarray) -> np.ndarray:
        scale = _CROSSING_TOLERANCE * row_dot(plane, plane)
        return (row_dot(np.cross(a, p), plane) >= -scale) & (row_dot(np.cross(p, b), plane) >= -scale)

    crossing = np.zeros_like(candidates)
    for sign in (1.0, -1.0):
        p = sign * points
        on_first = on_arc(p, start[:, None, :], end[:, None, :], planes[:, None, :])
        on_second = on_arc(p, start[None, :, :], end[None, :, :], planes[None, :, :])
        crossing |= candidates & on_first & on_second

    hits = np.argwhere(crossing)
    if hits.size == 0:
        return True, None
    first, second = hits[0]
    return False, (int(first), int(second))


@log_error(logger)
def resample_uniform_arclength(curve: DiscreteCurve, nodes: Optional[int] = None) -> DiscreteCurve:
    """Re-sample the trigonometric interpolant of γ at equal arclength, keeping γ(0) as first node."""
    target = nodes or curve.size
    shape = TrigonometricInterpolant(curve.nodes)
    speed_samples = np.linalg.norm(shape.evaluate(curve.parameters, order=1), axis=1)
    if speed_samples.min() <= _SPEED_FLOOR:
        raise DegenerateCurveError("speed vanishes before resampling")
    speed = TrigonometricInterpolant(speed_samples)
    length = 2.0 * np.pi * float(np.mean(speed_samples))

    arclength = length * np.arange(target) / target
    x = 2.0 * np.pi * np.arange(target) / target
    for _ in range(_RESAMPLE_ITERATIONS):
        rate = speed.evaluate(x)
        if rate.min() <= 0.0:
            raise DegenerateCurveError("interpolated speed is not positive")
        correction = (speed.antiderivative(x) - arclength) / rate
        x = x - correction
        if np.max(np.abs(correction)) < 1e-15 * 2.0 * np.pi:
            break
    x[0] = 0.0

    logger.debug("Resampled curve", extra={"props": {"nodes": target, "length": length}})
    return DiscreteCurve(nodes=normalize(shape.evaluate(x)), orientation=curve.orientation)
