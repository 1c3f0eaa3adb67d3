from functools import lru_cache
from typing import Callable, List, Optional, Tuple
import numpy as np
from scipy.stats import linregress
from hopf_flow.constants.flow_constants import ENERGY_REGIME, DifferentiationMethod, TerminationReason
from hopf_flow.exceptions.flow_exceptions import (
    RegimeViolationError,
    ResampledBetweenSamplesError,
    StepFailureError,
)
from hopf_flow.exceptions.geometry_exceptions import DegenerateCurveError
from hopf_flow.interfaces.stepper_interface import ITimeStepper
from hopf_flow.models.curve import CurveGeometry, DiscreteCurve
from hopf_flow.models.flow import ExponentialFit, FlowConfig, FlowResult, FlowState, StepStatistics
from hopf_flow.models.report import EnergyReport
from hopf_flow.services.curve import geometry, normal_projection, resample_uniform_arclength, row_dot
from hopf_flow.services.differentiation import get_differentiator
from hopf_flow.services.energy import elastic_energy, energy_report, gradient
from hopf_flow.services.time_steppers import build_stepper, velocity
from hopf_flow.utils.logger import logger, log_error

__all__ = [
    "velocity", "initial_state", "step", "run", "reference_energy",
    "dissipation_residual", "curvature_evolution_residual", "exponential_rate_fit",
]

_TINY = 1e-14


@lru_cache(maxsize=32)
def reference_energy(nodes: int, method: DifferentiationMethod) -> float:
    """Discrete energy of the uniformly sampled equator at this resolution."""
    x = 2.0 * np.pi * np.arange(nodes) / nodes
    equator = DiscreteCurve(nodes=np.stack([np.cos(x), np.sin(x), np.zeros_like(x)], axis=1))
    return elastic_energy(geometry(equator, method))


def _state(t: float, curve: DiscreteCurve, geom: CurveGeometry, stats: StepStatistics,
           full: bool = False) -> FlowState:
    return FlowState(t=t, curve=curve, geometry=geom, report=energy_report(geom, check_embedding=full), stats=stats)


def initial_state(curve: DiscreteCurve, config: FlowConfig) -> FlowState:
    geom = geometry(curve, config.differentiation)
    return _state(0.0, curve, geom, StepStatistics(next_dt=config.dt), full=True)


def _velocity_sup(report: EnergyReport, geom: CurveGeometry) -> float:
    speeds = np.linalg.norm(report.gradient, axis=1) / (geom.kappa ** 2 + 1.0) ** 2
    return float(np.max(speeds))


def step(state: FlowState, config: FlowConfig, stepper: Optional[ITimeStepper] = None) -> FlowState:
    stepper = stepper or build_stepper(config)
    energy = state.report.energy
    allowance = config.energy_tolerance * max(1.0, energy)
    dt = state.stats.next_dt
    rejections = state.stats.rejections

    for attempt in range(config.max_halvings + 1):
        dt_try = stepper.admissible_dt(state.geometry, dt)
        try:
            raw = stepper.advance(state.geometry, dt_try)
            norms = np.linalg.norm(raw, axis=1)
            curve = state.curve.with_nodes(raw / norms[:, None])
            geom = geometry(curve, config.differentiation)
            new_energy = elastic_energy(geom)
        except DegenerateCurveError as e:
            reason, new_energy = str(e), None
        else:
            reason = None if new_energy <= energy + allowance else "energy increase"

        if reason is None:
            break
        rejections += 1
        logger.warning(
            "Step rejected",
            extra={"props": {"t": state.t, "dt": dt_try, "reason": reason, "attempt": attempt,
                             "energy": energy, "new_energy": new_energy}},
        )
        dt = dt_try / 2.0
    else:
        raise StepFailureError(state=state, details=f"t = {state.t}, last dt = {dt_try:.3e}")

    steps = state.stats.steps + 1
    resample_events = state.stats.resample_events
    if config.resample_every and steps % config.resample_every == 0:
        curve = resample_uniform_arclength(curve)
        geom = geometry(curve, config.differentiation)
        resample_events += 1

    report = energy_report(geom, check_embedding=False)
    stats = StepStatistics(
        dt_used=dt_try,
        next_dt=min(dt_try * config.dt_growth, config.dt_max),
        velocity_sup=_velocity_sup(report, geom),
        rejections=rejections,
        resample_events=resample_events,
        constraint_error=float(np.max(np.abs(norms - 1.0))),
        steps=steps,
    )
    return FlowState(t=state.t + dt_try, curve=curve, geometry=geom, report=report, stats=stats)


def _with_full_report(state: FlowState) -> FlowState:
    return state.model_copy(update={"report": energy_report(state.geometry, check_embedding=True)})


def _termination(state: FlowState, config: FlowConfig, reference: float) -> Optional[TerminationReason]:
    report = state.report
    if report.gradient_l2 < config.gradient_tol:
        return TerminationReason.STATIONARY
    if report.sup_kappa < config.kappa_tol and abs(report.energy - reference) < config.energy_gap_tol:
        return TerminationReason.GREAT_CIRCLE
    if report.sup_kappa > config.kappa_ceiling:
        return TerminationReason.SINGULARITY_SUSPECTED
    if state.stats.steps >= config.max_steps:
        return TerminationReason.MAX_STEPS
    if state.t >= config.t_max:
        return TerminationReason.MAX_TIME
    return None


@log_error(logger)
def run(curve: DiscreteCurve, config: FlowConfig, stepper: Optional[ITimeStepper] = None,
        on_sample: Optional[Callable[[FlowState], None]] = None) -> FlowResult:
    if curve.size != config.nodes:
        curve = resample_uniform_arclength(curve, config.nodes)
    state = initial_state(curve, config)
    initial = state.report.energy
    if initial >= ENERGY_REGIME:
        if config.regime_check:
            raise RegimeViolationError(f"E0 = {initial:.6f}")
        logger.warning("Flow started outside the regime E0 < 8", extra={"props": {"initial_energy": initial}})

    reference = reference_energy(curve.size, config.differentiation)
    stepper = stepper or build_stepper(config)
    trajectory: List[FlowState] = []

    def sample(current: FlowState) -> None:
        trajectory.append(current)
        if on_sample is not None:
            on_sample(current)

    sample(state)
    while True:
        reason = _termination(state, config, reference)
        if reason is not None:
            break
        try:
            state = step(state, config, stepper)
        except StepFailureError as e:
            raise StepFailureError(state=e.state, trajectory=trajectory, details=e.details) from e
        if state.stats.dt_used < config.dt_min:
            logger.warning("Time step underflow", extra={"props": {"t": state.t, "dt": state.stats.dt_used}})
            reason = TerminationReason.SINGULARITY_SUSPECTED
            break
        if state.stats.steps % config.sample_every == 0:
            state = _with_full_report(state)
            sample(state)

    if trajectory[-1] is not state:
        state = _with_full_report(state)
        sample(state)

    logger.info(
        "Flow terminated",
        extra={"props": {"reason": reason.value, "t": state.t, "steps": state.stats.steps,
                         "energy": state.report.energy, "sup_kappa": state.report.sup_kappa,
                         "rejections": state.stats.rejections}},
    )
    return FlowResult(trajectory=trajectory, reason=reason, initial_energy=initial, reference_energy=reference)


def dissipation_residual(trajectory: List[FlowState]) -> np.ndarray:
    """Relative gap between the centred rate of 𝔈 and −∫(κ²+1)⁻²|∇𝔈|² dμ at every interior sample."""
    if len(trajectory) < 3:
        raise ValueError("dissipation residual needs at least three samples")
    residuals = []
    for previous, current, following in zip(trajectory, trajectory[1:], trajectory[2:]):
        rate = (following.report.energy - previous.report.energy) / (following.t - previous.t)
        expected = -current.report.dissipation
        scale = max(abs(rate), abs(expected))
        residuals.append(0.0 if scale < _TINY else abs(rate - expected) / scale)
    return np.array(residuals)


def curvature_evolution_residual(trajectory: List[FlowState]) -> Tuple[np.ndarray, np.ndarray]:
    """Node-wise residuals of the curvature-vector and arclength-element evolution laws.

    Returns two arrays of shape (samples - 2, N): the curvature law and the dμ law.
    """
    if len(trajectory) < 3:
        raise ValueError("evolution residual needs at least three samples")
    curvature_rows, arclength_rows = [], []
    for previous, current, following in zip(trajectory, trajectory[1:], trajectory[2:]):
        if previous.stats.resample_events != following.stats.resample_events:
            raise ResampledBetweenSamplesError(f"between t = {previous.t} and t = {following.t}")
        if previous.curve.size != following.curve.size:
            raise ResampledBetweenSamplesError("node count changed")

        geom = current.geometry
        dt = following.t - previous.t
        differentiator = get_differentiator(geom.size, geom.method)
        scale = geom.orientation / geom.speed

        def d_s(values: np.ndarray) -> np.ndarray:
            return differentiator.derivative(values, 1) * scale.reshape((-1,) + (1,) * (values.ndim - 1))

        phi = gradient(geom) / ((geom.kappa ** 2 + 1.0) ** 2)[:, None]
        drift = row_dot((following.curve.nodes - previous.curve.nodes) / dt, geom.tangent)
        rate = (following.geometry.curvature_vector - previous.geometry.curvature_vector) / dt
        lhs = normal_projection(rate, geom.normal) - drift[:, None] * geom.normal_derivatives[0]

        coupling = row_dot(phi, geom.curvature_vector)
        laplacian = normal_projection(d_s(normal_projection(d_s(phi), geom.normal)), geom.normal)
        rhs = -(laplacian + coupling[:, None] * geom.curvature_vector + phi)
        curvature_rows.append(
            np.linalg.norm(lhs - rhs, axis=1) / max(float(np.max(np.linalg.norm(rhs, axis=1))), 1.0)
        )

        stretch = (following.geometry.speed - previous.geometry.speed) / (dt * geom.speed) - d_s(drift)
        arclength_rows.append(np.abs(stretch - coupling) / max(float(np.max(np.abs(coupling))), 1.0))
    return np.array(curvature_rows), np.array(arclength_rows)


def exponential_rate_fit(trajectory: List[FlowState], reference: float, floor: float = 1e-13) -> ExponentialFit:
    """Least-squares fit of log(𝔈 − 𝔈_ref) against t over the last decade of the energy gap."""
    times = np.array([state.t for state in trajectory])
    gaps = np.array([state.report.energy for state in trajectory]) - reference
    usable = gaps > floor
    times, log_gaps = times[usable], np.log(gaps[usable])
    if times.size < 3:
        raise ValueError("not enough samples above the energy-gap floor")
    tail = log_gaps <= log_gaps.min() + np.log(10.0)
    if tail.sum() < 5:
        tail = np.zeros_like(tail)
        tail[-min(5, tail.size):] = True
    fit = linregress(times[tail], log_gaps[tail])
    return ExponentialFit(rate=float(-fit.slope), intercept=float(fit.intercept),
                          r_squared=float(fit.rvalue ** 2), samples=int(tail.sum()))
