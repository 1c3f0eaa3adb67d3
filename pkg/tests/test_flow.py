import math
from types import SimpleNamespace
import numpy as np
import pytest
from hopf_flow.constants.flow_constants import TerminationReason, TimeScheme
from hopf_flow.exceptions.flow_exceptions import RegimeViolationError, ResampledBetweenSamplesError, StepFailureError
from hopf_flow.interfaces.stepper_interface import ITimeStepper
from hopf_flow.models.flow import FlowConfig
from hopf_flow.services.curve import geometry
from hopf_flow.services.curve_families import latitude_circle, perturbed_great_circle
from hopf_flow.services.flow import (
    curvature_evolution_residual,
    dissipation_residual,
    exponential_rate_fit,
    initial_state,
    reference_energy,
    run,
    step,
)
from hopf_flow.services.quat_sphere import normalize, rotation_matrix
from hopf_flow.services.time_steppers import ExplicitRK4Stepper, IMEXStepper, build_stepper, velocity


class RoughStepper(ITimeStepper):
    """Adds a fixed high-frequency ripple regardless of dt, so every attempt raises the energy."""

    def admissible_dt(self, geom, dt):
        return dt

    def advance(self, geom, dt):
        x = geom.curve.parameters
        return geom.nodes + 0.05 * np.sin(11 * x)[:, None] * geom.normal


def test_great_circle_is_stationary(equator):
    result = run(equator, FlowConfig())
    assert result.reason in (TerminationReason.STATIONARY, TerminationReason.GREAT_CIRCLE)
    assert len(result.trajectory) == 1
    assert result.final.report.energy == pytest.approx(reference_energy(256, "stencil"))


def test_velocity_of_latitude_circle_points_to_the_equator(latitude):
    geom = geometry(latitude)
    # north cap on the left, so the normal points north and the flow moves south
    assert np.all(velocity(geom)[:, 2] < 0.0)


@pytest.mark.parametrize("scheme", [TimeScheme.IMEX, TimeScheme.EXPLICIT_RK4])
def test_single_step_decreases_energy(perturbed, scheme):
    config = FlowConfig(scheme=scheme, dt=1e-5)
    state = initial_state(perturbed, config)
    following = step(state, config)
    assert following.report.energy < state.report.energy
    assert following.stats.steps == 1
    assert following.stats.constraint_error < 1e-6
    np.testing.assert_allclose(np.linalg.norm(following.curve.nodes, axis=1), 1.0, atol=1e-12)


def test_build_stepper_follows_scheme():
    assert isinstance(build_stepper(FlowConfig()), IMEXStepper)
    assert isinstance(build_stepper(FlowConfig(scheme=TimeScheme.EXPLICIT_RK4)), ExplicitRK4Stepper)


def test_rk4_clamps_dt_to_stability_bound(perturbed):
    stepper = ExplicitRK4Stepper(0.5)
    geom = geometry(perturbed)
    bound = stepper.admissible_dt(geom, 1.0)
    assert 0.0 < bound < 1e-4
    assert stepper.admissible_dt(geom, bound / 10.0) == bound / 10.0


def test_step_failure_after_max_halvings(perturbed):
    config = FlowConfig(max_halvings=3)
    state = initial_state(perturbed, config)
    with pytest.raises(StepFailureError) as excinfo:
        step(state, config, RoughStepper())
    assert excinfo.value.state is state


def test_run_reports_trajectory_on_step_failure(perturbed):
    with pytest.raises(StepFailureError) as excinfo:
        run(perturbed, FlowConfig(max_halvings=2), stepper=RoughStepper())
    assert len(excinfo.value.trajectory) == 1
    assert excinfo.value.state.stats.steps == 0


def test_high_energy_start_is_refused():
    with pytest.raises(RegimeViolationError):
        run(latitude_circle(0.5, 256), FlowConfig())


def test_high_energy_start_runs_when_check_disabled():
    result = run(latitude_circle(0.5, 256), FlowConfig(regime_check=False, max_steps=3))
    assert result.reason == TerminationReason.MAX_STEPS
    assert result.final.report.energy < result.initial_energy


def test_run_resamples_to_configured_nodes(latitude):
    result = run(latitude, FlowConfig(nodes=128, max_steps=1))
    assert result.final.curve.size == 128
    assert result.reference_energy == pytest.approx(2 * math.pi, rel=1e-6)


def test_samples_are_forwarded(perturbed):
    seen = []
    result = run(perturbed, FlowConfig(max_steps=6, sample_every=2), on_sample=seen.append)
    assert [state.stats.steps for state in seen] == [0, 2, 4, 6]
    assert seen == result.trajectory
    assert all(state.report.embedded for state in seen)


def test_step_commutes_with_rotations(perturbed):
    config = FlowConfig(dt=1e-5)
    rotation = rotation_matrix(normalize(np.array([1.0, 2.0, 3.0, 4.0])))
    rotated = perturbed.with_nodes(normalize(perturbed.nodes @ rotation.T))

    moved = step(initial_state(perturbed, config), config)
    moved_rotated = step(initial_state(rotated, config), config)
    np.testing.assert_allclose(moved_rotated.curve.nodes, moved.curve.nodes @ rotation.T, atol=1e-10)
    assert moved_rotated.report.energy == pytest.approx(moved.report.energy, rel=1e-10)


def test_energy_decays_at_the_dissipation_rate(perturbed):
    config = FlowConfig(dt=1e-5, dt_max=1e-5, max_steps=40, sample_every=2, resample_every=0)
    result = run(perturbed, config)
    energies = [state.report.energy for state in result.trajectory]
    assert all(later <= earlier for earlier, later in zip(energies, energies[1:]))
    assert dissipation_residual(result.trajectory).max() < 1e-2


def test_evolution_laws_hold_along_a_short_run(perturbed):
    config = FlowConfig(nodes=128, dt=2e-5, dt_max=2e-5, max_steps=10, sample_every=1, resample_every=0)
    result = run(perturbed, config)
    curvature, arclength = curvature_evolution_residual(result.trajectory)
    assert curvature.shape == (9, 128)
    assert curvature.max() < 0.05
    assert arclength.max() < 0.05


def test_evolution_residual_refuses_resampled_samples():
    states = [SimpleNamespace(t=float(k), stats=SimpleNamespace(resample_events=k // 2)) for k in range(3)]
    with pytest.raises(ResampledBetweenSamplesError):
        curvature_evolution_residual(states)


def test_residuals_need_three_samples():
    with pytest.raises(ValueError):
        dissipation_residual([])
    with pytest.raises(ValueError):
        curvature_evolution_residual([])


def test_exponential_fit_recovers_rate():
    reference = 2 * math.pi
    states = [SimpleNamespace(t=t, report=SimpleNamespace(energy=reference + 0.3 * math.exp(-2.0 * t)))
              for t in np.linspace(0.0, 5.0, 40)]
    fit = exponential_rate_fit(states, reference)
    assert fit.rate == pytest.approx(2.0, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-10)
    assert fit.samples >= 5


def test_exponential_fit_needs_a_gap():
    states = [SimpleNamespace(t=float(t), report=SimpleNamespace(energy=1.0)) for t in range(10)]
    with pytest.raises(ValueError):
        exponential_rate_fit(states, 1.0)


def test_flow_config_rejects_dt_outside_range():
    with pytest.raises(ValueError):
        FlowConfig(dt=1.0, dt_max=0.5)


@pytest.mark.slow
def test_latitude_circle_flows_to_a_great_circle(latitude):
    result = run(latitude, FlowConfig())
    assert result.reason == TerminationReason.GREAT_CIRCLE
    assert result.final.report.sup_kappa < 1e-4
    fit = exponential_rate_fit(result.trajectory, result.reference_energy)
    assert fit.rate > 0.0


@pytest.mark.slow
def test_perturbed_circle_flows_to_a_great_circle():
    curve = perturbed_great_circle(0.05, [2], 7, 256)
    result = run(curve, FlowConfig(dt_max=5e-3, sample_every=2))
    assert result.reason == TerminationReason.GREAT_CIRCLE
    assert abs(result.final.report.energy - result.reference_energy) < 1e-6


def test_unstable_explicit_step_is_halved_until_energy_drops(perturbed):
    noisy = perturbed.with_nodes(normalize(perturbed.nodes + 1e-6 * np.random.default_rng(0).normal(size=(256, 3))))
    config = FlowConfig(scheme=TimeScheme.EXPLICIT_RK4, cfl=64.0, dt=1.0, dt_max=1.0)
    state = initial_state(noisy, config)
    following = step(state, config)
    assert following.stats.rejections > 0
    assert following.report.energy < state.report.energy


def test_step_reports_the_new_velocity(perturbed):
    config = FlowConfig(dt=1e-4)
    following = step(initial_state(perturbed, config), config)
    speed = np.max(np.linalg.norm(velocity(following.geometry), axis=1))
    assert following.stats.velocity_sup == pytest.approx(speed, rel=1e-10)
