from pathlib import Path
from typing import List, Optional
import numpy as np
from hopf_flow.constants.flow_constants import FindingSeverity, TerminationReason
from hopf_flow.exceptions.flow_exceptions import ResampledBetweenSamplesError, StepFailureError
from hopf_flow.exceptions.geometry_exceptions import NotEmbeddedError
from hopf_flow.models.diagnostics import CurveInfo, TorusCheckReport
from hopf_flow.models.curve import DiscreteCurve
from hopf_flow.models.flow import FlowResult, FlowState
from hopf_flow.models.moduli import ModulusPoint
from hopf_flow.models.run_config import RunConfig, RunSummary
from hopf_flow.services.curve import geometry, is_embedded
from hopf_flow.services.curve_families import build_curve
from hopf_flow.services.energy import check_bounds, energy_report
from hopf_flow.services.flow import curvature_evolution_residual, exponential_rate_fit, run
from hopf_flow.services.hopf import (
    build_torus,
    horizontal_lift,
    surface_geometry,
    verify_flow_correspondence,
    verify_hopf_identities,
)
from hopf_flow.services.moduli import compactness_monitor, modulus
from hopf_flow.services.time_steppers import classical_velocity, velocity
from hopf_flow.utils.io import TrajectoryWriter, read_snapshot, write_json, write_mesh, write_snapshot
from hopf_flow.utils.logger import logger, log_error


def torus_report(curve: DiscreteCurve, fiber_resolution: int, method=None,
                 mesh_path: Optional[Path] = None) -> TorusCheckReport:
    geom = geometry(curve, method)
    mesh = build_torus(horizontal_lift(curve, method=method), fiber_resolution)
    surface = surface_geometry(mesh, geom.method)
    if mesh_path is not None:
        write_mesh(mesh, mesh_path)
    return TorusCheckReport(
        fiber_resolution=fiber_resolution,
        identities=verify_hopf_identities(mesh, geom, surface),
        correspondence=verify_flow_correspondence(mesh, geom, surface),
    )


def _split_at_resampling(trajectory: List[FlowState]) -> List[List[FlowState]]:
    segments, current = [], []
    for state in trajectory:
        if current and state.stats.resample_events != current[-1].stats.resample_events:
            segments.append(current)
            current = []
        current.append(state)
    segments.append(current)
    return [segment for segment in segments if len(segment) >= 3]


def evolution_residual(trajectory: List[FlowState]) -> Optional[float]:
    """Largest curvature or arclength law residual over stretches with no resampling in between."""
    worst = None
    for segment in _split_at_resampling(trajectory):
        try:
            curvature, arclength = curvature_evolution_residual(segment)
        except ResampledBetweenSamplesError:
            continue
        value = float(max(curvature.max(), arclength.max()))
        worst = value if worst is None else max(worst, value)
    return worst


class FlowRunWorkflow:
    """flow-run: build the initial curve, run the flow, and persist trajectory, snapshots, meshes and summary."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.flow_config = config.flow_config()
        self.output_dir = Path(config.output_dir)
        self.moduli: List[ModulusPoint] = []
        self.bound_failures: List[str] = []
        self.initial_energy: Optional[float] = None
        self._samples = 0

    def _modulus(self, state: FlowState) -> Optional[ModulusPoint]:
        if not self.config.track_moduli:
            return None
        try:
            point = modulus(state.report)
        except NotEmbeddedError:
            return None
        self.moduli.append(point)
        return point

    def _on_sample(self, writer: TrajectoryWriter, state: FlowState) -> None:
        if self.initial_energy is None:
            self.initial_energy = state.report.energy
        writer.write(state, self._modulus(state))

        for finding in check_bounds(state.report, self.initial_energy):
            if not finding.passed and finding.severity == FindingSeverity.ERROR and finding.name not in self.bound_failures:
                logger.warning("Bound violated", extra={"props": {"t": state.t, "bound": finding.name, "value": finding.value}})
                self.bound_failures.append(finding.name)

        config = self.config
        if config.snapshot_every and self._samples % config.snapshot_every == 0:
            write_snapshot(state.curve, self.output_dir / "snapshots" / f"curve_{state.stats.steps:08d}.txt", state.t)
        if config.mesh_every and self._samples % config.mesh_every == 0:
            mesh = build_torus(horizontal_lift(state.curve, method=state.geometry.method), config.fiber_resolution)
            write_mesh(mesh, self.output_dir / "meshes" / f"torus_{state.stats.steps:08d}.txt")
        self._samples += 1

    @log_error(logger)
    def run(self) -> RunSummary:
        config = self.config
        curve = build_curve(config.family(), config.nodes, config.differentiation)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info("Starting flow run", extra={"props": {"family": config.curve_family.value, "nodes": config.nodes,
                                                          "scheme": config.scheme.value, "output_dir": str(self.output_dir)}})

        with TrajectoryWriter(self.output_dir / "trajectory.csv", with_moduli=config.track_moduli) as writer:
            try:
                result = run(curve, self.flow_config, on_sample=lambda state: self._on_sample(writer, state))
            except StepFailureError as e:
                if e.state is not None:
                    path = write_snapshot(e.state.curve, self.output_dir / "snapshots" / "failure.txt", e.state.t)
                    logger.error("Final state dumped", extra={"props": {"path": str(path), "t": e.state.t}})
                raise

        final = result.final
        write_snapshot(final.curve, self.output_dir / "snapshots" / f"curve_{final.stats.steps:08d}.txt", final.t)
        summary = self._summarize(result)
        write_json(summary, self.output_dir / "summary.json")
        return summary

    def _summarize(self, result: FlowResult) -> RunSummary:
        config = self.config
        final = result.final
        report = final.report

        if self.moduli:
            compactness = compactness_monitor(self.moduli, result.initial_energy, regime_check=False)
            self.bound_failures.extend(
                finding.name for finding in compactness.findings
                if not finding.passed and finding.severity == FindingSeverity.ERROR
            )

        rate = r_squared = None
        if result.reason == TerminationReason.GREAT_CIRCLE:
            try:
                fit = exponential_rate_fit(result.trajectory, result.reference_energy)
                rate, r_squared = fit.rate, fit.r_squared
            except ValueError as e:
                logger.warning("Exponential fit skipped", extra={"props": {"reason": str(e)}})

        hopf_residual = None
        if config.verify_hopf and report.embedded:
            checks = torus_report(final.curve, config.fiber_resolution, final.geometry.method,
                                  self.output_dir / "meshes" / "torus_final.txt")
            write_json(checks, self.output_dir / "torus_check.json")
            hopf_residual = checks.max_residual

        evolution = evolution_residual(result.trajectory) if config.verify_evolution else None
        point = self.moduli[-1] if self.moduli and report.embedded else None

        return RunSummary(
            termination=result.reason,
            initial_energy=result.initial_energy,
            final_energy=report.energy,
            reference_energy=result.reference_energy,
            final_time=final.t,
            steps=final.stats.steps,
            rejections=final.stats.rejections,
            resample_events=final.stats.resample_events,
            sup_kappa=report.sup_kappa,
            length=report.length,
            area=report.area if config.request_area else None,
            area_nominal=report.area_nominal if config.request_area else False,
            embedded=report.embedded,
            tau_reduced=(point.reduced_re, point.reduced_im) if point else None,
            reduction_word=point.word if point else None,
            exponential_rate=rate,
            exponential_r_squared=r_squared,
            bound_failures=self.bound_failures,
            hopf_max_residual=hopf_residual,
            evolution_max_residual=evolution,
        )


@log_error(logger)
def curve_info(snapshot_path, method=None) -> CurveInfo:
    curve, t = read_snapshot(snapshot_path)
    geom = geometry(curve, method)
    report = energy_report(geom)
    try:
        point = modulus(report)
    except NotEmbeddedError:
        point = None
    return CurveInfo(
        nodes=curve.size,
        orientation=curve.orientation,
        t=t,
        energy=report.energy,
        extrinsic_energy=report.extrinsic_energy,
        energy_mismatch=abs(report.energy - report.extrinsic_energy) / report.energy,
        length=report.length,
        total_curvature=report.total_curvature,
        area=report.area,
        area_nominal=report.area_nominal,
        embedded=report.embedded,
        crossing=report.crossing,
        sup_kappa=report.sup_kappa,
        gradient_l2=report.gradient_l2,
        gradient_residual=report.gradient_residual,
        velocity_sup=float(np.max(np.linalg.norm(velocity(geom), axis=1))),
        classical_velocity_sup=float(np.max(np.linalg.norm(classical_velocity(geom), axis=1))),
        findings=check_bounds(report, report.energy),
        modulus=point,
    )


@log_error(logger)
def torus_check(snapshot_path, fiber_resolution: int, method=None, mesh_path: Optional[Path] = None) -> TorusCheckReport:
    curve, _ = read_snapshot(snapshot_path)
    embedded, crossing = is_embedded(curve)
    if not embedded:
        raise NotEmbeddedError(f"segments {crossing} cross")
    checks = torus_report(curve, fiber_resolution, method, mesh_path)
    logger.info("Torus check finished", extra={"props": {"nodes": curve.size, "fibers": fiber_resolution,
                                                         "max_residual": checks.max_residual,
                                                         "holonomy_error": checks.identities.values["holonomy_error"]}})
    return checks
