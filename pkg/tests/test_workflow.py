import json
import math
from pathlib import Path
import pytest
from hopf_flow.constants.flow_constants import TerminationReason
from hopf_flow.core import workflow
from hopf_flow.core.verification import verify_all
from hopf_flow.core.workflow import FlowRunWorkflow, curve_info, torus_check
from hopf_flow.exceptions.flow_exceptions import ConfigError, StepFailureError
from hopf_flow.exceptions.geometry_exceptions import NotEmbeddedError
from hopf_flow.main import EXIT_DOMAIN_ERROR, EXIT_INPUT_ERROR, EXIT_OK, EXIT_STEP_FAILURE, main
from hopf_flow.models.flow import FlowConfig
from hopf_flow.services.flow import initial_state
from hopf_flow.utils.io import load_run_config, read_snapshot, read_trajectory, write_snapshot


def _small_run(write_config, **values):
    settings = dict(curve_family="latitude", nodes=128, max_steps=5, sample_every=1, resample_every=0)
    settings.update(values)
    return load_run_config(write_config(**settings))


def test_flow_run_writes_artifacts(write_config):
    config = _small_run(write_config, snapshot_every=2, mesh_every=3, fiber_resolution=32,
                        verify_hopf="true", verify_evolution="true")
    summary = FlowRunWorkflow(config).run()
    output = Path(config.output_dir)

    assert summary.termination == TerminationReason.MAX_STEPS
    assert summary.steps == 5
    assert summary.final_energy < summary.initial_energy
    assert summary.embedded is True
    assert summary.reduction_word == "ST"
    assert summary.bound_failures == []
    assert summary.hopf_max_residual is not None
    assert summary.evolution_max_residual is not None

    rows = read_trajectory(output / "trajectory.csv")
    assert len(rows) == 6
    assert all(row["word"] for row in rows)
    energies = [float(row["energy"]) for row in rows]
    assert energies == sorted(energies, reverse=True)

    snapshots = {path.name for path in (output / "snapshots").iterdir()}
    assert snapshots == {"curve_00000000.txt", "curve_00000002.txt", "curve_00000004.txt", "curve_00000005.txt"}
    _, t = read_snapshot(output / "snapshots" / "curve_00000005.txt")
    assert t == pytest.approx(summary.final_time)

    meshes = {path.name for path in (output / "meshes").iterdir()}
    assert meshes == {"torus_00000000.txt", "torus_00000003.txt", "torus_final.txt"}

    stored = json.loads((output / "summary.json").read_text())
    assert stored["termination"] == "max_steps"
    assert stored["steps"] == 5
    assert (output / "torus_check.json").is_file()


def test_figure_eight_run_reports_nominal_area(write_config):
    config = _small_run(write_config, curve_family="lissajous", regime_check="false", max_steps=2)
    summary = FlowRunWorkflow(config).run()
    assert summary.embedded is False
    assert summary.area_nominal is True
    assert summary.area is not None
    assert summary.tau_reduced is None
    assert summary.reduction_word is None


def test_area_can_be_omitted(write_config):
    summary = FlowRunWorkflow(_small_run(write_config, request_area="false", max_steps=1)).run()
    assert summary.area is None


def test_step_failure_dumps_last_state(write_config, monkeypatch, latitude):
    config = _small_run(write_config)

    def failing_run(curve, flow_config, on_sample=None, **_):
        state = initial_state(curve, flow_config)
        on_sample(state)
        raise StepFailureError(state=state, trajectory=[state], details="forced")

    monkeypatch.setattr(workflow, "run", failing_run)
    with pytest.raises(StepFailureError):
        FlowRunWorkflow(config).run()
    curve, t = read_snapshot(f"{config.output_dir}/snapshots/failure.txt")
    assert curve.size == 128
    assert t == 0.0


def test_curve_info_of_latitude_snapshot(tmp_path, latitude):
    path = write_snapshot(latitude, tmp_path / "curve.txt", t=1.5)
    info = curve_info(path)
    assert info.t == 1.5
    assert info.energy == pytest.approx(2 * math.pi / math.sin(math.pi / 3.0), rel=1e-7)
    assert info.energy_mismatch < 1e-7
    assert info.embedded is True
    assert info.modulus.word == "ST"
    assert all(finding.passed for finding in info.findings)
    # V = −(κ² + 1)⁻²∇𝔈 with κ² = 1/3
    assert info.velocity_sup > 0.0
    assert info.classical_velocity_sup == pytest.approx(16.0 / 9.0 * info.velocity_sup, rel=1e-6)


def test_curve_info_of_figure_eight(tmp_path, figure_eight):
    info = curve_info(write_snapshot(figure_eight, tmp_path / "curve.txt"))
    assert info.embedded is False
    assert info.crossing is not None
    assert info.modulus is None


def test_torus_check_of_snapshot(tmp_path, latitude):
    path = write_snapshot(latitude, tmp_path / "curve.txt")
    report = torus_check(path, 32, mesh_path=tmp_path / "torus.txt")
    assert report.fiber_resolution == 32
    assert report.identities.values["holonomy_error"] < 1e-6
    assert report.max_residual < 1e-2
    assert (tmp_path / "torus.txt").is_file()


def test_torus_check_refuses_figure_eight(tmp_path, figure_eight):
    with pytest.raises(NotEmbeddedError):
        torus_check(write_snapshot(figure_eight, tmp_path / "curve.txt"), 16)


def test_cli_curve_info(tmp_path, latitude, capsys):
    snapshot = write_snapshot(latitude, tmp_path / "curve.txt")
    output = tmp_path / "info.json"
    assert main(["curve-info", str(snapshot), "--output", str(output)]) == EXIT_OK
    assert json.loads(output.read_text())["modulus"]["word"] == "ST"
    assert '"energy"' in capsys.readouterr().out


def test_cli_torus_check_default_output(tmp_path, latitude):
    snapshot = write_snapshot(latitude, tmp_path / "curve.txt")
    assert main(["torus-check", str(snapshot), "--fiber-res", "32"]) == EXIT_OK
    assert (tmp_path / "curve_torus_check.json").is_file()


def test_cli_exit_codes(tmp_path, write_config, figure_eight, capsys):
    assert main(["flow-run", str(write_config(nodes="32"))]) == EXIT_INPUT_ERROR
    assert "nodes" in capsys.readouterr().err

    broken = tmp_path / "broken.txt"
    broken.write_text("3 1\n")
    assert main(["curve-info", str(broken)]) == EXIT_INPUT_ERROR

    fig = write_snapshot(figure_eight, tmp_path / "fig.txt")
    assert main(["torus-check", str(fig)]) == EXIT_DOMAIN_ERROR


def test_cli_step_failure_exit_code(write_config, monkeypatch):
    def failing_run(curve, flow_config, on_sample=None, **_):
        raise StepFailureError(details="forced")

    monkeypatch.setattr(workflow, "run", failing_run)
    assert main(["flow-run", str(write_config(nodes=128))]) == EXIT_STEP_FAILURE


def test_cli_flow_run(write_config, capsys):
    path = write_config(curve_family="latitude", nodes=128, max_steps=2)
    assert main(["flow-run", str(path)]) == EXIT_OK
    assert '"termination": "max_steps"' in capsys.readouterr().out


def test_verify_all_subset(tmp_path):
    report = verify_all(only=["stationarity", "holonomy_area"], output_dir=tmp_path)
    assert [check.name for check in report.checks] == ["stationarity", "holonomy_area"]
    assert report.passed, report.failed
    stored = json.loads((tmp_path / "acceptance.json").read_text())
    assert len(stored["checks"]) == 2


def test_verify_all_rejects_unknown_check(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        verify_all(only=["nonsense"], output_dir=tmp_path)
    assert excinfo.value.key == "only"
    assert not (tmp_path / "acceptance.json").exists()


def test_cli_verify_all_unknown_check(write_config, capsys):
    assert main(["verify-all", str(write_config()), "--only", "bogus"]) == EXIT_INPUT_ERROR
    assert "bogus" in capsys.readouterr().err


def test_cli_verify_all(write_config):
    assert main(["verify-all", str(write_config()), "--only", "stationarity"]) == EXIT_OK


def test_default_flow_config_is_used(write_config):
    assert FlowRunWorkflow(load_run_config(write_config())).flow_config == FlowConfig()
