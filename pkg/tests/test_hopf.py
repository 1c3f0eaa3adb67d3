import math
import numpy as np
import pytest
from hopf_flow.exceptions.geometry_exceptions import MeshCurveMismatchError, SeedOffFiberError, TooCoarseError
from hopf_flow.services.curve import geometry
from hopf_flow.services.curve_families import great_circle, latitude_circle, perturbed_great_circle
from hopf_flow.services.hopf import (
    build_torus,
    expected_holonomy,
    horizontal_lift,
    surface_geometry,
    verify_flow_correspondence,
    verify_hopf_identities,
)
from hopf_flow.services.quat_sphere import exp_i, fiber_seed, hopf_map, qmul, wrap_angle
from tests.conftest import LATITUDE


def _angle_gap(a, b):
    return abs(float(wrap_angle(a - b)))


def test_great_circle_holonomy_is_pi(equator):
    lift = horizontal_lift(equator)
    assert _angle_gap(lift.holonomy, math.pi) < 1e-8
    assert lift.fiber_residual < 1e-8
    assert lift.horizontality_residual < 1e-6


def test_latitude_holonomy_is_minus_half_the_area(latitude):
    lift = horizontal_lift(latitude)
    assert _angle_gap(lift.holonomy, -0.5 * math.pi) < 1e-6
    assert _angle_gap(lift.holonomy, expected_holonomy(geometry(latitude))) < 1e-6


def test_reversed_latitude_holonomy(latitude):
    lift = horizontal_lift(latitude.reversed())
    # the left-hand area becomes the complementary cap, 3π
    assert _angle_gap(lift.holonomy, 0.5 * math.pi) < 1e-6
    assert _angle_gap(lift.parameter_holonomy, -0.5 * math.pi) < 1e-6


def test_lift_of_perturbed_circle_matches_area(perturbed):
    lift = horizontal_lift(perturbed)
    assert _angle_gap(lift.holonomy, expected_holonomy(geometry(perturbed))) < 1e-5


def test_lift_stays_on_the_fibers(perturbed):
    lift = horizontal_lift(perturbed)
    np.testing.assert_allclose(hopf_map(lift.points), perturbed.nodes, atol=1e-6)
    np.testing.assert_allclose(np.linalg.norm(lift.points, axis=1), 1.0, atol=1e-12)


def test_off_fiber_seed_is_rejected(latitude):
    with pytest.raises(SeedOffFiberError):
        horizontal_lift(latitude, seed=np.array([1.0, 0.0, 0.0, 0.0]))


def test_rotated_seed_rotates_the_lift(latitude):
    base = horizontal_lift(latitude)
    turn = exp_i(0.8)
    other = horizontal_lift(latitude, seed=qmul(turn, fiber_seed(latitude.nodes[0])))
    np.testing.assert_allclose(other.points, qmul(turn, base.points), atol=1e-10)
    assert _angle_gap(other.holonomy, base.holonomy) < 1e-10


def test_torus_mesh_layout(latitude):
    mesh = build_torus(horizontal_lift(latitude), 24)
    assert mesh.shape == (256, 24)
    np.testing.assert_allclose(mesh.points[:, 0], mesh.lift.points, atol=1e-15)
    np.testing.assert_allclose(hopf_map(mesh.points[:, 7]), latitude.nodes, atol=1e-6)


def test_too_few_fibers(latitude):
    with pytest.raises(TooCoarseError):
        build_torus(horizontal_lift(latitude), 8)


def test_surface_needs_enough_nodes():
    mesh = build_torus(horizontal_lift(great_circle(32)), 16)
    with pytest.raises(TooCoarseError):
        surface_geometry(mesh)


def test_clifford_torus():
    curve = great_circle(128)
    mesh = build_torus(horizontal_lift(curve), 32)
    surface = surface_geometry(mesh, "fourier")
    assert surface.area == pytest.approx(2 * math.pi ** 2, rel=1e-4)
    assert surface.willmore_energy == pytest.approx(2 * math.pi ** 2, rel=1e-4)
    np.testing.assert_allclose(surface.mean_curvature, 0.0, atol=1e-4)
    np.testing.assert_allclose(surface.tracefree_norm2, 2.0, rtol=1e-4)


def test_latitude_torus():
    theta = LATITUDE
    curve = latitude_circle(theta, 128)
    surface = surface_geometry(build_torus(horizontal_lift(curve), 32), "fourier")
    length = 2 * math.pi * math.sin(theta)
    assert surface.area == pytest.approx(math.pi * length, rel=1e-4)
    np.testing.assert_allclose(surface.tracefree_norm2, 8.0 / 3.0, rtol=1e-4)
    np.testing.assert_allclose(np.abs(surface.mean_curvature), 2.0 / math.sqrt(3.0), rtol=1e-4)
    assert surface.willmore_energy == pytest.approx(2 * math.pi ** 2 / math.sin(theta), rel=1e-4)


def test_hopf_identities_on_perturbed_circle():
    curve = perturbed_great_circle(0.05, [2], 7, 128)
    geom = geometry(curve, "fourier")
    mesh = build_torus(horizontal_lift(curve, method="fourier"), 32)
    surface = surface_geometry(mesh, "fourier")
    report = verify_hopf_identities(mesh, geom, surface)
    assert report.resolution == [128, 32]
    assert report.max_residual < 1e-3
    assert report.values["holonomy_error"] < 1e-5
    assert report.values["willmore_energy"] == pytest.approx(report.values["pi_elastic_energy"], rel=1e-4)
    assert report.values["off_diagonal_mean"] == pytest.approx(1.0, abs=1e-4)

    correspondence = verify_flow_correspondence(mesh, geom, surface)
    assert correspondence.residual("hopf_willmore") < 1e-3
    assert correspondence.residual("pushed_velocity") < 1e-3


def test_unknown_residual_name(latitude):
    mesh = build_torus(horizontal_lift(latitude), 16)
    report = verify_flow_correspondence(mesh, geometry(latitude))
    with pytest.raises(KeyError):
        report.residual("missing")


def test_mesh_of_another_curve_is_rejected(latitude, equator):
    mesh = build_torus(horizontal_lift(latitude), 16)
    with pytest.raises(MeshCurveMismatchError):
        verify_hopf_identities(mesh, geometry(equator))
    with pytest.raises(MeshCurveMismatchError):
        verify_hopf_identities(mesh, geometry(great_circle(128)))


def test_lift_closes_on_its_own_fiber(latitude, perturbed):
    for curve in (latitude, perturbed):
        lift = horizontal_lift(curve)
        np.testing.assert_allclose(hopf_map(lift.end_point), curve.nodes[0], atol=1e-13)


@pytest.mark.parametrize("nodes,fibers", [(256, 64), (512, 128)])
def test_latitude_surface_identities(nodes, fibers):
    curve = latitude_circle(LATITUDE, nodes)
    geom = geometry(curve)
    mesh = build_torus(horizontal_lift(curve), fibers)
    surface = surface_geometry(mesh)
    identities = verify_hopf_identities(mesh, geom, surface)
    for name in ("mean_curvature", "tracefree_norm", "cubic_term", "normal_laplacian", "off_diagonal"):
        assert identities.residual(name) < 1e-3, name
    assert verify_flow_correspondence(mesh, geom, surface).max_residual < 1e-3


def test_off_diagonal_has_unit_size_and_one_sign(perturbed):
    surface = surface_geometry(build_torus(horizontal_lift(perturbed), 64))
    np.testing.assert_allclose(np.abs(surface.off_diagonal), 1.0, atol=1e-4)
    assert len(np.unique(np.sign(surface.off_diagonal))) == 1


def test_normal_laplacian_converges_on_perturbed_circle():
    residuals = []
    for nodes, fibers in ((128, 32), (256, 64)):
        curve = perturbed_great_circle(0.05, [2], 7, nodes)
        mesh = build_torus(horizontal_lift(curve), fibers)
        residuals.append(verify_hopf_identities(mesh, geometry(curve)).residual("normal_laplacian"))
    coarse, fine = residuals
    assert fine < 1e-2
    assert fine <= 0.5 * coarse
