import math
import numpy as np
import pytest
from hopf_flow.exceptions.flow_exceptions import RegimeViolationError
from hopf_flow.exceptions.geometry_exceptions import DegenerateCurveError, NonUnitInputError, TooCoarseError
from hopf_flow.models.curve import DiscreteCurve
from hopf_flow.services.curve import (
    chord_lengths,
    differentiate,
    geometry,
    is_embedded,
    resample_uniform_arclength,
    row_dot,
)
from hopf_flow.services.curve_families import great_circle, latitude_circle, perturbed_great_circle
from tests.conftest import LATITUDE


@pytest.mark.parametrize("method", ["stencil", "fourier"])
def test_great_circle_geometry(equator, method):
    geom = geometry(equator, method)
    np.testing.assert_allclose(geom.kappa, 0.0, atol=1e-8)
    np.testing.assert_allclose(geom.speed, 1.0, atol=1e-7)
    assert geom.length == pytest.approx(2 * math.pi, rel=1e-7)
    np.testing.assert_allclose(geom.normal, np.tile([0.0, 0.0, 1.0], (256, 1)), atol=1e-12)


def test_latitude_circle_has_constant_curvature(latitude):
    geom = geometry(latitude)
    np.testing.assert_allclose(geom.kappa, 1.0 / math.tan(LATITUDE), atol=1e-6)
    np.testing.assert_allclose(geom.kappa_s, 0.0, atol=1e-6)
    assert geom.length == pytest.approx(2 * math.pi * math.sin(LATITUDE), rel=1e-7)


def test_frame_is_orthonormal(perturbed):
    geom = geometry(perturbed, "fourier")
    gamma = perturbed.nodes
    for a, b in ((gamma, geom.tangent), (gamma, geom.normal), (geom.tangent, geom.normal)):
        np.testing.assert_allclose(row_dot(a, b), 0.0, atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(geom.normal, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(row_dot(geom.curvature_vector, geom.tangent), 0.0, atol=1e-8)


def test_reversing_orientation_flips_curvature(latitude):
    forward, backward = geometry(latitude), geometry(latitude.reversed())
    np.testing.assert_allclose(backward.kappa, -forward.kappa, atol=1e-12)
    np.testing.assert_allclose(backward.tangent, -forward.tangent, atol=1e-12)
    np.testing.assert_allclose(backward.curvature_vector, forward.curvature_vector, atol=1e-12)


def test_embedded_curves(equator, latitude, perturbed):
    for curve in (equator, latitude, perturbed):
        assert is_embedded(curve) == (True, None)


def test_figure_eight_crossing_is_located(figure_eight):
    embedded, crossing = is_embedded(figure_eight)
    assert not embedded
    first, second = crossing
    assert abs(first - 123) <= 1
    assert abs(second - 251) <= 1


def test_resampling_restores_uniform_arclength():
    x = 2 * math.pi * np.arange(128) / 128
    stretched = x + 0.3 * np.sin(x)
    curve = DiscreteCurve(nodes=np.stack([np.cos(stretched), np.sin(stretched), np.zeros_like(x)], axis=1))
    assert chord_lengths(curve.nodes).max() / chord_lengths(curve.nodes).min() > 1.5

    resampled = resample_uniform_arclength(curve)
    np.testing.assert_allclose(resampled.nodes, great_circle(128).nodes, atol=1e-10)
    np.testing.assert_allclose(geometry(resampled).speed, 1.0, atol=1e-7)


def test_resampling_to_a_finer_grid_keeps_the_shape(latitude):
    finer = resample_uniform_arclength(latitude, 512)
    assert finer.size == 512
    np.testing.assert_allclose(finer.nodes, latitude_circle(LATITUDE, 512).nodes, atol=1e-10)


def test_resampling_keeps_orientation(latitude):
    assert resample_uniform_arclength(latitude.reversed()).orientation == -1


def test_non_unit_nodes_are_rejected():
    nodes = great_circle(32).nodes * 1.001
    with pytest.raises(NonUnitInputError):
        DiscreteCurve(nodes=nodes)


def test_invalid_orientation_is_rejected():
    with pytest.raises(ValueError):
        DiscreteCurve(nodes=great_circle(32).nodes, orientation=0)


def test_coincident_nodes_are_degenerate():
    nodes = great_circle(32).nodes.copy()
    nodes[5] = nodes[4]
    with pytest.raises(DegenerateCurveError):
        geometry(DiscreteCurve(nodes=nodes))


def test_coarse_curve_is_rejected():
    with pytest.raises(TooCoarseError):
        geometry(great_circle(8))


def test_nodes_are_read_only(equator):
    with pytest.raises(ValueError):
        equator.nodes[0, 0] = 2.0


def test_parameter_derivatives_of_the_great_circle(equator):
    np.testing.assert_allclose(differentiate(equator, 2, "fourier"), -equator.nodes, atol=1e-10)
    np.testing.assert_allclose(differentiate(equator, 4, "fourier"), equator.nodes, atol=1e-6)
    first = differentiate(equator, 1)
    np.testing.assert_allclose(first[:, :2], np.stack([-equator.nodes[:, 1], equator.nodes[:, 0]], axis=1), atol=1e-7)


def test_strict_perturbed_circle_outside_regime():
    with pytest.raises(RegimeViolationError):
        perturbed_great_circle(0.6, [3], 7, 256, strict=True)
    assert perturbed_great_circle(0.6, [3], 7, 256).size == 256
