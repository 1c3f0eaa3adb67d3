import math
from typing import Iterable
import numpy as np
from hopf_flow.constants.flow_constants import ENERGY_REGIME, CurveFamilyName
from hopf_flow.exceptions.flow_exceptions import RegimeViolationError
from hopf_flow.models.curve import DiscreteCurve
from hopf_flow.models.run_config import CurveFamily
from hopf_flow.services.curve import geometry, is_embedded
from hopf_flow.services.energy import elastic_energy
from hopf_flow.services.quat_sphere import normalize, rotation_matrix
from hopf_flow.utils.io import read_snapshot
from hopf_flow.utils.logger import logger, log_error


def _grid(nodes: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(nodes) / nodes


def great_circle(nodes: int) -> DiscreteCurve:
    x = _grid(nodes)
    return DiscreteCurve(nodes=np.stack([np.cos(x), np.sin(x), np.zeros_like(x)], axis=1))


def latitude_circle(theta: float, nodes: int) -> DiscreteCurve:
    """Circle at polar angle theta, counterclockwise seen from the pole, north cap on the left."""
    x = _grid(nodes)
    radius = math.sin(theta)
    return DiscreteCurve(nodes=np.stack(
        [radius * np.cos(x), radius * np.sin(x), np.full_like(x, math.cos(theta))], axis=1))


def _check_regime(curve: DiscreteCurve, family: str, method=None, strict: bool = False) -> None:
    energy = elastic_energy(geometry(curve, method))
    if energy >= ENERGY_REGIME:
        if strict:
            raise RegimeViolationError(f"{family}: E0 = {energy:.6f}")
        logger.warning(
            "Generated curve outside the regime E0 < 8",
            extra={"props": {"family": family, "energy": energy}},
        )


def perturbed_great_circle(amplitude: float, modes: Iterable[int], seed: int, nodes: int,
                           method=None, strict: bool = False) -> DiscreteCurve:
    """Equator lifted by amplitude·Σ cos(k x + φ_k) out of its plane, φ_k drawn from a seeded generator.

    Energies outside the regime 𝔈 < 8 are logged, or raise RegimeViolationError when strict.
    """
    modes = list(modes)
    phases = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, size=len(modes))
    x = _grid(nodes)
    height = sum(np.cos(mode * x + phase) for mode, phase in zip(modes, phases))
    curve = DiscreteCurve(nodes=normalize(
        np.stack([np.cos(x), np.sin(x), amplitude * np.asarray(height, dtype=float)], axis=1)))
    _check_regime(curve, CurveFamilyName.PERTURBED_GREAT_CIRCLE.value, method, strict)
    return curve


def lissajous(frequencies, phase: float, amplitude: float, nodes: int) -> DiscreteCurve:
    """normalize(1, a·sin(p x + phase), a·sin(q x)); the default (1, 2), 0.1, 0.5 is a figure eight."""
    first, second = frequencies
    x = _grid(nodes)
    return DiscreteCurve(nodes=normalize(np.stack(
        [np.ones_like(x), amplitude * np.sin(first * x + phase), amplitude * np.sin(second * x)], axis=1)))


def random_embedded_curve(rng: np.random.Generator, nodes: int, max_amplitude: float = 0.1,
                          max_mode: int = 4, attempts: int = 50) -> DiscreteCurve:
    """Randomly rotated perturbed circle of random latitude that passes the embeddedness test."""
    for _ in range(attempts):
        theta = rng.uniform(0.3, math.pi - 0.3)
        x = _grid(nodes)
        modes = rng.integers(1, max_mode + 1, size=rng.integers(1, 3))
        amplitudes = rng.uniform(0.0, max_amplitude, size=modes.size)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=modes.size)
        polar = theta + sum(a * np.sin(k * x + p) for a, k, p in zip(amplitudes, modes, phases))
        base = np.stack([np.sin(polar) * np.cos(x), np.sin(polar) * np.sin(x), np.cos(polar)], axis=1)
        rotor = normalize(rng.normal(size=4))
        curve = DiscreteCurve(nodes=normalize(base @ rotation_matrix(rotor).T))
        if is_embedded(curve)[0]:
            return curve
    raise RuntimeError(f"no embedded curve after {attempts} attempts")


@log_error(logger)
def build_curve(family: CurveFamily, nodes: int, method=None) -> DiscreteCurve:
    if family.name == CurveFamilyName.LATITUDE:
        return latitude_circle(family.theta, nodes)
    if family.name == CurveFamilyName.PERTURBED_GREAT_CIRCLE:
        return perturbed_great_circle(family.amplitude, family.modes, family.seed, nodes, method)
    if family.name == CurveFamilyName.LISSAJOUS:
        return lissajous(family.frequencies, family.phase, family.lissajous_amplitude, nodes)
    return from_file(family.path)


def from_file(path: str) -> DiscreteCurve:
    curve, _ = read_snapshot(path)
    return curve
