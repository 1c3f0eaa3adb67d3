import math
from typing import List, Sequence, Tuple
import numpy as np
from hopf_flow.config import get_settings
from hopf_flow.constants.flow_constants import ENERGY_REGIME, FOUR_PI, FindingSeverity, ModuliDefaults
from hopf_flow.exceptions.flow_exceptions import RegimeViolationError
from hopf_flow.exceptions.geometry_exceptions import NotEmbeddedError
from hopf_flow.models.moduli import CompactnessReport, ModulusPoint
from hopf_flow.models.report import BoundFinding, EnergyReport
from hopf_flow.utils.logger import logger

settings = get_settings()

GENERATORS = {
    "T": np.array([[1, 1], [0, 1]]),
    "t": np.array([[1, -1], [0, 1]]),
    "S": np.array([[0, -1], [1, 0]]),
}


def _apply(letter: str, tau: complex) -> complex:
    if letter == "T":
        return tau + 1.0
    if letter == "t":
        return tau - 1.0
    if letter == "S":
        return -1.0 / tau
    raise ValueError(f"unknown generator '{letter}'")


def apply_word(word: str, tau: complex) -> complex:
    """Apply the generators of word to tau, leftmost letter first."""
    for letter in word:
        tau = _apply(letter, tau)
    return tau


def word_matrix(word: str) -> np.ndarray:
    matrix = np.eye(2, dtype=int)
    for letter in word:
        if letter not in GENERATORS:
            raise ValueError(f"unknown generator '{letter}'")
        matrix = GENERATORS[letter] @ matrix
    return matrix


def reduce_modulus(tau: complex, tol: float = ModuliDefaults.BOUNDARY_TOLERANCE) -> Tuple[complex, str]:
    """Representative of tau in the standard fundamental domain and the word that reaches it.

    Boundary ties go to the side with Re ≥ 0: Re = −1/2 is translated to +1/2, and points
    of the unit arc with Re < 0 are reflected by S.
    """
    if tau.imag <= 0.0:
        raise ValueError(f"tau = {tau} is not in the upper half-plane")
    word: List[str] = []
    for _ in range(ModuliDefaults.MAX_REDUCTION_STEPS):
        shift = math.floor(tau.real + 0.5)
        if tau.real - shift < -0.5 + tol:
            shift -= 1
        if shift:
            letter = "t" if shift > 0 else "T"
            word.append(letter * abs(shift))
            tau = complex(tau.real - shift, tau.imag)

        modulus = abs(tau)
        if modulus < 1.0 - tol or (modulus <= 1.0 + tol and tau.real < -tol):
            word.append("S")
            tau = -1.0 / tau
            continue
        return tau, "".join(word)
    raise RuntimeError(f"reduction of {tau} did not terminate")


def modulus_from_lattice(area: float, length: float) -> ModulusPoint:
    """Modulus of the lattice generated by (2π, 0) and (A/2, L/2)."""
    if length <= 0.0:
        raise ValueError(f"length must be positive, got {length}")
    tau = complex(area / FOUR_PI, length / FOUR_PI)
    reduced, word = reduce_modulus(tau)
    return ModulusPoint(tau_re=tau.real, tau_im=tau.imag, reduced_re=reduced.real,
                        reduced_im=reduced.imag, word=word)


def modulus(report: EnergyReport) -> ModulusPoint:
    if report.area is None or report.area_nominal or report.embedded is False:
        raise NotEmbeddedError(f"crossing at {report.crossing}" if report.crossing else None)
    return modulus_from_lattice(report.area, report.length)


def unexplained_jumps(points: Sequence[ModulusPoint], threshold: float) -> List[int]:
    """Indices i where τ* moves by more than threshold between samples i−1 and i with no change of word."""
    return [
        index for index in range(1, len(points))
        if points[index].word == points[index - 1].word
        and abs(points[index].reduced - points[index - 1].reduced) > threshold
    ]


def _check(name: str, value: float, bound: float, passed: bool, message: str,
           severity: FindingSeverity = FindingSeverity.ERROR) -> BoundFinding:
    return BoundFinding(name=name, passed=bool(passed), severity=severity, value=value, bound=bound, message=message)


def compactness_monitor(points: Sequence[ModulusPoint], initial_energy: float,
                        regime_check: bool = True) -> CompactnessReport:
    lower = math.pi / FOUR_PI
    upper = initial_energy / FOUR_PI
    reduced_bound = max(upper, 1.0 / lower)
    findings: List[BoundFinding] = []

    if initial_energy >= ENERGY_REGIME:
        if regime_check:
            raise RegimeViolationError(f"E0 = {initial_energy:.6f}")
        findings.append(_check("energy_regime", initial_energy, ENERGY_REGIME, False,
                               "E0 >= 8: moduli bounds not guaranteed", FindingSeverity.WARNING))

    if not points:
        return CompactnessReport(findings=findings, reduced_im_bound=reduced_bound)

    raw = np.array([point.tau_im for point in points])
    reduced = np.array([point.reduced_im for point in points])
    slack = settings.BOUND_SLACK
    findings.extend([
        _check("raw_im_lower", float(raw.min()), lower, raw.min() >= lower - slack, "Im tau >= 1/4"),
        _check("raw_im_upper", float(raw.max()), upper, raw.max() <= upper + slack, "Im tau <= E0/(4 pi)"),
        _check("reduced_im_bound", float(reduced.max()), reduced_bound, reduced.max() <= reduced_bound + slack,
               "Im tau* <= max(E0/(4 pi), 4)"),
    ])
    failed = [finding.name for finding in findings if not finding.passed]
    if failed:
        logger.warning("Modulus left the compact region", extra={"props": {"failed": failed}})
    return CompactnessReport(
        findings=findings,
        min_raw_im=float(raw.min()),
        max_raw_im=float(raw.max()),
        max_reduced_im=float(reduced.max()),
        reduced_im_bound=reduced_bound,
    )
