from functools import lru_cache
from typing import Dict
import numpy as np
import scipy.linalg
import scipy.sparse as sp
from hopf_flow.config import get_settings
from hopf_flow.constants.flow_constants import DifferentiationMethod
from hopf_flow.exceptions.geometry_exceptions import TooCoarseError
from hopf_flow.interfaces.differentiator_interface import IDifferentiator

settings = get_settings()

# Fourth-order central stencils, offset -> coefficient (before dividing by h^order)
STENCILS: Dict[int, Dict[int, float]] = {
    1: {-2: 1.0 / 12, -1: -8.0 / 12, 1: 8.0 / 12, 2: -1.0 / 12},
    2: {-2: -1.0 / 12, -1: 16.0 / 12, 0: -30.0 / 12, 1: 16.0 / 12, 2: -1.0 / 12},
    3: {-3: 1.0 / 8, -2: -1.0, -1: 13.0 / 8, 1: -13.0 / 8, 2: 1.0, 3: -1.0 / 8},
    4: {-3: -1.0 / 6, -2: 12.0 / 6, -1: -39.0 / 6, 0: 56.0 / 6, 1: -39.0 / 6, 2: 12.0 / 6, 3: -1.0 / 6},
}


def _check_order(order: int) -> None:
    if order not in STENCILS:
        raise ValueError(f"derivative order must be one of {sorted(STENCILS)}, got {order}")


class StencilDifferentiator(IDifferentiator):
    def __init__(self, nodes: int):
        self._nodes = nodes
        self.h = 2.0 * np.pi / nodes
        self._matrices = {}

    @property
    def nodes(self) -> int:
        return self._nodes

    def derivative(self, values: np.ndarray, order: int, axis: int = 0) -> np.ndarray:
        _check_order(order)
        values = np.asarray(values, dtype=float)
        result = np.zeros_like(values)
        for offset, weight in STENCILS[order].items():
            # f(x + offset·h) sits at index m + offset
            result += weight * np.roll(values, -offset, axis=axis)
        return result / self.h ** order

    def matrix(self, order: int) -> sp.csc_matrix:
        _check_order(order)
        if order not in self._matrices:
            n = self._nodes
            rows = np.arange(n)
            stencil = STENCILS[order]
            operator = sp.coo_matrix(
                (
                    np.concatenate([np.full(n, weight) for weight in stencil.values()]),
                    (
                        np.tile(rows, len(stencil)),
                        np.concatenate([(rows + offset) % n for offset in stencil]),
                    ),
                ),
                shape=(n, n),
            )
            self._matrices[order] = operator.tocsc() / self.h ** order
        return self._matrices[order]


class FourierDifferentiator(IDifferentiator):
    def __init__(self, nodes: int):
        self._nodes = nodes
        self.wavenumbers = np.fft.fftfreq(nodes, d=1.0 / nodes)
        self._matrices = {}

    @property
    def nodes(self) -> int:
        return self._nodes

    def multiplier(self, order: int) -> np.ndarray:
        factor = (1j * self.wavenumbers) ** order
        if order % 2 == 1 and self._nodes % 2 == 0:
            factor[self._nodes // 2] = 0.0
        return factor

    def derivative(self, values: np.ndarray, order: int, axis: int = 0) -> np.ndarray:
        _check_order(order)
        values = np.asarray(values, dtype=float)
        shape = [1] * values.ndim
        shape[axis] = self._nodes
        spectrum = np.fft.fft(values, axis=axis) * self.multiplier(order).reshape(shape)
        return np.real(np.fft.ifft(spectrum, axis=axis))

    def matrix(self, order: int) -> np.ndarray:
        _check_order(order)
        if order not in self._matrices:
            column = np.real(np.fft.ifft(self.multiplier(order)))
            self._matrices[order] = scipy.linalg.circulant(column)
        return self._matrices[order]


@lru_cache(maxsize=64)
def _build(nodes: int, method: DifferentiationMethod) -> IDifferentiator:
    if method == DifferentiationMethod.FOURIER:
        return FourierDifferentiator(nodes)
    return StencilDifferentiator(nodes)


def get_differentiator(nodes: int, method=None) -> IDifferentiator:
    if nodes < settings.MIN_NODES:
        raise TooCoarseError(f"N = {nodes} < {settings.MIN_NODES}")
    return _build(nodes, DifferentiationMethod(method or settings.DIFFERENTIATION))


def spectral_radius(differentiator: IDifferentiator, order: int) -> float:
    operator = differentiator.matrix(order)
    column = operator[:, 0].toarray().ravel() if sp.issparse(operator) else operator[:, 0]
    return float(np.max(np.abs(np.fft.fft(column))))


class TrigonometricInterpolant:
    """Trigonometric interpolant of periodic samples on x_m = 2πm/N, m along axis 0; the Nyquist mode is split symmetrically."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        self.size = values.shape[0]
        self.trailing = values.shape[1:]
        flat = values.reshape(self.size, -1)
        coefficients = np.fft.rfft(flat, axis=0) / self.size
        weights = np.full(coefficients.shape[0], 2.0)
        weights[0] = 1.0
        if self.size % 2 == 0:
            weights[-1] = 1.0
        self.coefficients = coefficients * weights[:, None]
        self.modes = np.arange(coefficients.shape[0])

    def _factor(self, order: int) -> np.ndarray:
        factor = (1j * self.modes) ** order
        if order % 2 == 1 and self.size % 2 == 0:
            factor[-1] = 0.0
        return factor

    def evaluate(self, x, order: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        basis = np.exp(1j * np.outer(x, self.modes))
        result = np.real(basis @ (self.coefficients * self._factor(order)[:, None]))
        return result.reshape(x.shape + self.trailing)

    def antiderivative(self, x) -> np.ndarray:
        """∫₀ˣ of the interpolant; the mean contributes the linear part."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        modes = self.modes[1:]
        basis = (np.exp(1j * np.outer(x, modes)) - 1.0) / (1j * modes)
        periodic = np.real(basis @ self.coefficients[1:])
        linear = np.outer(x, np.real(self.coefficients[0]))
        return (periodic + linear).reshape(x.shape + self.trailing)
