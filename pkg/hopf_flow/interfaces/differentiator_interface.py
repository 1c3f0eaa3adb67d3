from abc import ABC, abstractmethod
import numpy as np

class IDifferentiator(ABC):

    @abstractmethod
    def derivative(self, values: np.ndarray, order: int, axis: int = 0) -> np.ndarray:
        """Periodic derivative w.r.t. the uniform parameter x in [0, 2π)"""
        pass

    @abstractmethod
    def matrix(self, order: int):
        """Linear operator of the derivative acting on one periodic column"""
        pass

    @property
    @abstractmethod
    def nodes(self) -> int:
        pass
