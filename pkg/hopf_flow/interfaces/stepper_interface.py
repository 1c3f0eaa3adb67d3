from abc import ABC, abstractmethod
import numpy as np
from hopf_flow.models.curve import CurveGeometry

class ITimeStepper(ABC):

    @abstractmethod
    def advance(self, geom: CurveGeometry, dt: float) -> np.ndarray:
        """Return the (N, 3) node array after one step, before projection to S²"""
        pass

    @abstractmethod
    def admissible_dt(self, geom: CurveGeometry, dt: float) -> float:
        pass
