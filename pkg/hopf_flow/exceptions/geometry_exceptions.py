from typing import Optional
from hopf_flow.constants.flow_constants import ErrorMessages

class HopfFlowBaseException(Exception):
    def __init__(self, message: str, details: Optional[str] = None):
        self.message = message
        self.details = details
        super().__init__(self.message if details is None else f"{self.message}: {details}")

class NonUnitInputError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.NON_UNIT, details)

class NonTangentInputError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.NON_TANGENT, details)

class TooCoarseError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.TOO_COARSE, details)

class DegenerateCurveError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.DEGENERATE_CURVE, details)

class NotEmbeddedError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.NOT_EMBEDDED, details)

class SeedOffFiberError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.SEED_OFF_FIBER, details)

class MeshCurveMismatchError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.MESH_MISMATCH, details)

class DegenerateMetricError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.DEGENERATE_METRIC, details)
