from typing import Any, List, Optional
from hopf_flow.constants.flow_constants import ErrorMessages
from hopf_flow.exceptions.geometry_exceptions import HopfFlowBaseException

class StepFailureError(HopfFlowBaseException):
    def __init__(self, state: Any = None, trajectory: Optional[List[Any]] = None,
                 details: Optional[str] = None):
        self.state = state
        self.trajectory = trajectory or []
        super().__init__(ErrorMessages.STEP_FAILURE, details)

class ResampledBetweenSamplesError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.RESAMPLED, details)

class RegimeViolationError(HopfFlowBaseException):
    def __init__(self, details: Optional[str] = None):
        super().__init__(ErrorMessages.REGIME, details)

class ConfigError(HopfFlowBaseException):
    def __init__(self, key: str, details: Optional[str] = None):
        self.key = key
        super().__init__(f"{ErrorMessages.CONFIG} (key '{key}')", details)

class ParseError(HopfFlowBaseException):
    def __init__(self, line_number: int, details: Optional[str] = None):
        self.line_number = line_number
        super().__init__(f"{ErrorMessages.PARSE} (line {line_number})", details)
