from pydantic import BaseModel, Field
from typing import Dict, List, Optional, Tuple
from hopf_flow.models.hopf import ResidualReport
from hopf_flow.models.moduli import ModulusPoint
from hopf_flow.models.report import BoundFinding


class CurveInfo(BaseModel):
    """Full diagnostic pass over a single curve snapshot."""
    nodes: int
    orientation: int
    t: float
    energy: float
    extrinsic_energy: float
    energy_mismatch: float = Field(..., description="|E − ∫|γ″|² dμ| relative to E")
    length: float
    total_curvature: float
    area: Optional[float] = None
    area_nominal: bool = False
    embedded: Optional[bool] = None
    crossing: Optional[Tuple[int, int]] = None
    sup_kappa: float
    gradient_l2: float
    gradient_residual: float
    velocity_sup: float = Field(..., description="sup |V| of the degenerate flow")
    classical_velocity_sup: float = Field(..., description="sup |∇𝔈|, the undamped comparison speed")
    findings: List[BoundFinding] = Field(default_factory=list)
    modulus: Optional[ModulusPoint] = None


class TorusCheckReport(BaseModel):
    fiber_resolution: int
    identities: ResidualReport
    correspondence: ResidualReport

    @property
    def max_residual(self) -> float:
        return max(self.identities.max_residual, self.correspondence.max_residual)


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    details: Dict[str, float] = Field(default_factory=dict)
    message: str = ""
    elapsed: float = 0.0


class AcceptanceReport(BaseModel):
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]
