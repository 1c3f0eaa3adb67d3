from pydantic import BaseModel, ConfigDict, Field
from typing import List, Optional
from hopf_flow.models.report import BoundFinding


class ModulusPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau_re: float
    tau_im: float = Field(..., gt=0)
    reduced_re: float
    reduced_im: float = Field(..., gt=0)
    word: str = Field("", description="Reduction word over T, t = T⁻¹ and S in application order")

    @property
    def tau(self) -> complex:
        return complex(self.tau_re, self.tau_im)

    @property
    def reduced(self) -> complex:
        return complex(self.reduced_re, self.reduced_im)


class CompactnessReport(BaseModel):
    findings: List[BoundFinding] = Field(default_factory=list)
    min_raw_im: Optional[float] = None
    max_raw_im: Optional[float] = None
    max_reduced_im: Optional[float] = None
    reduced_im_bound: float

    @property
    def passed(self) -> bool:
        return all(finding.passed for finding in self.findings)
