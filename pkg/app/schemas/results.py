from typing import List, Optional

from pydantic import BaseModel, Field, field_validator


class CheckResult(BaseModel):
    """Outcome of one structural check"""
    name: str
    passed: bool
    value: float
    tolerance: float

    @field_validator("passed", mode="before")
    @classmethod
    def coerce_passed(cls, value) -> bool:
        return bool(value)

    @field_validator("value", "tolerance", mode="before")
    @classmethod
    def coerce_float(cls, value) -> float:
        return float(value)

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tolerance {self.tolerance:.1e})"


class MetricsReport(BaseModel):
    """Relative errors of one reduced simulation against the full-order one"""
    e_x_red: float = Field(ge=0.0)
    e_x_proj: float = Field(ge=0.0)
    e_x_lowerbound: Optional[float] = Field(default=None, ge=0.0)
    e_y: float = Field(ge=0.0)
    energy_error_series: List[float] = []


class ErrorRow(BaseModel):
    """One (method, r) cell of an experiment sweep"""
    method: str
    r: int
    metrics: Optional[MetricsReport] = None
    failure: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.metrics is None
