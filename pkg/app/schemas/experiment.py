from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator
from typing_extensions import Annotated

METHOD_NAMES = ("SP1", "SP2", "GMG-POD", "GMG-QM")
MethodName = Literal["SP1", "SP2", "GMG-POD", "GMG-QM"]


class StrictModel(BaseModel):
    """Base model rejecting unknown keys and non-finite numbers"""
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False, frozen=True)


class NewtonConfig(StrictModel):
    """Newton inner solver settings"""
    tol: PositiveFloat = 1e-10
    max_iter: PositiveInt = 10


class TimeGrid(StrictModel):
    """Uniform time grid t0 + i*dt, i = 0..n_steps"""
    t0: float = 0.0
    t_end: float
    n_steps: PositiveInt

    @model_validator(mode="after")
    def check_interval(self) -> "TimeGrid":
        if not self.t_end > self.t0:
            raise ValueError(f"t_end ({self.t_end}) must exceed t0 ({self.t0})")
        return self

    @classmethod
    def from_step(cls, t0: float, t_end: float, dt: float) -> "TimeGrid":
        """Grid with step dt; (t_end - t0) / dt must be an integer within 1e-9."""
        ratio = (t_end - t0) / dt
        n_steps = int(round(ratio))
        if n_steps < 1 or abs(ratio - n_steps) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"dt={dt} does not divide the interval [{t0}, {t_end}]")
        return cls(t0=t0, t_end=t_end, n_steps=n_steps)

    @property
    def dt(self) -> float:
        return (self.t_end - self.t0) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


class LinearMsdConfig(StrictModel):
    """Linear mass-spring-damper chain; scalars are broadcast to every element"""
    type: Literal["linear_msd"] = "linear_msd"
    n_masses: PositiveInt
    masses: Union[PositiveFloat, List[PositiveFloat]] = 1.0
    stiffnesses: Union[PositiveFloat, List[PositiveFloat]] = 1.0
    dampers: Union[PositiveFloat, List[PositiveFloat]] = 1.0

    @model_validator(mode="after")
    def check_lengths(self) -> "LinearMsdConfig":
        for name in ("masses", "stiffnesses", "dampers"):
            value = getattr(self, name)
            if isinstance(value, list) and len(value) != self.n_masses:
                raise ValueError(f"{name} has {len(value)} entries, expected n_masses={self.n_masses}")
        return self

    def expanded(self, name: str) -> np.ndarray:
        value = getattr(self, name)
        if isinstance(value, list):
            return np.asarray(value, dtype=float)
        return np.full(self.n_masses, float(value))


class NonlinearMsdConfig(StrictModel):
    """Mass-spring-damper chain with cubic spring forces"""
    type: Literal["nonlinear_msd"] = "nonlinear_msd"
    n_masses: PositiveInt
    k1: PositiveFloat = 1.0
    k2: PositiveFloat = 1.0
    mass: PositiveFloat = 0.3
    damping: PositiveFloat = 0.3


ModelConfig = Annotated[Union[LinearMsdConfig, NonlinearMsdConfig], Field(discriminator="type")]


class TimeSection(StrictModel):
    """Simulation interval and step"""
    t0: float = 0.0
    t_end: PositiveFloat
    dt: PositiveFloat

    @model_validator(mode="after")
    def check_step(self) -> "TimeSection":
        self.grid()
        return self

    def grid(self) -> TimeGrid:
        return TimeGrid.from_step(self.t0, self.t_end, self.dt)


class InputSection(StrictModel):
    """Input signal u(t) applied to every port"""
    type: Literal["constant", "sine"]
    amplitude: float
    frequency: PositiveFloat = 1.0


class LambdaRule(StrictModel):
    """Regularization chosen as max(scale * e_proj(r), floor)"""
    scale: PositiveFloat = 0.2
    floor: PositiveFloat = 10 ** -2.5


class RomSection(StrictModel):
    """Reduced models to build and the sweep over r"""
    methods: List[MethodName]
    r_min: PositiveInt
    r_max: PositiveInt
    r_n: PositiveInt = 8
    lambda_reg: Optional[Annotated[float, Field(ge=0.0)]] = None
    lambda_rule: Optional[LambdaRule] = None
    deim_tol: PositiveFloat = 1e-8
    energy_r: PositiveInt = 16

    @model_validator(mode="after")
    def check_regularization(self) -> "RomSection":
        if (self.lambda_reg is None) == (self.lambda_rule is None):
            raise ValueError("exactly one of lambda_reg and lambda_rule must be given")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must not repeat")
        return self

    def orders(self) -> List[int]:
        return list(range(self.r_min, self.r_max + 1))


class OutputSection(StrictModel):
    """Where result files are written"""
    directory: str = "results"
    prefix: str = ""


class ExperimentConfig(StrictModel):
    """Complete experiment description read from a JSON file"""
    model: ModelConfig
    time: TimeSection
    input: InputSection
    rom: RomSection
    newton: NewtonConfig = NewtonConfig()
    output: OutputSection = OutputSection()
