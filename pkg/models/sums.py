from enum import Enum
from math import gcd
from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from models.arith import CyclotomicTally
from models.characters import CharacterSystem
from models.forms import FormSystem


class ThetaMode(str, Enum):
    UNCONDITIONAL = "unconditional"
    IGUSA = "igusa"


class GaussSumInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    system: FormSystem
    q: int
    a: tuple[int, ...]
    chars: CharacterSystem

    @model_validator(mode="before")
    @classmethod
    def _reduce_a(cls, data):
        if isinstance(data, dict) and "a" in data and "q" in data:
            data = {**data, "a": tuple(int(x) % int(data["q"]) for x in data["a"])}
        return data

    @model_validator(mode="after")
    def _check_shape(self):
        if self.q < 1:
            raise ValueError("Modulus must be positive")
        if len(self.a) != self.system.R:
            raise ValueError(f"Need {self.system.R} coefficients a_i, got {len(self.a)}")
        if len(self.chars) != self.system.s:
            raise ValueError(f"Need {self.system.s} characters, got {len(self.chars)}")
        if self.chars.modulus != self.q:
            raise ValueError(f"Character system modulus {self.chars.modulus} differs from q={self.q}")
        return self

    @property
    def is_primitive(self) -> bool:
        """(a_1, ..., a_R, q) = 1"""
        return gcd(self.q, *self.a) == 1


class GaussSumReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    q: int
    value: complex
    magnitude: float
    tally: Optional[CyclotomicTally] = None
    empirical_exponent: Optional[float] = None
    theoretical_exponent: Optional[float] = None
    theta_mode: Optional[ThetaMode] = None
    bound_ok: Optional[bool] = None
    slack: Optional[float] = None
    diagnostics: tuple[str, ...] = ()

    def summary(self) -> dict:
        return {
            "q": self.q,
            "re": self.value.real,
            "im": self.value.imag,
            "magnitude": self.magnitude,
            "emp_exponent": self.empirical_exponent,
            "theo_exponent": self.theoretical_exponent,
            "theta_mode": self.theta_mode.value if self.theta_mode else None,
            "ok": self.bound_ok,
            "slack": self.slack,
            "tally": self.tally.to_dict() if self.tally is not None else None,
            "diagnostics": list(self.diagnostics),
        }


class InequalityCheck(BaseModel):
    """lhs <= rhs with the tolerance recorded"""

    model_config = ConfigDict(frozen=True)

    lhs: float
    rhs: float
    ok: bool
    rhs_imag: float = 0.0
    tolerance: float = 1e-9
    details: dict = {}


class SlopeFit(BaseModel):
    """Least-squares line through (log p, log |value|)"""

    slope: float
    intercept: float
    points: list[tuple[int, float]]
    skipped: list[int] = []
