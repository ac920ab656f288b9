from fractions import Fraction
from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

DEFAULT_BOX_SIDE = (Fraction(1, 4), Fraction(3, 4))


class BoxSpec(BaseModel):
    """Box b'_i < u_i <= b''_i inside the open unit cube"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sides: tuple[tuple[Fraction, Fraction], ...]

    @model_validator(mode="after")
    def _check_sides(self):
        for index, (low, high) in enumerate(self.sides):
            if not 0 < low < high < 1:
                raise ValueError(f"Box side {index} must satisfy 0 < b' < b'' < 1, got ({low}, {high})")
        return self

    @classmethod
    def default(cls, s: int) -> "BoxSpec":
        return cls(sides=(DEFAULT_BOX_SIDE,) * s)

    @classmethod
    def from_text(cls, text: Optional[str], s: int) -> "BoxSpec":
        """'low,high' for every side; empty means the default box"""
        if not text:
            return cls.default(s)
        try:
            low, high = (Fraction(piece.strip()).limit_denominator() for piece in text.split(","))
        except ValueError:
            raise ValueError(f"Box must read 'low,high', got {text!r}")
        return cls(sides=((low, high),) * s)

    @property
    def s(self) -> int:
        return len(self.sides)

    @property
    def volume(self) -> float:
        volume = 1.0
        for low, high in self.sides:
            volume *= float(high - low)
        return volume


class MajorArcSummary(BaseModel):
    X: float
    Q: float
    box_count: int
    measure_bound: float
    union_bound: float
    disjoint: Optional[bool]
    classical_condition: bool


class SeriesTerm(BaseModel):
    q: int
    nu: complex
    term: float


class SingularSeriesResult(BaseModel):
    Q: int
    value: float
    imag_residual: float
    last_q: int
    dyadic_increments: list[tuple[int, float]]
    increments_decreasing: bool
    abs_sum: Optional[float] = None
    possible_local_obstruction: bool = False
    notes: list[str] = []


class SingularIntegralResult(BaseModel):
    value: float
    eps: float
    samples: int
    halved_value: float
    relative_sensitivity: float


class AsymptoticReport(BaseModel):
    X: float
    N: float
    singular_series: float
    singular_integral: float
    predicted: float
    ratio: Optional[float]
    Q: int
    total_degree: int
    series_tail: list[tuple[int, float]]
    integral_sensitivity: float
    status: str = "ok"
    notes: list[str] = [
        "Finite computations can show stabilisation of the singular series and integral, never convergence."
    ]
