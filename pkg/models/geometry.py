from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from models.forms import Polynomial


class RankCondition(BaseModel):
    """rank(matrix(x)) < bound"""

    model_config = ConfigDict(frozen=True)

    matrix: tuple[tuple[Polynomial, ...], ...]
    bound: int

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.matrix), len(self.matrix[0]) if self.matrix else 0


class VarietySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    equations: tuple[Polynomial, ...] = ()
    rank_condition: Optional[RankCondition] = None
    coordinate_constraints: frozenset[int] = frozenset()
    label: str = ""

    @model_validator(mode="after")
    def _check_arity(self):
        polys = list(self.equations)
        if self.rank_condition is not None:
            polys += [entry for row in self.rank_condition.matrix for entry in row]
        for poly in polys:
            if poly.s != self.n:
                raise ValueError(f"Polynomial in {poly.s} variables inside a variety of A^{self.n}")
        if any(not 0 <= j < self.n for j in self.coordinate_constraints):
            raise ValueError("Coordinate constraint outside the ambient space")
        return self

    @property
    def free_coordinates(self) -> list[int]:
        return [j for j in range(self.n) if j not in self.coordinate_constraints]

    def structurally_equal(self, other: "VarietySpec") -> bool:
        return (
            self.n == other.n
            and self.equations == other.equations
            and self.rank_condition == other.rank_condition
            and self.coordinate_constraints == other.coordinate_constraints
        )


class DimEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int
    per_prime_counts: tuple[tuple[int, int], ...]
    slope: float
    residual: float
    skipped_primes: tuple[int, ...] = ()

    @property
    def empty(self) -> bool:
        return self.dim == -1


class ChainStep(BaseModel):
    k: int
    dim_T: Optional[int] = None
    dim_U: Optional[int] = None
    relation_ok: Optional[bool] = None
    containment_ok: Optional[bool] = None
    hyperplane_ok: Optional[bool] = None


class ChainReport(BaseModel):
    s: int
    R: int
    dim_singular_locus: int
    steps: list[ChainStep]
    max_dim_T: Optional[int] = None
    claim_bound: float
    claim_ok: bool
    all_ok: bool
    notes: list[str] = []


class CodimReport(BaseModel):
    s: int
    R: int
    codim_F: int
    codim_G1: int
    codim_G2: int
    bound: float
    ok: bool
    dims: dict[str, int]
    notes: list[str] = []
