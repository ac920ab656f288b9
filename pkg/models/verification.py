from enum import Enum

from pydantic import BaseModel


class SuiteLevel(str, Enum):
    SMOKE = "smoke"
    DESK = "desk"


class CriterionResult(BaseModel):
    number: int
    name: str
    ok: bool
    details: dict = {}
    seconds: float = 0.0


class SuiteReport(BaseModel):
    level: SuiteLevel
    criteria: list[CriterionResult] = []

    @property
    def ok(self) -> bool:
        return all(criterion.ok for criterion in self.criteria)

    def failures(self) -> list[int]:
        return [criterion.number for criterion in self.criteria if not criterion.ok]
