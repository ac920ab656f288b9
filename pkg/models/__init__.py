from .arith import Factorization, PrimePower, UnitGroup, CyclotomicTally
from .characters import DirichletCharacter, CharacterSystem
from .forms import Term, Polynomial, Form, FormSystem
from .sums import ThetaMode, GaussSumInstance, GaussSumReport, InequalityCheck, SlopeFit
from .geometry import RankCondition, VarietySpec, DimEstimate, ChainStep, ChainReport, CodimReport
from .circle import (
    BoxSpec, MajorArcSummary, SingularSeriesResult, SingularIntegralResult, AsymptoticReport
)
from .run_config import OutputFormat, RunConfig, Report
from .verification import SuiteLevel, CriterionResult, SuiteReport

__all__ = [
    "Factorization", "PrimePower", "UnitGroup", "CyclotomicTally",
    "DirichletCharacter", "CharacterSystem",
    "Term", "Polynomial", "Form", "FormSystem",
    "ThetaMode", "GaussSumInstance", "GaussSumReport", "InequalityCheck", "SlopeFit",
    "RankCondition", "VarietySpec", "DimEstimate", "ChainStep", "ChainReport", "CodimReport",
    "BoxSpec", "MajorArcSummary", "SingularSeriesResult", "SingularIntegralResult", "AsymptoticReport",
    "OutputFormat", "RunConfig", "Report",
    "SuiteLevel", "CriterionResult", "SuiteReport",
]
