from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict

from models.sums import ThetaMode


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class RunConfig(BaseModel):
    """Everything needed to reproduce a run; serialised into every report"""

    model_config = ConfigDict(frozen=True)

    command: str
    system: Optional[str] = None
    q: Optional[str] = None
    a: Optional[str] = None
    chi: Optional[list[str]] = None
    cap: int
    tally_cap: int
    eps_slack: float
    theta_mode: ThetaMode
    output_format: OutputFormat = OutputFormat.JSON
    seed: int = 0
    workers: int = 1
    extra: dict[str, str] = {}


class Report(BaseModel):
    config: RunConfig
    results: list[dict] = []
    diagnostics: list[str] = []
    timing: dict[str, float] = {}
