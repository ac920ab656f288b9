import logging
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from models.sums import ThetaMode

load_dotenv()

logger = logging.getLogger(__name__)


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    work_cap: int = Field(default=10**9, ge=1)
    tally_cap: int = Field(default=10**7, ge=1)
    sieve_cap: int = Field(default=10**8, ge=1)
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=1 << 18, ge=1)
    eps_slack: float = Field(default=0.25, ge=0.0)
    theta_mode: ThetaMode = ThetaMode.UNCONDITIONAL
    log_level: str = "INFO"

    def with_overrides(self, **overrides) -> "Settings":
        """Validated copy with the non-None overrides applied"""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return type(self).model_validate({**self.model_dump(), **changes}) if changes else self


def load_settings() -> Settings:
    """Build settings from the environment"""
    return Settings(
        work_cap=int(os.getenv("MULTIGAUSS_CAP", 10**9)),
        tally_cap=int(os.getenv("MULTIGAUSS_TALLY_CAP", 10**7)),
        sieve_cap=int(os.getenv("MULTIGAUSS_SIEVE_CAP", 10**8)),
        workers=int(os.getenv("MULTIGAUSS_WORKERS", 1)),
        chunk_size=int(os.getenv("MULTIGAUSS_CHUNK", 1 << 18)),
        eps_slack=float(os.getenv("MULTIGAUSS_EPS_SLACK", 0.25)),
        theta_mode=ThetaMode(os.getenv("MULTIGAUSS_THETA_MODE", ThetaMode.UNCONDITIONAL.value)),
        log_level=os.getenv("MULTIGAUSS_LOG_LEVEL", "INFO"),
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Get the process-wide settings instance"""
    return load_settings()


def configure_logging(level: str | None = None) -> None:
    """Install the root handler once"""
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
