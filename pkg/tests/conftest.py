import sys
from pathlib import Path

import pytest

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import Settings  # noqa: E402
from services.container import ServiceContainer  # noqa: E402


@pytest.fixture
def settings():
    """Default settings, independent of the environment"""
    return Settings()


@pytest.fixture
def services(settings):
    """Every service wired against the default settings"""
    return ServiceContainer(settings)


@pytest.fixture
def small_cap_services():
    """Services that refuse anything above a thousand term evaluations"""
    return ServiceContainer(Settings(work_cap=1000, tally_cap=100))
