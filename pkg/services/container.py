from typing import Optional, Sequence

from config import Settings, get_settings
from models.characters import CharacterSystem
from models.sums import GaussSumInstance
from repositories.report_repository import ReportRepository
from services.arith_service import ArithService
from services.character_service import CharacterService
from services.circle_service import CircleService
from services.errors import DomainError
from services.expsum_service import ExpSumService
from services.form_service import FormService
from services.geometry_service import GeometryService
from services.grid import GridEngine


class ServiceContainer:
    """Wires every service against one Settings instance"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.engine = GridEngine(self.settings)
        self.arith = ArithService(self.settings)
        self.characters = CharacterService(self.arith)
        self.forms = FormService()
        self.expsums = ExpSumService(self.arith, self.characters, self.forms, self.engine)
        self.geometry = GeometryService(self.forms, self.engine)
        self.circle = CircleService(self.arith, self.characters, self.expsums, self.engine)
        self.reports = ReportRepository()

    def character_system(self, specs: Optional[Sequence[str]], s: int, q: int) -> CharacterSystem:
        """One spec per variable; a single spec is shared; none means principal"""
        if not specs:
            return self.characters.principal_system(s, q)
        chars = tuple(self.characters.parse_spec(spec) for spec in specs)
        if len(chars) == 1:
            chars = chars * s
        if len(chars) != s:
            raise DomainError(f"Need 1 or {s} characters, got {len(chars)}")
        return CharacterSystem(chars=chars, modulus=q)

    def instance(
        self,
        system_text: str,
        q: int,
        a: Optional[Sequence[int]] = None,
        chi: Optional[Sequence[str]] = None,
    ) -> GaussSumInstance:
        system = self.forms.parse_system(system_text)
        a = tuple(a) if a else (1,) * system.R
        return GaussSumInstance(system=system, q=q, a=a, chars=self.character_system(chi, system.s, q))
