from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel

from services.container import ServiceContainer
from services.errors import CapacityExceeded

router = APIRouter(prefix="/characters", tags=["characters"])

# Dependency injection
services = ServiceContainer()


# Request/Response models
class CharacterEvaluation(BaseModel):
    spec: str
    n: int


@router.get("/{q}")
async def list_characters(q: int, values: bool = False):
    """All characters mod q with conductor, order, parity and optionally their value tables"""
    try:
        rows = []
        for chi in services.characters.enumerate_characters(q):
            row = services.characters.metadata(chi)
            if values:
                row["values"] = [int(m) if m >= 0 else None for m in services.characters.value_table(chi)]
            rows.append(row)
        return {
            "status_code": 200,
            "message": f"{len(rows)} characters mod {q}",
            "data": services.reports.canonicalize(rows),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/evaluate")
async def evaluate_character(request: CharacterEvaluation):
    """chi(n) as a reduced root of unity e(m / order), or null off the units"""
    try:
        chi = services.characters.parse_spec(request.spec)
        value = services.characters.eval_char(chi, request.n)
        data = {"spec": chi.spec, "n": request.n, "m": None, "order": None, "value": 0j}
        if value is not None:
            m, order = value
            data.update({"m": m, "order": order, "value": services.characters.eval_complex(chi, request.n)})
        return {
            "status_code": 200,
            "message": "Character evaluated successfully",
            "data": services.reports.canonicalize(data),
        }
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
