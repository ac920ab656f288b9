from typing import List, Optional

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel

from models.geometry import VarietySpec
from services.container import ServiceContainer
from services.errors import CapacityExceeded
from services.geometry_service import CHAIN_PRIMES, CODIM_PRIMES, DEFAULT_PRIMES

router = APIRouter(prefix="/geometry", tags=["geometry"])

# Dependency injection
services = ServiceContainer()


# Request/Response models
class DimRequest(BaseModel):
    system: str
    locus: str = "singular"
    primes: Optional[List[int]] = None


class SystemRequest(BaseModel):
    system: str
    primes: Optional[List[int]] = None


@router.post("/dim")
async def dimension(request: DimRequest):
    """Dimension of V or of the singular locus V* from point counts mod several primes"""
    try:
        system = services.forms.parse_system(request.system)
        if request.locus == "singular":
            variety = services.geometry.singular_locus_spec(system)
        elif request.locus == "zero":
            variety = VarietySpec(n=system.s, equations=system.forms, label="V")
        else:
            raise ValueError(f"Unknown locus {request.locus!r}; use zero or singular")
        estimate = services.geometry.dim_estimate(variety, request.primes or DEFAULT_PRIMES, system.degrees)
        return {
            "status_code": 200,
            "message": f"dim {variety.label} = {estimate.dim}",
            "data": services.reports.canonicalize({"locus": variety.label, **estimate.model_dump()}),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/chain-check")
async def chain_check(request: SystemRequest):
    try:
        system = services.forms.parse_system(request.system)
        report = services.geometry.verify_chain_claims(system, request.primes or CHAIN_PRIMES)
        return {
            "status_code": 200,
            "message": "Chain claims hold" if report.all_ok else "Chain claims failed",
            "data": services.reports.canonicalize(report),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/codim-check")
async def codim_check(request: SystemRequest):
    try:
        system = services.forms.parse_system(request.system)
        report = services.geometry.verify_codim_proposition(system, request.primes or CODIM_PRIMES)
        return {
            "status_code": 200,
            "message": "Codimension bound holds" if report.ok else "Codimension bound failed",
            "data": services.reports.canonicalize(report),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
