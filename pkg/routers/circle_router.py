from typing import Optional

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel

from models.circle import BoxSpec
from services.circle_service import DEFAULT_EPS, DEFAULT_SAMPLES
from services.container import ServiceContainer
from services.errors import CapacityExceeded

router = APIRouter(prefix="/circle", tags=["circle"])

# Dependency injection
services = ServiceContainer()


# Request/Response models
class SeriesRequest(BaseModel):
    system: str
    Q: int
    method: str = "multiplicative"


class IntegralRequest(BaseModel):
    system: str
    box: Optional[str] = None
    eps: float = DEFAULT_EPS
    samples: int = DEFAULT_SAMPLES


class AsymptoticRequest(IntegralRequest):
    X: float
    Q: Optional[int] = None


class MajorArcRequest(BaseModel):
    X: float
    degrees: list[int]
    Q: Optional[float] = None


@router.get("/count-primes/{N}")
async def count_primes(N: int):
    """pi(N) and psi(N) from the von Mangoldt sieve"""
    try:
        return {
            "status_code": 200,
            "message": "Primes counted successfully",
            "data": services.reports.canonicalize(services.circle.prime_counts(N)),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/sseries")
async def singular_series(request: SeriesRequest):
    try:
        system = services.forms.parse_system(request.system)
        result = services.circle.singular_series_partial(system, request.Q, request.method)
        return {
            "status_code": 200,
            "message": f"Singular series summed to Q={request.Q}",
            "data": services.reports.canonicalize(result),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/sintegral")
async def singular_integral(request: IntegralRequest):
    try:
        system = services.forms.parse_system(request.system)
        box = BoxSpec.from_text(request.box, system.s)
        result = services.circle.singular_integral_estimate(system, box, request.eps, request.samples)
        return {
            "status_code": 200,
            "message": "Singular integral estimated successfully",
            "data": services.reports.canonicalize(result),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/asymptotic")
async def asymptotic(request: AsymptoticRequest):
    """N_F(X) against the predicted main term"""
    try:
        system = services.forms.parse_system(request.system)
        box = BoxSpec.from_text(request.box, system.s)
        report = services.circle.asymptotic_report(system, request.X, box, request.Q, request.eps, request.samples)
        return {
            "status_code": 200,
            "message": "Asymptotic report assembled",
            "data": services.reports.canonicalize(report),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/major-arcs")
async def major_arcs(request: MajorArcRequest):
    try:
        summary = services.circle.major_arc_summary(request.X, request.degrees, request.Q)
        return {
            "status_code": 200,
            "message": f"{summary.box_count} major arcs",
            "data": services.reports.canonicalize(summary),
        }
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
