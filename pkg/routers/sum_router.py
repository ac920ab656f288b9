from typing import List, Optional

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel

from models.arith import CyclotomicTally
from models.sums import ThetaMode
from services.container import ServiceContainer
from services.errors import CapacityExceeded

router = APIRouter(prefix="/sums", tags=["sums"])

# Dependency injection
services = ServiceContainer()


# Request/Response models
class SumRequest(BaseModel):
    system: str
    q: int
    a: Optional[List[int]] = None
    chi: Optional[List[str]] = None


class GaussRequest(SumRequest):
    method: str = "factored"


class CauchyRequest(SumRequest):
    literal: bool = False


class NuRequest(BaseModel):
    system: str
    q: int
    chi: Optional[List[str]] = None
    method: str = "auto"


class CompleteSumRequest(BaseModel):
    form: str
    q: int
    u: int = 1


class ExponentScanRequest(BaseModel):
    system: str
    primes: str = "11..97"
    dim_v: int
    seed: int = 0
    random_chars: bool = False
    theta_mode: Optional[ThetaMode] = None


@router.post("/gauss")
async def gauss_sum(request: GaussRequest):
    """C_F(q, a; chi) with its exact tally"""
    try:
        inst = services.instance(request.system, request.q, request.a, request.chi)
        methods = {
            "factored": services.expsums.gauss_sum,
            "crt": services.expsums.gauss_sum_crt,
            "bruteforce": services.expsums.gauss_sum_bruteforce,
        }
        if request.method not in methods:
            raise ValueError(f"Unknown method {request.method!r}; use factored, crt or bruteforce")
        report = methods[request.method](inst)
        return {
            "status_code": 200,
            "message": "Gauss sum computed successfully",
            "data": services.reports.canonicalize(report.summary()),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/crt-check")
async def crt_check(request: SumRequest):
    """CRT product against brute force; ok when the tallies agree"""
    try:
        inst = services.instance(request.system, request.q, request.a, request.chi)
        crt = services.expsums.gauss_sum_crt(inst)
        brute = services.expsums.gauss_sum_bruteforce(inst)
        if crt.tally is not None and brute.tally is not None:
            equal = crt.tally.same_as(brute.tally)
        else:
            equal = abs(crt.value - brute.value) <= 1e-9 * max(1.0, brute.magnitude)
        return {
            "status_code": 200,
            "message": "CRT check completed",
            "data": services.reports.canonicalize({"ok": equal, "crt": crt.summary(), "bruteforce": brute.summary()}),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/cauchy-check")
async def cauchy_check(request: CauchyRequest):
    try:
        inst = services.instance(request.system, request.q, request.a, request.chi)
        check = services.expsums.cauchy_fourth_check(inst, literal=request.literal)
        return {
            "status_code": 200,
            "message": "Cauchy check completed",
            "data": services.reports.canonicalize(check),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/esum")
async def complete_sum(request: CompleteSumRequest):
    """Normalized complete sum E_F(q)"""
    try:
        form = services.forms.as_form(services.forms.parse_polynomial(request.form))
        value = services.expsums.normalized_complete_sum(form, request.q, request.u)
        return {
            "status_code": 200,
            "message": "Complete sum computed successfully",
            "data": services.reports.canonicalize({"q": request.q, "value": value, "magnitude": abs(value)}),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/nu")
async def nu(request: NuRequest):
    try:
        system = services.forms.parse_system(request.system)
        chars = services.character_system(request.chi, system.s, request.q)
        result = services.expsums.nu_tally(system, request.q, chars, request.method)
        if isinstance(result, CyclotomicTally):
            value, tally = services.arith.tally_value(result), result
        else:
            value, tally = complex(result), None
        return {
            "status_code": 200,
            "message": "nu computed successfully",
            "data": services.reports.canonicalize({"q": request.q, "value": value, "tally": tally}),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@router.post("/exponent-scan")
async def exponent_scan(request: ExponentScanRequest):
    """One row per prime: empirical exponent log_q |C| against the theoretical one"""
    try:
        system = services.forms.parse_system(request.system)
        rows = services.expsums.exponent_scan(
            system,
            services.arith.prime_list(request.primes),
            request.dim_v,
            seed=request.seed,
            random_characters=request.random_chars,
            mode=request.theta_mode,
        )
        return {
            "status_code": 200,
            "message": f"Scanned {len(rows)} primes",
            "data": services.reports.canonicalize(rows),
        }
    except CapacityExceeded as e:
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
