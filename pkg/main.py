import logging
from contextlib import asynccontextmanager
from datetime import datetime, timezone

import uvicorn
from fastapi import FastAPI

from config import configure_logging, get_settings
from routers import character_router, circle_router, geometry_router, sum_router

logger = logging.getLogger(__name__)

VERSION = "1.0.0"


@asynccontextmanager
async def lifespan(app: FastAPI):
    # Startup
    configure_logging()
    settings = get_settings()
    logger.info(
        "Starting with work cap %s, tally cap %s, %s worker(s), theta mode %s",
        settings.work_cap,
        settings.tally_cap,
        settings.workers,
        settings.theta_mode.value,
    )

    yield

    # Shutdown
    logger.info("Shutting down")


app = FastAPI(
    title="Multiple Gauss Sums API",
    description="Multiple Gauss sums, their geometry checks and the circle-method main term",
    version=VERSION,
    lifespan=lifespan,
)

# Include routers
app.include_router(character_router.router)
app.include_router(sum_router.router)
app.include_router(geometry_router.router)
app.include_router(circle_router.router)


@app.get("/")
async def root():
    return {
        "status_code": 200,
        "message": "Welcome to Multiple Gauss Sums API",
        "data": {"version": VERSION, "service": "Multiple Gauss Sums API"},
    }


@app.get("/health")
async def health_check():
    return {
        "status_code": 200,
        "message": "Service is healthy",
        "data": {"status": "healthy", "timestamp": datetime.now(timezone.utc).isoformat()},
    }


if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=2000)
