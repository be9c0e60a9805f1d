"""FastAPI wrapper exposing the reliability engine to multiple clients.

Root-set and expansion caches live in the process, so a long-running service
amortizes the expensive Hermite root scans across requests.  Domain errors
(bad parameter combinations, infeasible targets) map to 400 responses with
the offending detail; schema violations are FastAPI's usual 422.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import ConfigError, DomainError, OpendrawError
from . import handlers, schemas

app = FastAPI(
    title="opendraw reliability service",
    version=__version__,
    description="Transit nonfracture probabilities for cracked moving webs.",
)


def _guard(fn, req):
    try:
        return fn(req)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=exc.problems) from exc
    except (DomainError, OpendrawError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/v1/reliability", response_model=schemas.SweepResponse)
def reliability(req: schemas.ReliabilityRequest) -> schemas.SweepResponse:
    return _guard(handlers.reliability, req)


@app.post("/v1/critical-tension", response_model=schemas.SweepResponse)
def critical_tension(req: schemas.CriticalTensionRequest) -> schemas.SweepResponse:
    return _guard(handlers.critical_tension, req)


@app.post("/v1/first-passage", response_model=schemas.FirstPassageResponse)
def first_passage(req: schemas.FirstPassageRequest) -> schemas.FirstPassageResponse:
    return _guard(handlers.first_passage, req)


@app.post("/v1/validate", response_model=schemas.ValidateResponse)
def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
    return _guard(handlers.validate, req)
