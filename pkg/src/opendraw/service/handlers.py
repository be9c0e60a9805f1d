"""Request handlers shared by the HTTP app and the in-process CLI client."""

from __future__ import annotations

from .. import sweep
from . import schemas


def _stringify(metadata: dict) -> dict[str, str]:
    return {k: str(v) for k, v in metadata.items()}


def reliability(req: schemas.ReliabilityRequest) -> schemas.SweepResponse:
    meta, rows = sweep.run_reliability(req.model_dump())
    return schemas.SweepResponse(
        metadata=_stringify(meta), rows=[schemas.SweepRow(**r) for r in rows]
    )


def critical_tension(req: schemas.CriticalTensionRequest) -> schemas.SweepResponse:
    meta, rows = sweep.run_critical_tension(req.model_dump())
    return schemas.SweepResponse(
        metadata=_stringify(meta), rows=[schemas.SweepRow(**r) for r in rows]
    )


def first_passage(req: schemas.FirstPassageRequest) -> schemas.FirstPassageResponse:
    meta, rows = sweep.run_first_passage(req.model_dump())
    return schemas.FirstPassageResponse(
        metadata=_stringify(meta), rows=[schemas.FirstPassageRow(**r) for r in rows]
    )


def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
    meta, rows = sweep.run_validation(seed=req.seed, level=req.level)
    return schemas.ValidateResponse(
        metadata=_stringify(meta),
        rows=[schemas.ValidateCheck(**r) for r in rows],
        passed=all(r["passed"] for r in rows),
    )
