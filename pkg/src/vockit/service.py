"""HTTP service exposing the study workflow to the rater UI.

Rater-facing endpoints serve blinded ballot payloads and accept rating
submissions; admin endpoints install a study bundle and read aggregated
results. All errors are structured {code, message} JSON.
"""

from __future__ import annotations

import threading
from dataclasses import asdict
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import study as study_mod
from .study import (
    MCNEMAR_EXACT,
    Rating,
    RatingError,
    RatingsStore,
    Study,
    UnknownBallotError,
    aggregate_majority,
    compare_methods,
    disaggregate,
    study_from_json,
)


class AnswerCell(BaseModel):
    slot: int
    dimension: str
    answer: Literal["yes", "no"]


class RatingPayload(BaseModel):
    ballot_id: str
    rater_id: str
    answers: list[AnswerCell]
    submitted_at: str = ""


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class ServiceState:
    """One installed study plus its ratings store."""

    def __init__(self, store_dir: str | Path, study: Study | None = None):
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.store = RatingsStore(self.store_dir / "ratings.log")
        self.study = study
        self.issue_lock = threading.Lock()

    def require_study(self, study_id: str | None = None) -> Study:
        if self.study is None:
            raise ApiError(404, "no_study", "no study installed")
        if study_id is not None and self.study.design.study_id != study_id:
            raise ApiError(404, "unknown_study", f"unknown study {study_id!r}")
        return self.study

    def install(self, study: Study) -> None:
        self.study = study
        study_mod.save_study(study, self.store_dir / "study.json")


def create_app(state: ServiceState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="voc study service")

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.get("/api/study")
    def get_study_instructions():
        study = state.require_study()
        return {
            "study_id": study.design.study_id,
            "general_comment": study.design.general_comment,
            "dimensions": [
                {"id": d.dim_id, "short_name": d.short_name, "instruction": d.instruction}
                for d in study.design.dimensions
            ],
        }

    @app.get("/api/raters/{rater_id}/next-ballot")
    def next_ballot(rater_id: str):
        study = state.require_study()
        if rater_id not in study.design.raters:
            raise ApiError(404, "unknown_rater", f"unknown rater {rater_id!r}")
        with state.issue_lock:
            ballots = study.ballots_for(rater_id)
            pending = [b for b in ballots if not state.store.has_rating(rater_id, b.ballot_id)]
            payload = pending[0].rater_payload() if pending else None
        return {"ballot": payload, "remaining": len(pending)}

    @app.post("/api/ratings")
    def submit_rating(payload: RatingPayload):
        study = state.require_study()
        rating = Rating(
            ballot_id=payload.ballot_id,
            rater_id=payload.rater_id,
            answers={(c.slot, c.dimension): c.answer == "yes" for c in payload.answers},
            submitted_at=payload.submitted_at,
        )
        ballot = study.ballot(payload.ballot_id)
        try:
            status = state.store.submit(rating, ballot, study.design.dimensions)
        except UnknownBallotError as exc:
            raise ApiError(404, exc.code, str(exc)) from exc
        except study_mod.ConflictingRatingError as exc:
            raise ApiError(409, exc.code, str(exc)) from exc
        except RatingError as exc:
            raise ApiError(400, exc.code, str(exc)) from exc
        return {"status": status}

    @app.get("/api/raters/{rater_id}/progress")
    def progress(rater_id: str):
        study = state.require_study()
        if rater_id not in study.design.raters:
            raise ApiError(404, "unknown_rater", f"unknown rater {rater_id!r}")
        ballots = study.ballots_for(rater_id)
        rated = sum(state.store.has_rating(rater_id, b.ballot_id) for b in ballots)
        return {"rater_id": rater_id, "rated": rated, "total": len(ballots)}

    @app.post("/api/studies")
    def create_study_endpoint(bundle: dict):
        try:
            study = study_from_json(bundle)
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, "bad_study_bundle", f"cannot parse study bundle: {exc}") from exc
        state.install(study)
        return {"status": "installed", "study_id": study.design.study_id,
                "ballots": len(study.ballots)}

    @app.get("/api/studies/{study_id}/aggregate")
    def aggregate(study_id: str, partial: bool = False):
        study = state.require_study(study_id)
        try:
            judgments = aggregate_majority(study, state.store.ratings(), partial=partial)
        except ValueError as exc:
            raise ApiError(409, "incomplete_ratings", str(exc)) from exc
        return {"judgments": [asdict(j) for j in judgments]}

    @app.get("/api/studies/{study_id}/comparisons")
    def comparisons(
        study_id: str,
        method_a: str,
        method_b: str,
        dimension: str,
        test: str = MCNEMAR_EXACT,
        partial: bool = False,
    ):
        study = state.require_study(study_id)
        try:
            judgments = aggregate_majority(study, state.store.ratings(), partial=partial)
            result = compare_methods(judgments, method_a, method_b, dimension, test=test)
        except ValueError as exc:
            raise ApiError(400, "comparison_failed", str(exc)) from exc
        return asdict(result)

    @app.get("/api/studies/{study_id}/disaggregation")
    def disaggregation(study_id: str, partial: bool = False):
        study = state.require_study(study_id)
        try:
            cells = disaggregate(study, state.store.ratings(), partial=partial)
        except ValueError as exc:
            raise ApiError(409, "incomplete_ratings", str(exc)) from exc
        return {"cells": [asdict(c) for c in cells]}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
