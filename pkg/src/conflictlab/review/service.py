"""HTTP service for browsing observations, labeling, and expert scoring.

The service is a thin transport layer: every rule lives in the domain
modules (:mod:`conflictlab.review.scoring`, :mod:`conflictlab.review.store`,
:mod:`conflictlab.evalrun`) and this module only maps HTTP requests onto
them and domain errors onto status codes.

Durability contract: a mutation is acknowledged (2xx) only after its
event is fsynced to the append-only log, and retrying a mutation with
the same ``idempotency_key`` returns the original acknowledgement
instead of double-recording.
"""

from __future__ import annotations

import datetime as _dt
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import (
    ConflictLabError,
    EmptyRun,
    IoFailure,
    MissingFrame,
    MissingTargetText,
    NoScores,
    RangeViolation,
    UnknownObservation,
    UnknownRun,
)
from ..evalrun import RunRecord, report_payload
from ..model import DatasetManifest, Observation, Split
from ..workspace import Workspace
from .scoring import LabelEvent, ReviewScore, ScoreTarget, aggregate_scores
from .store import EventStore

__all__ = ["create_app", "app_from_workspace", "record_score", "record_label"]

#: Domain error → HTTP status. Anything unlisted is a 500.
_HTTP_STATUS: dict[type, int] = {
    UnknownRun: 404,
    UnknownObservation: 404,
    MissingFrame: 404,
    NoScores: 404,
    MissingTargetText: 409,
    EmptyRun: 409,
    RangeViolation: 422,
    IoFailure: 500,
}


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# -- domain operations (transport-independent) ----------------------------


def record_label(
    store: EventStore,
    manifest: DatasetManifest,
    event: LabelEvent,
    idempotency_key: str | None = None,
) -> dict:
    """Validate and durably record one annotator label."""
    if event.observation_id not in manifest.by_id():
        raise UnknownObservation(
            f"no observation {event.observation_id!r} in manifest"
        )
    return store.append_label(event, idempotency_key)


def record_score(
    store: EventStore,
    manifest: DatasetManifest,
    runs: Mapping[str, RunRecord],
    score: ReviewScore,
    idempotency_key: str | None = None,
) -> dict:
    """Validate and durably record one rubric score.

    The score must name a known run and observation, and the run's
    verdict for that observation must actually carry the text being
    scored — there is nothing to review otherwise.
    """
    run = runs.get(score.run_id)
    if run is None:
        raise UnknownRun(f"no run {score.run_id!r}")
    if score.observation_id not in manifest.by_id():
        raise UnknownObservation(
            f"no observation {score.observation_id!r} in manifest"
        )
    verdict = next(
        (v for v in run.verdicts if v.observation_id == score.observation_id), None
    )
    if verdict is None:
        raise MissingTargetText(
            f"run {score.run_id!r} has no verdict for "
            f"observation {score.observation_id!r}"
        )
    text = (
        verdict.explanation
        if score.target is ScoreTarget.EXPLANATION
        else verdict.recommendation
    )
    if not text:
        raise MissingTargetText(
            f"verdict for {score.observation_id!r} in run {score.run_id!r} "
            f"carries no {score.target.value} to score"
        )
    return store.append_score(score, idempotency_key)


# -- request bodies --------------------------------------------------------


class LabelBody(BaseModel):
    annotator_id: str
    observation_id: str
    label: str
    submitted_at: Optional[str] = None
    idempotency_key: Optional[str] = None


class ScoreBody(BaseModel):
    reviewer_id: str
    run_id: str
    observation_id: str
    target: str
    clarity: int
    accuracy: int
    practical_relevance: int
    submitted_at: Optional[str] = None
    idempotency_key: Optional[str] = None


# -- observation presentation ----------------------------------------------


def _observation_summary(obs: Observation) -> dict:
    return {
        "id": obs.id,
        "split": None if obs.split is None else obs.split.value,
        "ground_truth": None if obs.ground_truth is None else obs.ground_truth.wire,
        "provenance": obs.provenance.value,
        "scenario_ref": obs.scenario_ref,
        "frame_count": len(obs.frames),
    }


def _frame_bytes(obs: Observation, index: int, image_root: Path | None) -> bytes:
    frame = obs.frames[index]
    if frame.image_bytes is not None:
        return frame.image_bytes
    if frame.image_ref is None:
        raise MissingFrame(f"frame {index} of {obs.id} has no image")
    ref = Path(frame.image_ref)
    path = ref if ref.is_absolute() else (image_root or Path(".")) / ref
    try:
        return path.read_bytes()
    except OSError as exc:
        raise MissingFrame(f"cannot read frame {index} of {obs.id}: {exc}") from exc


# -- application factory ----------------------------------------------------


def create_app(
    manifest: DatasetManifest,
    runs: Mapping[str, RunRecord] | Iterable[RunRecord],
    store: EventStore,
    *,
    image_root: Path | str | None = None,
    ui_dir: Path | str | None = None,
    cors_origins: Sequence[str] = ("*",),
) -> FastAPI:
    """Build the review API around an in-memory manifest, runs, and store."""
    if not isinstance(runs, Mapping):
        runs = {run.run_id: run for run in runs}
    run_map: dict[str, RunRecord] = dict(runs)
    obs_index = manifest.by_id()
    root = None if image_root is None else Path(image_root)

    app = FastAPI(title="conflictlab review", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _handle(request: Request, exc: ConflictLabError) -> JSONResponse:
        status = 500
        for exc_type, code in _HTTP_STATUS.items():
            if isinstance(exc, exc_type):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    app.add_exception_handler(ConflictLabError, _handle)

    # -- read side --------------------------------------------------------

    @app.get("/api/meta")
    def meta() -> dict:
        return {
            "observations": len(manifest.observations),
            "runs": sorted(run_map),
            "splits": {k: dict(v) for k, v in manifest.split_counts.items()},
        }

    @app.get("/api/observations")
    def list_observations(
        split: Optional[str] = None,
        labeled: Optional[bool] = None,
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
    ) -> dict:
        selected = sorted(manifest.observations, key=lambda o: o.id)
        if split is not None:
            try:
                want = Split(split)
            except ValueError:
                raise RangeViolation(
                    f"split must be one of "
                    f"{[s.value for s in Split]}, got {split!r}"
                ) from None
            selected = [o for o in selected if o.split is want]
        if labeled is not None:
            selected = [o for o in selected if (o.ground_truth is not None) == labeled]
        total = len(selected)
        start = (page - 1) * page_size
        items = selected[start : start + page_size]
        return {
            "items": [_observation_summary(o) for o in items],
            "total": total,
            "page": page,
            "page_size": page_size,
        }

    @app.get("/api/observations/{obs_id}/frames/{index}")
    def get_frame(obs_id: str, index: int) -> Response:
        obs = obs_index.get(obs_id)
        if obs is None:
            raise UnknownObservation(f"no observation {obs_id!r}")
        if not 0 <= index < len(obs.frames):
            raise MissingFrame(f"{obs_id} has no frame {index}")
        return Response(content=_frame_bytes(obs, index, root), media_type="image/png")

    @app.get("/api/runs")
    def list_runs() -> dict:
        return {
            "runs": [
                {
                    "run_id": run.run_id,
                    "backend_id": run.backend_id,
                    "prompt_id": run.prompt_id,
                    "split": run.split.value,
                    "mode": run.mode.value,
                    "evaluated": len(run.verdicts),
                    "excluded_count": len(run.excluded),
                }
                for _, run in sorted(run_map.items())
            ]
        }

    def _run_or_404(run_id: str) -> RunRecord:
        run = run_map.get(run_id)
        if run is None:
            raise UnknownRun(f"no run {run_id!r}")
        return run

    @app.get("/api/runs/{run_id}/verdicts")
    def run_verdicts(run_id: str) -> dict:
        run = _run_or_404(run_id)
        return {
            "run_id": run.run_id,
            "split": run.split.value,
            "mode": run.mode.value,
            "verdicts": [
                v.to_record()
                for v in sorted(run.verdicts, key=lambda v: v.observation_id)
            ],
            "excluded": [[oid, reason] for oid, reason in sorted(run.excluded)],
        }

    @app.get("/api/runs/{run_id}/aggregate")
    def run_aggregate(run_id: str, target: Optional[str] = None) -> dict:
        run = _run_or_404(run_id)
        chosen: Optional[ScoreTarget] = None
        if target is not None:
            try:
                chosen = ScoreTarget(target)
            except ValueError:
                raise RangeViolation(
                    f"target must be one of "
                    f"{[t.value for t in ScoreTarget]}, got {target!r}"
                ) from None
        scores = store.state.scores_for(run.run_id, chosen)
        result = aggregate_scores(scores)
        result["run_id"] = run.run_id
        result["target"] = None if chosen is None else chosen.value
        return result

    @app.get("/api/reports/{run_id}")
    def run_report(run_id: str) -> dict:
        return report_payload(_run_or_404(run_id))

    # -- write side -------------------------------------------------------

    @app.post("/api/labels")
    def post_label(body: LabelBody) -> dict:
        try:
            event = LabelEvent(
                annotator_id=body.annotator_id,
                observation_id=body.observation_id,
                label=body.label,
                submitted_at=body.submitted_at or _utcnow(),
            )
        except ValueError as exc:
            raise RangeViolation(str(exc)) from exc
        ack = record_label(store, manifest, event, body.idempotency_key)
        return {"ok": True, **ack}

    @app.post("/api/scores")
    def post_score(body: ScoreBody) -> dict:
        try:
            target = ScoreTarget(body.target)
        except ValueError:
            raise RangeViolation(
                f"target must be one of "
                f"{[t.value for t in ScoreTarget]}, got {body.target!r}"
            ) from None
        try:
            score = ReviewScore(
                reviewer_id=body.reviewer_id,
                run_id=body.run_id,
                observation_id=body.observation_id,
                target=target,
                clarity=body.clarity,
                accuracy=body.accuracy,
                practical_relevance=body.practical_relevance,
                submitted_at=body.submitted_at or _utcnow(),
            )
        except ValueError as exc:
            raise RangeViolation(str(exc)) from exc
        ack = record_score(store, manifest, run_map, score, body.idempotency_key)
        return {"ok": True, **ack}

    # -- static UI (after API routes so /api keeps priority) ---------------

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def app_from_workspace(
    workspace: Path | str | Workspace,
    *,
    ui_dir: Path | str | None = None,
    cors_origins: Sequence[str] = ("*",),
) -> FastAPI:
    """Build the review API from a workspace directory on disk."""
    ws = workspace if isinstance(workspace, Workspace) else Workspace(Path(workspace))
    ws.ensure_dirs()
    manifest = ws.load_manifest()
    runs = ws.load_runs()
    store = EventStore(ws.events_path)
    return create_app(
        manifest,
        runs,
        store,
        image_root=ws.root,
        ui_dir=ui_dir,
        cors_origins=cors_origins,
    )
