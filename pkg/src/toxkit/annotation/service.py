"""HTTP front end for annotation campaigns.

Endpoints (JSON, UTF-8):

* ``GET /api/campaigns/{id}/next?annotator={aid}`` -> 200 task | 204
* ``POST /api/campaigns/{id}/labels`` -> 201 | 422 {rule, detail}
* ``GET /api/campaigns/{id}/progress``
* ``GET /api/campaigns/{id}/export`` -> label JSON-lines stream
* ``/media/...`` static audio referenced by tasks
"""

from __future__ import annotations

import json
import time

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..errors import ValidationError
from .campaign import AnnotationResponse, Campaign, export_labels


def create_app(campaigns: dict[str, Campaign], media_dir=None) -> FastAPI:
    app = FastAPI(title="toxkit annotation service")

    def get_campaign(campaign_id: str) -> Campaign:
        if campaign_id not in campaigns:
            raise ValidationError(f"unknown campaign {campaign_id!r}")
        return campaigns[campaign_id]

    @app.exception_handler(ValidationError)
    async def on_validation_error(request, exc):
        return JSONResponse(
            status_code=422,
            content={"rule": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/api/campaigns/{campaign_id}/next")
    def next_task(campaign_id: str, annotator: str):
        task = get_campaign(campaign_id).next_task(annotator)
        if task is None:
            return Response(status_code=204)
        return task.to_json()

    @app.post("/api/campaigns/{campaign_id}/labels", status_code=201)
    async def submit(campaign_id: str, body: dict):
        campaign = get_campaign(campaign_id)
        resp = AnnotationResponse(
            task_id=body.get("task_id", ""),
            annotator_id=body.get("annotator_id", ""),
            verdict=body.get("verdict", ""),
            categories=tuple(body.get("categories", ())),
            toxic_spans=tuple(body.get("toxic_spans", ())),
            effects=tuple(body.get("effects", ())),
            timestamp=body.get("timestamp") or time.time(),
        )
        seq = campaign.submit_label(resp)
        return {"ok": True, "seq": seq}

    @app.get("/api/campaigns/{campaign_id}/progress")
    def progress(campaign_id: str):
        return get_campaign(campaign_id).progress()

    @app.get("/api/campaigns/{campaign_id}/export")
    def export(campaign_id: str):
        rows, summary = export_labels(get_campaign(campaign_id))
        lines = [json.dumps(r, sort_keys=True) for r in rows]
        lines.append(json.dumps({"summary": summary}, sort_keys=True))
        return PlainTextResponse("\n".join(lines) + "\n", media_type="application/x-ndjson")

    if media_dir is not None:
        app.mount("/media", StaticFiles(directory=str(media_dir)), name="media")
    return app
