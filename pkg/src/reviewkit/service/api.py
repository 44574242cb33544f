"""HTTP surface: a thin JSON layer over :class:`ReviewService`.

Handlers validate payload shape, delegate to the service, and map
domain errors onto status codes via each error's ``http_status``. No
business rule lives here, so every API behavior is testable through
the service layer as well.
"""

from __future__ import annotations

from datetime import datetime

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..comments import advice_list, scaffold_comment
from ..errors import ReviewKitError
from ..timeutil import parse_utc
from ..ueq import (
    analyze_groups,
    format_table,
    responses_from_csv,
    responses_from_json,
    thresholds_from_json,
)
from .core import ReviewService

TOKEN_HEADER = "X-Review-Token"


def _parse_at(payload: dict) -> datetime | None:
    raw = payload.get("at")
    if raw is None:
        return None
    try:
        return parse_utc(raw)
    except (ValueError, TypeError):
        raise HTTPException(status_code=400, detail=f"bad timestamp {raw!r}")


def create_app(service: ReviewService) -> FastAPI:
    app = FastAPI(title="reviewkit", docs_url=None, redoc_url=None)
    app.state.service = service

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_token(
        x_review_token: str | None = Header(default=None, alias=TOKEN_HEADER),
    ) -> None:
        expected = service.config.auth_token
        if expected is not None and x_review_token != expected:
            raise HTTPException(status_code=401, detail="missing or bad token")

    guarded = [Depends(require_token)]

    @app.exception_handler(ReviewKitError)
    async def domain_error_handler(request: Request, exc: ReviewKitError):
        return JSONResponse(
            status_code=getattr(exc, "http_status", 400),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- changes ---------------------------------------------------------

    @app.post("/changes", dependencies=guarded)
    async def create_change(request: Request):
        payload = await request.json()
        change = service.create_change(
            repo_id=payload.get("repo_id", ""),
            author_id=payload["author_id"],
            title=payload.get("title", ""),
            diff_text=payload["diff"],
            anchors=payload.get("anchors"),
            change_id=payload.get("id"),
            status=payload.get("status", "in_review"),
            at=_parse_at(payload),
        )
        return change.to_dict()

    @app.get("/changes/{change_id}", dependencies=guarded)
    def get_change(change_id: str):
        change = service.get_change(change_id)
        body = change.to_dict()
        guide = service.state.guides.get(change_id)
        body["has_guide"] = guide is not None
        body["comments"] = [
            c.to_dict()
            for c in service.state.comments.values()
            if c.change_id == change_id
        ]
        return body

    # -- guide sessions -----------------------------------------------------

    @app.post("/changes/{change_id}/guide/sessions", dependencies=guarded)
    async def start_session(change_id: str, request: Request):
        payload = await request.json()
        session = service.start_guide_session(
            change_id, payload["reviewer_id"], at=_parse_at(payload)
        )
        anchor = service.session_anchor(session.id)
        return {"session": session.to_dict(), "current_anchor": anchor.to_dict()}

    @app.post("/guide/sessions/{session_id}/advance", dependencies=guarded)
    async def advance_session(session_id: str, request: Request):
        payload = await request.json() if await request.body() else {}
        session = service.advance_session(session_id, at=_parse_at(payload))
        body = {"session": session.to_dict()}
        if session.state == "in_progress":
            body["current_anchor"] = service.session_anchor(session_id).to_dict()
        return body

    @app.post("/guide/sessions/{session_id}/bookmarks", dependencies=guarded)
    async def add_bookmark(session_id: str, request: Request):
        payload = await request.json()
        session = service.add_session_bookmark(
            session_id,
            payload["file_path"],
            int(payload["line"]),
            at=_parse_at(payload),
        )
        return {"session": session.to_dict()}

    @app.get("/guide/sessions/{session_id}/report", dependencies=guarded)
    def session_report(session_id: str):
        report = service.session_report(session_id)
        session = service.get_session(session_id)
        return {"session": session.to_dict(), "report": report.to_dict()}

    # -- comments ---------------------------------------------------------

    @app.get("/changes/{change_id}/comment-editor", dependencies=guarded)
    def comment_editor(change_id: str, reviewer_id: str = ""):
        allowed, reason = service.comment_gate(change_id, reviewer_id)
        return {
            "scaffold": scaffold_comment(),
            "advice": [
                item.to_dict()
                for item in advice_list("composing", service.config.advice_catalog)
            ],
            "can_comment": allowed,
            "reason": reason,
        }

    @app.post("/changes/{change_id}/comments", dependencies=guarded)
    async def post_comment(change_id: str, request: Request):
        payload = await request.json()
        comment, report = service.post_comment(
            change_id,
            payload["reviewer_id"],
            problem=payload.get("problem", ""),
            rationale=payload.get("rationale", ""),
            suggestions=payload.get("suggestions"),
            raw_text=payload.get("raw_text"),
            file_path=payload.get("file_path"),
            line=payload.get("line"),
            at=_parse_at(payload),
        )
        return {"comment": comment.to_dict(), "lint": report.to_dict()}

    @app.post("/comments/lint", dependencies=guarded)
    async def lint_endpoint(request: Request):
        from ..comments import lint_comment

        payload = await request.json()
        report = lint_comment(
            payload.get("raw_text", ""),
            patterns=service.config.destructive_patterns,
        )
        return report.to_dict()

    @app.get("/changes/{change_id}/snippets", dependencies=guarded)
    def snippets(change_id: str, q: str = "", k: int = 5):
        return {"results": service.search_change_snippets(change_id, q, k)}

    # -- experts -----------------------------------------------------------

    @app.get("/changes/{change_id}/experts", dependencies=guarded)
    def experts(change_id: str, k: int = 5):
        ranked = service.rank_experts(change_id, k=k)
        return {
            "experts": [
                {"reviewer_id": reviewer_id, "score": score}
                for reviewer_id, score in ranked
            ]
        }

    @app.post("/expert-requests", dependencies=guarded)
    async def expert_requests(request: Request):
        payload = await request.json()
        created = service.request_expert(
            payload["requester_id"],
            payload["expert_id"],
            payload.get("subject", "review"),
            payload["subject_id"],
            at=_parse_at(payload),
        )
        return created.to_dict()

    # -- assignment & heartbeats -----------------------------------------

    @app.post("/assignments", dependencies=guarded)
    async def assignments(request: Request):
        payload = await request.json()
        assignment = service.assign_change(
            payload["change_id"], at=_parse_at(payload)
        )
        return assignment.to_dict()

    @app.post("/sessions/{session_id}/heartbeat", dependencies=guarded)
    async def session_heartbeat(session_id: str, request: Request):
        payload = await request.json()
        timer, reminders = service.record_heartbeat(
            session_id,
            float(payload.get("delta_seconds", 0.0)),
            at=_parse_at(payload),
        )
        return {
            "timer": timer.to_dict(),
            "reminders": [r.to_dict() for r in reminders],
        }

    # -- questionnaire ------------------------------------------------------

    @app.post("/ueq/analyze", dependencies=guarded)
    async def ueq_analyze(request: Request):
        payload = await request.json()
        if "groups" in payload:
            groups = {
                name: responses_from_json(items)
                for name, items in payload["groups"].items()
            }
        elif "csv" in payload:
            groups = {"all": responses_from_csv(payload["csv"])}
        else:
            groups = {"all": responses_from_json(payload.get("responses", []))}
        thresholds = service.config.ueq_thresholds
        if payload.get("thresholds"):
            thresholds = thresholds_from_json(payload["thresholds"])
        results = analyze_groups(groups, service.config.ueq_item_map, thresholds)
        body = {
            name: [r.to_dict() for r in scale_results]
            for name, scale_results in results.items()
        }
        return {"results": body, "table": format_table(results)}

    return app
