"""HTTP preview service: upload a subject, assign example regions, render.

Sessions live in memory (optionally mirrored to a directory); mattes are
cached per session by content hash, so plan tweaks that leave a region's
inputs unchanged re-render without re-solving the matte.  One render may
be in flight per session; distinct sessions render independently.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Response, UploadFile
from fastapi.responses import JSONResponse
from PIL import Image as PILImage

from .assets import AssetResolver, CatalogEntry, MakeupPlan
from .compositor import apply_plan, matte_cache_key
from .errors import AssetError, MakeupError, PlanError
from .imaging import from_uint8, png_bytes
from .matting import default_band
from .semantics import (
    REGION_GROUPS,
    LandmarkSet,
    SemanticRegion,
    parse_landmarks,
    region_contour,
)

SUBJECT_REF = "__subject__"


@dataclass
class Session:
    identifier: str
    subject: np.ndarray
    subject_png: bytes
    landmarks: LandmarkSet
    landmarks_doc: dict
    plan: MakeupPlan
    matte_cache: dict = field(default_factory=dict)
    result_png: bytes | None = None
    timings: dict | None = None
    render_status: str = "idle"      # idle | running | done | failed
    render_error: str | None = None
    render_count: int = 0
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionResolver(AssetResolver):
    """Asset resolver that serves the uploaded subject from memory."""

    def __init__(self, root, catalog, session: Session):
        super().__init__(root, catalog)
        self.session = session

    def image(self, ref: str) -> np.ndarray:
        if ref == SUBJECT_REF:
            return self.session.subject
        return super().image(ref)

    def landmarks(self, ref: str):
        if ref == SUBJECT_REF:
            return self.session.landmarks
        return super().landmarks(ref)


def _decode_upload(data: bytes) -> np.ndarray:
    with PILImage.open(io.BytesIO(data)) as pil:
        return from_uint8(np.asarray(pil.convert("RGB")))


def create_app(assets_root, catalog: list[CatalogEntry] | None = None,
               persist_dir=None, render_fn=None) -> FastAPI:
    app = FastAPI(title="facemakeup preview service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()
    catalog = catalog or []
    render_fn = render_fn or apply_plan
    persist = Path(persist_dir) if persist_dir else None

    def resolver_for(session: Session) -> SessionResolver:
        return SessionResolver(assets_root, catalog, session)

    def persist_session(session: Session) -> None:
        if persist is None:
            return
        root = persist / session.identifier
        root.mkdir(parents=True, exist_ok=True)
        (root / "subject.png").write_bytes(session.subject_png)
        (root / "landmarks.json").write_text(json.dumps(session.landmarks_doc))
        (root / "plan.json").write_text(json.dumps(session.plan.to_document()))

    def restore_sessions() -> None:
        if persist is None or not persist.exists():
            return
        for directory in sorted(persist.iterdir()):
            subject_file = directory / "subject.png"
            landmarks_file = directory / "landmarks.json"
            if not (subject_file.exists() and landmarks_file.exists()):
                continue
            raw = subject_file.read_bytes()
            doc = json.loads(landmarks_file.read_text())
            plan_doc = {}
            plan_file = directory / "plan.json"
            if plan_file.exists():
                plan_doc = json.loads(plan_file.read_text())
            plan = MakeupPlan.from_document(plan_doc)
            plan.subject, plan.landmarks = SUBJECT_REF, SUBJECT_REF
            sessions[directory.name] = Session(
                identifier=directory.name, subject=_decode_upload(raw),
                subject_png=raw, landmarks=parse_landmarks(doc),
                landmarks_doc=doc, plan=plan)

    restore_sessions()

    def get_session(session_id: str) -> Session | None:
        with store_lock:
            return sessions.get(session_id)

    def validate_plan(session: Session, plan: MakeupPlan) -> tuple[bool, list[dict]]:
        resolver = resolver_for(session)
        report = []
        ok = True
        for assignment in plan.assignments:
            entry: dict = {"region": assignment.region.value, "ok": True}
            try:
                resolver.example_image(assignment)
                mask = resolver.subject_mask(plan, assignment.region,
                                             session.landmarks)
                resolver.example_mask(assignment)
                band = assignment.band or default_band(
                    session.subject.shape[1], session.subject.shape[0])
                key = matte_cache_key(session.subject, mask, band,
                                      assignment.region)
                entry["matte_cached"] = key in session.matte_cache
            except MakeupError as exc:
                ok = False
                entry.update(ok=False, error=f"{type(exc).__name__}: {exc}")
            report.append(entry)
        return ok, report

    @app.get("/catalog")
    def get_catalog():
        return [{"id": e.identifier, "name": e.display_name,
                 "regions": sorted(e.masks) or sorted(
                     r.value for r in REGION_GROUPS)} for e in catalog]

    @app.post("/sessions", status_code=201)
    async def create_session(subject: UploadFile, landmarks: UploadFile):
        image_raw = await subject.read()
        landmarks_raw = await landmarks.read()
        try:
            img = _decode_upload(image_raw)
        except Exception:
            return JSONResponse({"error": "subject is not a decodable image"},
                                status_code=400)
        try:
            doc = json.loads(landmarks_raw)
            parsed = parse_landmarks(doc)
        except json.JSONDecodeError:
            return JSONResponse({"error": "landmarks are not valid JSON"},
                                status_code=400)
        except MakeupError as exc:
            return JSONResponse({"error": f"{type(exc).__name__}: {exc}"},
                                status_code=400)
        if (parsed.height, parsed.width) != img.shape[:2]:
            return JSONResponse(
                {"error": "landmark dimensions do not match the image"},
                status_code=400)

        session = Session(
            identifier=uuid.uuid4().hex, subject=img, subject_png=image_raw,
            landmarks=parsed, landmarks_doc=doc,
            plan=MakeupPlan(subject=SUBJECT_REF, landmarks=SUBJECT_REF))
        with store_lock:
            sessions[session.identifier] = session
        persist_session(session)
        return {"session": session.identifier}

    @app.get("/sessions/{session_id}")
    def get_session_info(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        contours = {
            region.value: region_contour(session.landmarks, region).tolist()
            for region in REGION_GROUPS
        }
        return {
            "session": session.identifier,
            "created": session.created,
            "updated": session.updated,
            "plan": session.plan.to_document(),
            "render": {"status": session.render_status,
                       "count": session.render_count,
                       "error": session.render_error},
            "contours": contours,
        }

    @app.put("/sessions/{session_id}/plan")
    def update_plan(session_id: str, document: dict):
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        try:
            plan = MakeupPlan.from_document(document)
        except PlanError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        plan.subject, plan.landmarks = SUBJECT_REF, SUBJECT_REF
        ok, report = validate_plan(session, plan)
        if not ok:
            return JSONResponse({"accepted": False, "regions": report},
                                status_code=422)
        with session.lock:
            session.plan = plan
            session.updated = time.time()
        persist_session(session)
        return {"accepted": True, "regions": report}

    def run_render(session: Session, plan: MakeupPlan) -> None:
        try:
            result = render_fn(plan, resolver_for(session), session.matte_cache)
            with session.lock:
                session.result_png = png_bytes(result.image)
                session.timings = result.timing_report()
                session.render_status = "done"
                session.render_count += 1
                session.updated = time.time()
        except Exception as exc:  # surface, never wedge the session
            with session.lock:
                session.render_status = "failed"
                session.render_error = f"{type(exc).__name__}: {exc}"
        finally:
            with session.lock:
                if session.render_status == "running":
                    session.render_status = "failed"

    @app.post("/sessions/{session_id}/render", status_code=202)
    def start_render(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with session.lock:
            if session.render_status == "running":
                return JSONResponse({"error": "render already in flight"},
                                    status_code=409)
            session.render_status = "running"
            session.render_error = None
            plan = session.plan
        thread = threading.Thread(target=run_render, args=(session, plan),
                                  daemon=True)
        thread.start()
        return {"render": session.render_count + 1, "status": "running"}

    @app.get("/sessions/{session_id}/result.png")
    def get_result(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        if session.result_png is None:
            status = 409 if session.render_status == "running" else 404
            return JSONResponse({"error": f"no result ({session.render_status})"},
                                status_code=status)
        return Response(content=session.result_png, media_type="image/png")

    @app.get("/sessions/{session_id}/timings")
    def get_timings(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        if session.timings is None:
            return JSONResponse({"error": "nothing rendered yet"}, status_code=404)
        return session.timings

    return app
