"""HTTP surface for the edit service, consumed by the web UI and scripts."""

from __future__ import annotations

import base64
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import BackendError, MvinpaintError, ObjParseError, SessionBusy, SessionNotFound
from .images import color_png_bytes
from .masks import Primitive
from .mesh import mesh_to_obj
from .metrics import mask_coverage
from .service import DEFAULT_STEPS, EditService


class PrimitiveModel(BaseModel):
    kind: str
    center: list[float] = Field(min_length=3, max_length=3)
    size: list[float] = Field(min_length=3, max_length=3)
    rotation: list[float] = Field(default=[0.0, 0.0, 0.0], min_length=3, max_length=3)

    def to_primitive(self) -> Primitive:
        return Primitive(self.kind, tuple(self.center), tuple(self.size), tuple(self.rotation))


class MaskBody(BaseModel):
    primitives: list[PrimitiveModel]


class InpaintBody(BaseModel):
    prompt: str
    seed: int = 0
    steps: int = DEFAULT_STEPS
    guidance: float | None = None
    paste_back: bool = False


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _preview_payload(session) -> dict:
    return {
        "masked": _b64(session.preview_masked.png_bytes()),
        "mask": _b64(session.preview_mask.png_bytes()),
        "coverage": list(mask_coverage(session.preview_mask.image)),
    }


def create_app(service: EditService, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="mvinpaint edit service")

    @app.exception_handler(MvinpaintError)
    def _handle(request: Request, exc: MvinpaintError):
        status = 400
        body = {"error": str(exc)}
        if isinstance(exc, SessionNotFound):
            status = 404
        elif isinstance(exc, SessionBusy):
            status = 409
        elif isinstance(exc, BackendError):
            status = 502
            body["retries"] = exc.retries
        elif isinstance(exc, ObjParseError):
            body["line"] = exc.line
        return JSONResponse(status_code=status, content=body)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "sessions": service.session_count()}

    @app.post("/api/session")
    async def create_session(request: Request):
        mesh_bytes = await request.body()
        sid = service.create_session(mesh_bytes)
        return {"session_id": sid}

    @app.get("/api/session/{sid}")
    def session_state(sid: str):
        s = service.get(sid)
        return {
            "session_id": s.session_id,
            "num_vertices": s.mesh.num_vertices,
            "num_faces": s.mesh.num_faces,
            "primitives": [p.to_json() for p in s.mask.primitives] if s.mask else [],
            "prompt": s.prompt,
            "seed": s.seed,
            "has_mask": s.mask is not None,
            "has_result": s.result is not None,
            "result_id": s.result.result_id if s.result else None,
            "busy": s.busy,
        }

    @app.get("/api/session/{sid}/mesh")
    def session_mesh(sid: str):
        s = service.get(sid)
        return Response(content=mesh_to_obj(s.mesh), media_type="text/plain")

    @app.put("/api/session/{sid}/mask")
    def set_mask(sid: str, body: MaskBody):
        try:
            service.set_mask(sid, [p.to_primitive() for p in body.primitives])
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return _preview_payload(service.get(sid))

    @app.delete("/api/session/{sid}/mask")
    def clear_mask(sid: str):
        service.clear_mask(sid)
        return _preview_payload(service.get(sid))

    @app.get("/api/session/{sid}/preview")
    def preview(sid: str):
        s = service.get(sid)
        if s.preview_masked is None:
            return JSONResponse(status_code=404, content={"error": "session has no mask yet"})
        return _preview_payload(s)

    @app.post("/api/session/{sid}/inpaint")
    def inpaint(sid: str, body: InpaintBody):
        result = service.inpaint(sid, body.prompt, body.seed, steps=body.steps,
                                 guidance=body.guidance, paste_back=body.paste_back)
        return {"result_id": result.result_id}

    @app.get("/api/session/{sid}/result")
    def result(sid: str):
        s = service.get(sid)
        if s.result is None:
            return JSONResponse(status_code=404, content={"error": "no result yet"})
        r = s.result
        return {
            "result_id": r.result_id,
            "grid": _b64(color_png_bytes(r.grid)),
            "views": [_b64(color_png_bytes(img)) for img, _ in r.views],
            "poses": [pose.to_json() for _, pose in r.views],
            "preservation": r.preservation,
            "timing": r.timing,
            "backend": r.backend_meta,
        }

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
