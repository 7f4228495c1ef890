"""HTTP facade over the engine's oracle interface.

Endpoints (JSON bodies, UTF-8):
    POST /sessions                         create a session, 201
    GET  /sessions                         list session ids
    GET  /sessions/{id}/tasks?limit=n      open tasks, most uncertain first
    POST /sessions/{id}/tasks/{tid}/label  {"class": k}
    GET  /sessions/{id}/tasks/{tid}/image  PNG rendering of the sample
    GET  /sessions/{id}/status             phase / counts / reports
    GET  /ui                               static labeling frontend

Errors use {"error": <code>, "message": <text>}. No auth: local tool.
"""

import uuid
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse

from ..engine import config_from_dict
from ..errors import ConfigError
from .render import render_sample_png
from .session import Session


class ApiError(Exception):
    def __init__(self, status, code, message):
        self.status = status
        self.code = code
        self.message = message


def create_app(ui_dir=None, restore=None):
    app = FastAPI(title="ualearn annotation service")
    sessions = {}
    app.state.sessions = sessions

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "message": exc.message})

    def get_session(session_id):
        session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return session

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            payload = await request.json()
        except Exception:
            raise ApiError(400, "bad_json", "request body must be a JSON object")
        try:
            config = config_from_dict(payload)
        except ConfigError as exc:
            raise ApiError(400, "invalid_config", str(exc))
        if config.oracle != "human":
            raise ApiError(400, "invalid_config",
                           "annotation sessions need oracle: human")
        session = Session(session_id=uuid.uuid4().hex[:16], config=config)
        sessions[session.session_id] = session
        session.start()
        return {"session_id": session.session_id}

    @app.get("/sessions")
    async def list_sessions():
        return {"sessions": sorted(sessions)}

    @app.get("/sessions/{session_id}/status")
    async def status(session_id: str):
        return get_session(session_id).status()

    @app.get("/sessions/{session_id}/tasks")
    async def tasks(session_id: str, limit: int = 10):
        session = get_session(session_id)
        return {
            "tasks": [
                {
                    "task_id": t.task_id,
                    "sample_id": t.sample_id,
                    "uncertainty": t.uncertainty,
                    "method": t.method,
                    "cycle_index": t.cycle_index,
                    "class_names": t.class_names,
                    "status": t.status,
                    "image_url": f"/sessions/{session_id}/tasks/{t.task_id}/image",
                }
                for t in session.open_tasks(limit)
            ]
        }

    @app.post("/sessions/{session_id}/tasks/{task_id}/label")
    async def submit_label(session_id: str, task_id: str, request: Request):
        session = get_session(session_id)
        try:
            payload = await request.json()
        except Exception:
            raise ApiError(422, "bad_json", "body must be JSON like {\"class\": 0}")
        if not isinstance(payload, dict) or "class" not in payload:
            raise ApiError(422, "missing_class", "body must carry a \"class\" field")
        try:
            task = session.submit_label(task_id, payload["class"])
        except KeyError:
            raise ApiError(404, "unknown_task", f"no task {task_id!r}")
        except FileExistsError:
            raise ApiError(409, "already_labeled", f"task {task_id!r} already labeled")
        except ValueError as exc:
            raise ApiError(422, "invalid_class", str(exc))
        return {"task_id": task.task_id, "status": task.status, "label": task.label}

    @app.get("/sessions/{session_id}/tasks/{task_id}/image")
    async def task_image(session_id: str, task_id: str):
        session = get_session(session_id)
        task = session.get_task(task_id)
        if task is None:
            raise ApiError(404, "unknown_task", f"no task {task_id!r}")
        features = session.sample_features(task.sample_id)
        return Response(content=render_sample_png(features), media_type="image/png")

    ui_path = Path(ui_dir) if ui_dir else None

    @app.get("/ui")
    async def ui_index():
        if ui_path is None or not (ui_path / "index.html").exists():
            raise ApiError(404, "no_ui", "frontend bundle not installed")
        return FileResponse(ui_path / "index.html")

    @app.get("/ui/{asset:path}")
    async def ui_asset(asset: str):
        if ui_path is None:
            raise ApiError(404, "no_ui", "frontend bundle not installed")
        target = (ui_path / asset).resolve()
        if not str(target).startswith(str(ui_path.resolve())) or not target.is_file():
            raise ApiError(404, "no_asset", f"no asset {asset!r}")
        return FileResponse(target)

    return app
