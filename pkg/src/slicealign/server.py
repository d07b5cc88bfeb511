"""HTTP service exposing session state, actions, plots, scene and saving.

One process serves one annotator working through one dataset. Mutations
are serialized by a lock, so interleaved reads never observe a
half-applied action; render endpoints work from the session's caches.
Errors carry a structured body {"code", "message"} the UI maps to
pop-ups: 400 for malformed input, 404 for unknown case/slice, 409 for
boundary/no-score conditions, 500 for I/O failures.
"""
from __future__ import annotations

import argparse
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import errors, render
from .dataset import DatasetConfig, DatasetTable, load_config, parse_config, scan
from .session import ACTION_TYPES, METRIC_KINDS, Session

_ERROR_STATUS = {
    errors.MalformedConfig: 400,
    errors.MissingField: 400,
    errors.BadPattern: 400,
    errors.MissingCaptureGroup: 400,
    errors.MalformedCsv: 400,
    errors.InvalidParameter: 400,
    errors.UnknownCase: 404,
    errors.UnknownSlice: 404,
    errors.AtBoundary: 409,
    errors.NoScores: 409,
    errors.EmptyDataset: 409,
    errors.IncompleteCase: 409,
    errors.AmbiguousMatch: 409,
    errors.IoError: 500,
}


def _code(exc: Exception) -> str:
    name = type(exc).__name__
    out = [name[0].lower()]
    for ch in name[1:]:
        if ch.isupper():
            out.append("_")
            out.append(ch.lower())
        else:
            out.append(ch)
    return "".join(out)


class NoDataset(errors.SliceAlignError):
    """Endpoint hit before any dataset was configured."""


class CaseSelectBody(BaseModel):
    case_id: str


class ShiftBody(BaseModel):
    direction: str  # "prev" | "next"


class SliceSelectBody(BaseModel):
    slice_id: str


class ModeBody(BaseModel):
    mode: str


class StepsBody(BaseModel):
    translation_mm: float
    rotation_deg: float


class ActionBody(BaseModel):
    type: str
    frame: Optional[str] = None
    axis: Optional[str] = None
    amount: Optional[float] = None


class ServerContext:
    """Dataset table plus the single live session, guarded by one lock."""

    def __init__(self):
        self.lock = threading.RLock()
        self.config: Optional[DatasetConfig] = None
        self.table: Optional[DatasetTable] = None
        self.session: Optional[Session] = None

    def require_session(self) -> Session:
        if self.session is None:
            raise NoDataset("no dataset configured; upload a config or pass --config")
        return self.session

    def load_dataset(self, config: DatasetConfig) -> None:
        if self.session is not None and self.session.dirty:
            self.session.save_outputs()
        table = scan(config)
        self.config, self.table = config, table
        self.session = Session.load_case(table, config, table.case_ids[0])

    def select_case(self, case_id: str) -> None:
        self.require_session()
        self.session = Session.load_case(self.table, self.config, case_id, previous=self.session)

    def shift_case(self, direction: str) -> None:
        session = self.require_session()
        ids = list(self.table.case_ids)
        idx = ids.index(session.bundle.case_id)
        if direction == "next":
            if idx + 1 >= len(ids):
                raise errors.AtBoundary("already at the last case")
            self.select_case(ids[idx + 1])
        elif direction == "prev":
            if idx == 0:
                raise errors.AtBoundary("already at the first case")
            self.select_case(ids[idx - 1])
        else:
            raise ValueError(f"direction must be 'prev' or 'next', got {direction!r}")


def _metric_payload(session: Session) -> dict:
    try:
        score, best = session.evaluate()
    except (errors.DegenerateInput, errors.EmptyRegion) as e:
        return {"unavailable": str(e)}
    return {"kind": score.kind, "value": score.value, "is_best": best}


def _png(data) -> Response:
    return Response(content=render.encode_png(data), media_type="image/png")


_LANDING = """<!doctype html>
<html><head><title>slicealign</title></head>
<body><h1>slicealign API</h1>
<p>No UI assets found. Build the frontend (see README) or drive the JSON API:</p>
<ul>
<li>GET /api/cases, /api/state, /api/metric, /api/scene</li>
<li>GET /api/plot/main?slice_id=&amp;label=resampled|resultant&amp;format=mask|contour|none</li>
<li>GET /api/plot/support?type=resampled|checkerboard</li>
<li>POST /api/config, /api/case/select, /api/case/shift, /api/slice/select</li>
<li>POST /api/mode, /api/steps, /api/style, /api/action, /api/save</li>
</ul></body></html>"""


def create_app(config: Optional[DatasetConfig] = None, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="slicealign", docs_url=None, redoc_url=None)
    ctx = ServerContext()
    app.state.ctx = ctx
    if config is not None:
        ctx.load_dataset(config)

    @app.exception_handler(errors.SliceAlignError)
    async def _tool_error(request: Request, exc: errors.SliceAlignError):
        if isinstance(exc, NoDataset):
            status = 409
        else:
            status = _ERROR_STATUS.get(type(exc), 400)
        return JSONResponse(status_code=status,
                            content={"code": _code(exc), "message": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"code": "bad_request", "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"code": "bad_request", "message": str(exc)})

    # -- dataset / case ------------------------------------------------------

    @app.post("/api/config")
    async def upload_config(request: Request):
        text = (await request.body()).decode("utf-8", errors="replace")
        with ctx.lock:
            ctx.load_dataset(parse_config(text))
            return {"state": ctx.session.state_summary(),
                    "case_ids": list(ctx.table.case_ids)}

    @app.get("/api/cases")
    def get_cases():
        with ctx.lock:
            ctx.require_session()
            return {"case_ids": list(ctx.table.case_ids)}

    @app.get("/api/state")
    def get_state():
        with ctx.lock:
            return {"state": ctx.require_session().state_summary()}

    @app.post("/api/case/select")
    def case_select(body: CaseSelectBody):
        with ctx.lock:
            ctx.select_case(body.case_id)
            return {"state": ctx.session.state_summary()}

    @app.post("/api/case/shift")
    def case_shift(body: ShiftBody):
        with ctx.lock:
            ctx.shift_case(body.direction)
            return {"state": ctx.session.state_summary()}

    # -- session settings ------------------------------------------------------

    @app.post("/api/slice/select")
    def slice_select(body: SliceSelectBody):
        with ctx.lock:
            session = ctx.require_session()
            session.set_selected(body.slice_id)
            return {"state": session.state_summary()}

    @app.post("/api/mode")
    def set_mode(body: ModeBody):
        with ctx.lock:
            session = ctx.require_session()
            session.set_mode(body.mode)
            return {"state": session.state_summary()}

    @app.post("/api/steps")
    def set_steps(body: StepsBody):
        with ctx.lock:
            session = ctx.require_session()
            session.set_steps(body.translation_mm, body.rotation_deg)
            return {"state": session.state_summary()}

    @app.post("/api/style")
    def set_style(partial: dict):
        with ctx.lock:
            session = ctx.require_session()
            session.update_styles(partial)
            return {"state": session.state_summary()}

    # -- actions and metric ------------------------------------------------------

    @app.post("/api/action")
    def post_action(body: ActionBody):
        if body.type not in ACTION_TYPES:
            raise ValueError(f"action type must be one of {ACTION_TYPES}, got {body.type!r}")
        with ctx.lock:
            session = ctx.require_session()
            if body.type in ("translate", "rotate"):
                if body.frame is None or body.axis is None or body.amount is None:
                    raise ValueError("translate/rotate require frame, axis and amount")
                session.act(body.type, body.frame, body.axis, body.amount)
            else:
                session.act(body.type)
            return {"state": session.state_summary(), "metric": _metric_payload(session)}

    @app.get("/api/metric")
    def get_metric(kind: Optional[str] = Query(default=None)):
        with ctx.lock:
            session = ctx.require_session()
            if kind is not None:
                if kind not in METRIC_KINDS:
                    raise ValueError(f"kind must be one of {METRIC_KINDS}, got {kind!r}")
                session.set_metric_kind(kind)
            return _metric_payload(session)

    # -- plots and scene ------------------------------------------------------

    @app.get("/api/plot/main")
    def plot_main(slice_id: Optional[str] = None, label: str = "resampled",
                  format: str = "mask"):
        with ctx.lock:
            session = ctx.require_session()
            sid = slice_id or session.selected
            s = session.slice_by_id(sid)
            styles = session.styles
            gray = render.window_to_gray(s.data, *styles.slice_window)
            if format == "none":
                return _png(gray.T)
            if label == "resampled":
                mask = session.label_mask(sid)
            elif label == "resultant":
                mask = session.label_mask(sid) & session.positive(sid) & session.overlap(sid)
            else:
                raise ValueError(f"label must be 'resampled' or 'resultant', got {label!r}")
            rgba = render.overlay(gray, mask, styles.label_color, styles.label_opacity,
                                  fmt=format, line_width=styles.contour_width)
            return _png(rgba.transpose(1, 0, 2))

    @app.get("/api/plot/support")
    def plot_support(type: str = "resampled", slice_id: Optional[str] = None):
        with ctx.lock:
            session = ctx.require_session()
            sid = slice_id or session.selected
            styles = session.styles
            resampled = session.resampled(sid)
            res_gray = render.window_to_gray(resampled.values, *styles.resampled_window)
            res_gray[~session.positive(sid)] = 0    # positive mask keeps plots consistent
            if type == "resampled":
                return _png(res_gray.T)
            if type == "checkerboard":
                s = session.slice_by_id(sid)
                slice_gray = render.window_to_gray(s.data, *styles.slice_window)
                return _png(render.checkerboard(slice_gray, res_gray, styles.checker_width).T)
            raise ValueError(f"type must be 'resampled' or 'checkerboard', got {type!r}")

    @app.get("/api/scene")
    def get_scene():
        with ctx.lock:
            session = ctx.require_session()
            entries = [(s, session.current_transform(s.id)) for s in session.slices]
            return render.scene(session.volume, entries, session.selected, session.mode)

    @app.post("/api/save")
    def save():
        with ctx.lock:
            session = ctx.require_session()
            session.save_outputs()
            return {"state": session.state_summary()}

    # -- static UI ------------------------------------------------------

    assets = Path(ui_dir) if ui_dir else None
    if assets is not None and (assets / "index.html").is_file():
        app.mount("/", StaticFiles(directory=str(assets), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def landing():
            return _LANDING

    return app


def default_ui_dir() -> Optional[str]:
    """Locate built frontend assets next to an editable checkout, if any."""
    here = Path(__file__).resolve()
    for base in (Path.cwd(), *here.parents):
        candidate = base / "frontend" / "dist"
        if (candidate / "index.html").is_file():
            return str(candidate)
    return None


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="slicealign-server",
                                     description="Slice-to-volume annotation service")
    parser.add_argument("--config", help="dataset configuration JSON file")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--ui-dir", default=None, help="directory with built UI assets")
    args = parser.parse_args(argv)

    config = load_config(args.config) if args.config else None
    app = create_app(config=config, ui_dir=args.ui_dir or default_ui_dir())

    import uvicorn
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


if __name__ == "__main__":
    main()
