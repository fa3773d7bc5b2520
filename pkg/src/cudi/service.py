"""Local HTTP service exposing the adjustment pipeline to interactive clients."""

from __future__ import annotations

import json

from fastapi import FastAPI, File, Form, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import IngestionError, InvalidConfigError, RoleMismatchError, ShapeMismatchError
from .imageio import decode_gray, decode_rgb, encode_rgb_png
from .networks import Student, Teacher
from .pipeline import AdjustRequest, run_adjust

STATS_HEADER = "X-CuDi-Stats"


def create_app(model: Teacher | Student) -> FastAPI:
    """App bound to one immutable model; requests may run concurrently."""
    app = FastAPI(title="cudi exposure service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"], expose_headers=[STATS_HEADER])

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/adjust")
    async def adjust(image: UploadFile = File(...),
                     engine: str = Form(...),
                     exposure_mode: str = Form(...),
                     exposure_value: float | None = Form(None),
                     map: UploadFile | None = File(None)):
        try:
            img = decode_rgb(await image.read())
            painted = decode_gray(await map.read()) if map is not None else None
            request = AdjustRequest(image=img, engine=engine,
                                    exposure_mode=exposure_mode,
                                    exposure_value=exposure_value,
                                    painted_map=painted)
            output, stats, _ = run_adjust(model, request)
        except (IngestionError, InvalidConfigError, RoleMismatchError,
                ShapeMismatchError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return Response(content=encode_rgb_png(output), media_type="image/png",
                        headers={STATS_HEADER: json.dumps(stats)})

    return app


def serve(model: Teacher | Student, port: int = 8080, host: str = "127.0.0.1"):
    import uvicorn
    uvicorn.run(create_app(model), host=host, port=port, log_level="warning")
