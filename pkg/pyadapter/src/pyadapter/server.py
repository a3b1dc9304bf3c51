"""HTTP adapter: POST /v1/predict with order-aligned instance batches."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .model import AdapterModel, toy_model


def create_app(model: AdapterModel = toy_model) -> FastAPI:
    app = FastAPI(title="pyadapter", version="0.1.0")

    @app.post("/v1/predict")
    async def predict(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"error": "request body is not JSON"})
        instances = body.get("instances") if isinstance(body, dict) else None
        if not isinstance(instances, list) or not instances:
            return JSONResponse(
                status_code=400, content={"error": "body needs a non-empty instances list"}
            )
        probs = []
        for i, instance in enumerate(instances):
            if not isinstance(instance, dict):
                return JSONResponse(
                    status_code=400, content={"error": f"instance {i} is not an object"}
                )
            try:
                probs.append(model(instance))
            except ValueError as exc:
                return JSONResponse(status_code=400, content={"error": f"instance {i}: {exc}"})
        return {"probs": probs}

    return app


def serve(model: AdapterModel = toy_model, port: int = 8100, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(create_app(model), host=host, port=port, log_level="warning")
