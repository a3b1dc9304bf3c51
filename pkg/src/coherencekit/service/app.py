"""FastAPI application wrapping the core package.

The evaluation routes under /v1 are always available; the annotation routes
under /api require a configured store (they serve the two-annotator workflow
and the browser UI, which is mounted statically at / when a directory is
given).
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from ..annotation import AnnotationStore
from ..backends import BackendError
from ..corpus import payload_from_json
from . import handlers, models


def create_app(store: AnnotationStore | None = None, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="coherencekit", version="0.1.0")

    @app.exception_handler(BackendError)
    async def _backend_error(request: Request, exc: BackendError):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def _validation_error(request: Request, exc: ValueError):
        # covers DatasetError and AnnotationError as well
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/v1/spans", response_model=models.SpansResponse)
    def spans(n: int = Query(ge=1)):
        return handlers.run_spans(n)

    @app.post("/v1/evaluate", response_model=models.EvaluateResponse)
    def evaluate(req: models.EvaluateRequest):
        return handlers.run_evaluate(req)

    @app.post("/v1/sweep", response_model=models.SweepResponse)
    def sweep(req: models.SweepRequest):
        return handlers.run_sweep(req)

    @app.post("/v1/cache", response_model=models.CacheResponse)
    def cache(req: models.CacheRequest):
        return handlers.run_cache(req)

    @app.post("/v1/stats/kappa", response_model=models.KappaResponse)
    def kappa(req: models.KappaRequest):
        return handlers.run_kappa(req)

    @app.post("/v1/stats/mcnemar", response_model=models.McNemarModel)
    def mcnemar(req: models.McNemarRequest):
        return handlers.run_mcnemar(req)

    @app.post("/v1/report/render", response_model=models.RenderResponse)
    def render(req: models.RenderRequest):
        return handlers.run_render(req)

    if store is not None:
        _register_annotation_routes(app, store)
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def _register_annotation_routes(app: FastAPI, store: AnnotationStore) -> None:
    @app.get("/api/tasks/next")
    def next_task(annotator: str):
        task = store.next_task(annotator)
        if task is None:
            return Response(status_code=204)
        return JSONResponse(task)

    @app.post("/api/annotations", response_model=models.StatusResponse)
    def submit(req: models.SubmitRequest):
        payload = payload_from_json(req.payload, store.example_task(req.example_id))
        status = store.submit(req.annotator, req.example_id, payload)
        return models.StatusResponse(status=status)

    @app.get("/api/disagreements")
    def disagreements():
        return JSONResponse(store.disagreements())

    @app.post("/api/adjudications", response_model=models.StatusResponse)
    def adjudicate(req: models.AdjudicateRequest):
        payload = payload_from_json(req.payload, store.example_task(req.example_id))
        store.adjudicate(req.adjudicator, req.example_id, payload)
        return models.StatusResponse(status=store.progress_of(req.example_id))

    @app.get("/api/agreement", response_model=models.AgreementResponse)
    def agreement():
        a = store.agreement()
        return models.AgreementResponse(
            kappa=a.kappa,
            observed=a.observed,
            expected=a.expected,
            n_items=a.n_items,
            labels=list(a.labels),
            confusion=[list(row) for row in a.confusion],
        )

    @app.get("/api/progress", response_model=models.ProgressResponse)
    def progress():
        return models.ProgressResponse(counts=store.progress())
