"""Pydantic request/response models for the service API and the CLI."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SpanModel(BaseModel):
    start: int
    end: int


class SpansResponse(BaseModel):
    n: int
    count: int
    spans: list[SpanModel]


class MetricsModel(BaseModel):
    accuracy: float
    strict_coherence: float
    lenient_macro: float
    lenient_micro: float
    rho_used: float | None = None
    mode: str | None = None
    n_examples: int


class VerdictModel(BaseModel):
    example_id: str
    end_correct: bool
    span_correct_count: int
    span_total: int
    coherent: bool


class PairedModel(BaseModel):
    n00: int
    n01: int
    n10: int
    n11: int


class McNemarModel(BaseModel):
    b: int
    c: int
    p_value: float
    method: str
    no_discordant: bool = False


class EvaluateRequest(BaseModel):
    dataset: str
    backend: str
    task: str | None = None
    rho: float = Field(default=0.5, ge=0.0, le=1.0)
    mode: str = "literal_max"
    workers: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = 0
    renormalize: bool = False
    model: str = "model"
    report_path: str | None = None
    timestamp: bool = True


class EvaluateResponse(BaseModel):
    model: str
    task: str
    metrics: MetricsModel
    paired: PairedModel
    mcnemar: McNemarModel
    verdicts: list[VerdictModel]
    report_path: str | None = None


class SweepPointModel(BaseModel):
    rho: float
    accuracy: float
    strict_coherence: float
    lenient_macro: float
    lenient_micro: float


class SweepRequest(BaseModel):
    dataset: str
    backend: str
    grid: list[float] | None = None
    mode: str = "literal_max"
    workers: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = 0
    renormalize: bool = False
    model: str = "model"
    report_path: str | None = None
    timestamp: bool = True


class SweepResponse(BaseModel):
    model: str
    task: str
    accuracy: float
    curve: list[SweepPointModel]
    best_strict_rho: float
    best_strict: float
    best_lenient_rho: float
    best_lenient: float
    mcnemar: McNemarModel
    report_path: str | None = None


class CacheRequest(BaseModel):
    dataset: str
    backend: str
    out: str
    task: str | None = None
    workers: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    seed: int = 0
    renormalize: bool = False


class CacheResponse(BaseModel):
    rows: int
    path: str


class KappaRequest(BaseModel):
    labels_a: list[str]
    labels_b: list[str]


class KappaResponse(BaseModel):
    kappa: float
    observed: float
    expected: float
    n_items: int
    labels: list[str]
    confusion: list[list[int]]


class McNemarRequest(BaseModel):
    b: int = Field(ge=0)
    c: int = Field(ge=0)
    chi2: bool = False


class RenderRequest(BaseModel):
    documents: list[dict]
    format: str = "plain"


class RenderResponse(BaseModel):
    text: str


# -- annotation API ----------------------------------------------------------


class SubmitRequest(BaseModel):
    annotator: str
    example_id: str
    payload: dict


class AdjudicateRequest(BaseModel):
    adjudicator: str
    example_id: str
    payload: dict


class StatusResponse(BaseModel):
    status: str


class AgreementResponse(BaseModel):
    kappa: float
    observed: float
    expected: float
    n_items: int
    labels: list[str]
    confusion: list[list[int]]


class ProgressResponse(BaseModel):
    counts: dict[str, int]
