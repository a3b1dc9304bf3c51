"""Service-layer operations behind both the HTTP routes and the CLI.

Each handler is a thin composition of core-module operations: load the
dataset, derive gold maps, run the backend, score, report. No metric logic
lives here.
"""

from __future__ import annotations

from .. import backends, metrics, report, stats
from ..backends import BackendConfig, GOLD_BACKED_KINDS, open_backend
from ..corpus import TASK_CHOICE, Dataset, enumerate_spans, load_dataset
from . import models

# Execution knobs that provably never change results (worker-count invariance
# is an acceptance property) stay out of the report's config fingerprint, as
# does the self-referential output path.
_EXECUTION_FIELDS = {"workers", "batch_size", "report_path", "timestamp"}


def run_spans(n: int) -> models.SpansResponse:
    spans = enumerate_spans(n)
    return models.SpansResponse(
        n=n, count=len(spans), spans=[models.SpanModel(start=s.start, end=s.end) for s in spans]
    )


def _metrics_model(result: metrics.CoherenceResult) -> models.MetricsModel:
    return models.MetricsModel(
        accuracy=result.accuracy,
        strict_coherence=result.strict_coherence,
        lenient_macro=result.lenient_macro,
        lenient_micro=result.lenient_micro,
        rho_used=result.rho_used,
        mode=result.mode,
        n_examples=result.n_examples,
    )


def _mcnemar_model(mc: stats.McNemarResult) -> models.McNemarModel:
    return models.McNemarModel(
        b=mc.b, c=mc.c, p_value=mc.p_value, method=mc.method, no_discordant=mc.no_discordant
    )


def _open_for(config: BackendConfig, dataset: Dataset, gold_maps) -> backends.Backend:
    gold = gold_maps if config.kind in GOLD_BACKED_KINDS else None
    return open_backend(config, gold)


def run_evaluate(req: models.EvaluateRequest) -> models.EvaluateResponse:
    dataset = load_dataset(req.dataset, req.task)
    gold_maps = dataset.gold_maps()
    config = BackendConfig.parse(req.backend, seed=req.seed, renormalize=req.renormalize)
    rule = metrics.ConfidenceRule(rho=req.rho, mode=req.mode) if dataset.task == TASK_CHOICE else None
    with _open_for(config, dataset, gold_maps) as backend:
        predictions = backends.collect_predictions(
            backend, dataset.examples, batch_size=req.batch_size, workers=req.workers
        )
    result = metrics.evaluate(dataset.examples, gold_maps, predictions, rule)
    paired = stats.pair_outcomes(result)
    mcnemar = stats.mcnemar_exact(paired)

    report_path = None
    if req.report_path:
        report.emit_json(
            result,
            None,
            req.report_path,
            model=req.model,
            paired=paired,
            mcnemar=mcnemar,
            run_config=req.model_dump(exclude=_EXECUTION_FIELDS),
            timestamp=req.timestamp,
        )
        report_path = req.report_path
    return models.EvaluateResponse(
        model=req.model,
        task=result.task,
        metrics=_metrics_model(result),
        paired=models.PairedModel(n00=paired.n00, n01=paired.n01, n10=paired.n10, n11=paired.n11),
        mcnemar=_mcnemar_model(mcnemar),
        verdicts=[
            models.VerdictModel(
                example_id=v.example_id,
                end_correct=v.end_correct,
                span_correct_count=v.span_correct_count,
                span_total=v.span_total,
                coherent=v.coherent,
            )
            for v in result.verdicts
        ],
        report_path=report_path,
    )


def run_sweep(req: models.SweepRequest) -> models.SweepResponse:
    dataset = load_dataset(req.dataset, TASK_CHOICE)
    gold_maps = dataset.gold_maps()
    config = BackendConfig.parse(req.backend, seed=req.seed, renormalize=req.renormalize)
    with _open_for(config, dataset, gold_maps) as backend:
        predictions = backends.collect_predictions(
            backend, dataset.examples, batch_size=req.batch_size, workers=req.workers
        )
    grid = req.grid if req.grid else metrics.default_rho_grid()
    sweep = metrics.sweep_rho(dataset.examples, gold_maps, predictions, grid, mode=req.mode)

    # the headline paired comparison is accuracy vs strict coherence at its best rho
    best = sweep.best_strict
    paired = stats.pair_outcomes(best)
    mcnemar = stats.mcnemar_exact(paired)

    report_path = None
    if req.report_path:
        report.emit_json(
            best,
            sweep,
            req.report_path,
            model=req.model,
            paired=paired,
            mcnemar=mcnemar,
            run_config=req.model_dump(exclude=_EXECUTION_FIELDS),
            timestamp=req.timestamp,
        )
        report_path = req.report_path
    return models.SweepResponse(
        model=req.model,
        task=dataset.task,
        accuracy=best.accuracy,
        curve=[
            models.SweepPointModel(
                rho=rho,
                accuracy=r.accuracy,
                strict_coherence=r.strict_coherence,
                lenient_macro=r.lenient_macro,
                lenient_micro=r.lenient_micro,
            )
            for rho, r in zip(sweep.grid, sweep.results)
        ],
        best_strict_rho=sweep.best_strict_rho,
        best_strict=best.strict_coherence,
        best_lenient_rho=sweep.best_lenient_rho,
        best_lenient=sweep.best_lenient.lenient_macro,
        mcnemar=_mcnemar_model(mcnemar),
        report_path=report_path,
    )


def run_cache(req: models.CacheRequest) -> models.CacheResponse:
    dataset = load_dataset(req.dataset, req.task)
    config = BackendConfig.parse(req.backend, seed=req.seed, renormalize=req.renormalize)
    gold_maps = dataset.gold_maps() if config.kind in GOLD_BACKED_KINDS else None
    with open_backend(config, gold_maps) as backend:
        rows = backends.cache_predictions(
            backend, dataset.examples, req.out, batch_size=req.batch_size, workers=req.workers
        )
    return models.CacheResponse(rows=rows, path=req.out)


def run_kappa(req: models.KappaRequest) -> models.KappaResponse:
    agreement = stats.cohen_kappa(req.labels_a, req.labels_b)
    return models.KappaResponse(
        kappa=agreement.kappa,
        observed=agreement.observed,
        expected=agreement.expected,
        n_items=agreement.n_items,
        labels=list(agreement.labels),
        confusion=[list(row) for row in agreement.confusion],
    )


def run_mcnemar(req: models.McNemarRequest) -> models.McNemarModel:
    paired = stats.PairedOutcomes(n00=0, n01=req.c, n10=req.b, n11=0)
    mc = stats.mcnemar_chi2(paired) if req.chi2 else stats.mcnemar_exact(paired)
    return _mcnemar_model(mc)


def run_render(req: models.RenderRequest) -> models.RenderResponse:
    rows = [report.row_from_document(doc) for doc in req.documents]
    return models.RenderResponse(text=report.render_table(rows, req.format))
