"""Command-line interface: thin client of the service layer.

Every subcommand builds a request model and delegates to the same handlers
the HTTP service exposes; no metric or workflow logic lives here. Exit codes:
0 success, 1 validation error, 2 backend failure. Diagnostics go to stderr,
results to stdout or the requested output files. COHERENCEKIT_LOG sets the
log level.
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click

from .annotation import AnnotationError, AnnotationStore
from .backends import BackendError
from .corpus import DatasetError, load_dataset
from .report import render_table, row_from_document
from .service import handlers, models


def _parse_grid(text: str) -> list[float]:
    """Grid syntax: ``start:stop:step`` (inclusive when step divides the range),
    a comma-separated list, or a single value. Values come from integer
    multiples of the step, so no float accumulation drift."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"invalid grid bounds {text!r}")
        count = int((stop - start) / step + 1e-9)
        values = [round(start + i * step, 10) for i in range(count + 1)]
        return [v for v in values if v <= stop + 1e-9]
    return [float(p) for p in text.split(",") if p.strip()]


def _read_labels(path: str) -> list[str]:
    """One label per line: a bare JSON string/number or {"label": ...}."""
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            if isinstance(obj, dict):
                if "label" not in obj:
                    raise DatasetError(f"{path}:{lineno}: object rows need a label field")
                labels.append(str(obj["label"]))
            else:
                labels.append(str(obj))
    return labels


@click.group()
def cli():
    """Coherence evaluation for discourse-level text classifiers."""


@cli.command()
@click.option("--n", type=int, required=True, help="Number of units.")
def spans(n: int):
    """Enumerate the consecutive sub-spans of a length-N example."""
    response = handlers.run_spans(n)
    for span in response.spans:
        click.echo(f"({span.start}, {span.end})")
    click.echo(f"count: {response.count}")


_backend_option = click.option("--backend", required=True, help="Backend spec, e.g. oracle, file:preds.jsonl, http:URL.")
_workers_option = click.option("--workers", type=int, default=1, show_default=True)
_batch_option = click.option("--batch-size", type=int, default=32, show_default=True)
_seed_option = click.option("--seed", type=int, default=0, show_default=True)
_renorm_option = click.option("--renormalize", is_flag=True, help="Renormalize external probabilities instead of rejecting them.")


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--task", type=click.Choice(["entailment", "choice"]), default=None)
@_backend_option
@click.option("--rho", type=float, default=0.5, show_default=True, help="Confidence threshold (choice tasks).")
@click.option("--mode", type=click.Choice(["literal_max", "runner_up_margin"]), default="literal_max", show_default=True)
@_workers_option
@_batch_option
@_seed_option
@_renorm_option
@click.option("--model", default="model", show_default=True, help="Row name in reports.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--no-timestamp", is_flag=True, help="Omit the timestamp from the JSON report.")
@click.option("--format", "fmt", type=click.Choice(["plain", "markdown", "csv"]), default="plain", show_default=True)
def evaluate(dataset, task, backend, rho, mode, workers, batch_size, seed, renormalize,
             model, report_path, no_timestamp, fmt):
    """Evaluate a backend's coherence on a dataset."""
    req = models.EvaluateRequest(
        dataset=dataset, task=task, backend=backend, rho=rho, mode=mode,
        workers=workers, batch_size=batch_size, seed=seed, renormalize=renormalize,
        model=model, report_path=report_path, timestamp=not no_timestamp,
    )
    response = handlers.run_evaluate(req)
    doc = {
        "schema": "coherencekit/1",
        "model": response.model,
        "metrics": response.metrics.model_dump(),
        "mcnemar": response.mcnemar.model_dump(),
    }
    click.echo(render_table([row_from_document(doc)], fmt), nl=False)
    if report_path:
        click.echo(f"report written to {report_path}", err=True)


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@_backend_option
@click.option("--grid", default="0.05:0.95:0.05", show_default=True, help="Rho grid: start:stop:step or comma list.")
@click.option("--mode", type=click.Choice(["literal_max", "runner_up_margin"]), default="literal_max", show_default=True)
@_workers_option
@_batch_option
@_seed_option
@_renorm_option
@click.option("--model", default="model", show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--no-timestamp", is_flag=True)
@click.option("--format", "fmt", type=click.Choice(["plain", "markdown", "csv"]), default="plain", show_default=True)
def sweep(dataset, backend, grid, mode, workers, batch_size, seed, renormalize,
          model, report_path, no_timestamp, fmt):
    """Sweep the confidence threshold on a choice dataset (one inference pass)."""
    req = models.SweepRequest(
        dataset=dataset, backend=backend, grid=_parse_grid(grid), mode=mode,
        workers=workers, batch_size=batch_size, seed=seed, renormalize=renormalize,
        model=model, report_path=report_path, timestamp=not no_timestamp,
    )
    response = handlers.run_sweep(req)
    doc = {
        "schema": "coherencekit/1",
        "model": response.model,
        "metrics": {"accuracy": response.accuracy, "strict_coherence": response.best_strict,
                    "lenient_macro": response.best_lenient},
        "sweep": {
            "best_strict": response.best_strict, "best_strict_rho": response.best_strict_rho,
            "best_lenient": response.best_lenient, "best_lenient_rho": response.best_lenient_rho,
        },
        "mcnemar": response.mcnemar.model_dump(),
    }
    click.echo(render_table([row_from_document(doc)], fmt), nl=False)
    if report_path:
        click.echo(f"report written to {report_path}", err=True)


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--task", type=click.Choice(["entailment", "choice"]), default=None)
@_backend_option
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_workers_option
@_batch_option
@_seed_option
@_renorm_option
def cache(dataset, task, backend, out, workers, batch_size, seed, renormalize):
    """Cache one prediction per (example, sub-span) into a prediction file."""
    req = models.CacheRequest(
        dataset=dataset, task=task, backend=backend, out=out,
        workers=workers, batch_size=batch_size, seed=seed, renormalize=renormalize,
    )
    response = handlers.run_cache(req)
    click.echo(f"wrote {response.rows} predictions to {response.path}")


@cli.group()
def annotate():
    """Evidence annotation workflow."""


@annotate.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", required=True, type=click.Path(dir_okay=False))
@click.option("--annotators", required=True, help="Comma-separated pair, e.g. a1,a2.")
@click.option("--adjudicator", required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8020, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Static directory for the annotation UI, served at /.")
def serve(dataset, store_path, annotators, adjudicator, host, port, ui_dir):
    """Serve the annotation HTTP API (and the UI, if a directory is given)."""
    import uvicorn

    from .service.app import create_app

    names = [a.strip() for a in annotators.split(",") if a.strip()]
    store = AnnotationStore(load_dataset(dataset), store_path, names, adjudicator)
    app = create_app(store=store, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@annotate.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--annotators", required=True, help="Comma-separated pair used for the log.")
@click.option("--adjudicator", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def export(dataset, store_path, annotators, adjudicator, out):
    """Export the merged dataset once every task is resolved."""
    names = [a.strip() for a in annotators.split(",") if a.strip()]
    store = AnnotationStore(load_dataset(dataset), store_path, names, adjudicator)
    merged = store.export(out)
    click.echo(f"exported {len(merged.examples)} examples to {out}")


@cli.group()
def stats():
    """Agreement and significance statistics."""


@stats.command()
@click.option("--a", "path_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True, dir_okay=False))
def kappa(path_a, path_b):
    """Cohen's kappa between two aligned label files."""
    response = handlers.run_kappa(
        models.KappaRequest(labels_a=_read_labels(path_a), labels_b=_read_labels(path_b))
    )
    click.echo(f"kappa = {response.kappa:.4f}")
    click.echo(f"observed agreement = {response.observed:.4f}")
    click.echo(f"expected agreement = {response.expected:.4f}")
    click.echo(f"items = {response.n_items}")


@stats.command()
@click.option("--report", "report_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON report; uses its paired counts.")
@click.option("--b", "b_count", type=int, default=None, help="Correct-but-incoherent count.")
@click.option("--c", "c_count", type=int, default=None, help="Incoherent-but-correct count.")
@click.option("--chi2", is_flag=True, help="Chi-squared variant with continuity correction.")
def mcnemar(report_path, b_count, c_count, chi2):
    """Exact McNemar test from a report or explicit discordant counts."""
    if report_path is not None:
        with open(report_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        paired = doc.get("paired")
        if paired is None:
            raise DatasetError(f"{report_path} has no paired counts")
        b_count, c_count = paired["n10"], paired["n01"]
    elif b_count is None or c_count is None:
        raise click.UsageError("provide --report or both --b and --c")
    response = handlers.run_mcnemar(models.McNemarRequest(b=b_count, c=c_count, chi2=chi2))
    click.echo(f"b = {response.b}, c = {response.c}")
    suffix = " (no discordant pairs)" if response.no_discordant else ""
    click.echo(f"{response.method} p = {response.p_value:.6g}{suffix}")


@cli.group()
def report():
    """Report rendering."""


@report.command()
@click.option("--json", "json_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False), help="Emitted JSON report(s); repeatable.")
@click.option("--format", "fmt", type=click.Choice(["plain", "markdown", "csv"]), default="plain", show_default=True)
def render(json_paths, fmt):
    """Render one table row per JSON report."""
    documents = []
    for path in json_paths:
        with open(path, encoding="utf-8") as fh:
            documents.append(json.load(fh))
    response = handlers.run_render(models.RenderRequest(documents=documents, format=fmt))
    click.echo(response.text, nl=False)


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("COHERENCEKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr)
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 2
    except (DatasetError, AnnotationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
