"""Render evaluation outputs: summary tables plus machine-readable JSON/CSV.

Tables show one-decimal percentages with the coherence drop from accuracy in
parentheses, e.g. ``28.5 (-27.3)``, and a rho column for choice-task reports.
Rounding is half-away-from-zero and happens at render time only; the JSON
report carries full precision.
"""

from __future__ import annotations

import datetime
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from .metrics import CoherenceResult, SweepResult
from .stats import McNemarResult, PairedOutcomes

REPORT_SCHEMA = "coherencekit/1"

CSV_COLUMNS = (
    "model",
    "accuracy",
    "strict",
    "strict_delta",
    "strict_rho",
    "lenient",
    "lenient_delta",
    "lenient_rho",
    "mcnemar_p",
)


@dataclass(frozen=True)
class ReportRow:
    """One table row; metric fields are percentages in [0, 100]."""

    model: str
    accuracy: float
    strict: float | None = None
    lenient: float | None = None
    strict_rho: float | None = None
    lenient_rho: float | None = None
    mcnemar_p: float | None = None


def round_half_away(value: float, digits: int = 1) -> float:
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _pct(value: float) -> str:
    return f"{round_half_away(value):.1f}"


def _delta_cell(metric: float | None, accuracy: float) -> str:
    if metric is None:
        return "--"
    delta = round_half_away(metric - accuracy)
    sign = "-" if delta < 0 else "+"
    return f"{_pct(metric)} ({sign}{abs(delta):.1f})"


def _rho_cell(rho: float | None) -> str:
    return "--" if rho is None else f"{rho:g}"


def _p_cell(p: float | None) -> str:
    return "--" if p is None else f"{p:.3g}"


def render_table(rows: Sequence[ReportRow], fmt: str = "plain") -> str:
    """Render rows as ``plain``, ``markdown``, or ``csv`` text.

    The rho columns appear only when some row carries a rho (choice-task
    reports); CSV always emits the full fixed column set.
    """
    if not rows:
        raise ValueError("cannot render an empty table")
    if fmt == "csv":
        return _render_csv(rows)
    if fmt not in ("plain", "markdown"):
        raise ValueError(f"unknown table format {fmt!r}")

    with_rho = any(r.strict_rho is not None or r.lenient_rho is not None for r in rows)
    header = ["Model", "Accuracy (%)", "Strict Coherence (Δ; %)"]
    if with_rho:
        header.append("ρ")
    header.append("Lenient Coherence (Δ; %)")
    if with_rho:
        header.append("ρ")
    header.append("McNemar p")

    body = []
    for r in rows:
        cells = [r.model, _pct(r.accuracy), _delta_cell(r.strict, r.accuracy)]
        if with_rho:
            cells.append(_rho_cell(r.strict_rho))
        cells.append(_delta_cell(r.lenient, r.accuracy))
        if with_rho:
            cells.append(_rho_cell(r.lenient_rho))
        cells.append(_p_cell(r.mcnemar_p))
        body.append(cells)

    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(cells) + " |" for cells in body]
        return "\n".join(lines) + "\n"

    widths = [max(len(header[i]), *(len(cells[i]) for cells in body)) for i in range(len(header))]
    lines = ["  ".join(header[i].ljust(widths[i]) for i in range(len(header))).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for cells in body:
        lines.append("  ".join(cells[i].ljust(widths[i]) for i in range(len(header))).rstrip())
    return "\n".join(lines) + "\n"


def _render_csv(rows: Sequence[ReportRow]) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        cells = [
            r.model,
            _pct(r.accuracy),
            "" if r.strict is None else _pct(r.strict),
            "" if r.strict is None else f"{round_half_away(r.strict - r.accuracy):+.1f}",
            "" if r.strict_rho is None else f"{r.strict_rho:g}",
            "" if r.lenient is None else _pct(r.lenient),
            "" if r.lenient is None else f"{round_half_away(r.lenient - r.accuracy):+.1f}",
            "" if r.lenient_rho is None else f"{r.lenient_rho:g}",
            "" if r.mcnemar_p is None else f"{r.mcnemar_p:.3g}",
        ]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def row_from_result(
    model: str,
    result: CoherenceResult,
    sweep: SweepResult | None = None,
    mcnemar: McNemarResult | None = None,
) -> ReportRow:
    """Build a table row from results, in percent space.

    With a sweep, strict and lenient each report their own best-rho value,
    the way choice-task results are published.
    """
    if sweep is not None:
        strict = sweep.best_strict.strict_coherence * 100
        lenient = sweep.best_lenient.lenient_macro * 100
        strict_rho = sweep.best_strict_rho
        lenient_rho = sweep.best_lenient_rho
    else:
        strict = result.strict_coherence * 100
        lenient = result.lenient_macro * 100
        strict_rho = result.rho_used
        lenient_rho = result.rho_used
    return ReportRow(
        model=model,
        accuracy=result.accuracy * 100,
        strict=strict,
        lenient=lenient,
        strict_rho=strict_rho,
        lenient_rho=lenient_rho,
        mcnemar_p=mcnemar.p_value if mcnemar is not None else None,
    )


def _result_to_json(result: CoherenceResult) -> dict:
    return {
        "accuracy": result.accuracy,
        "strict_coherence": result.strict_coherence,
        "lenient_macro": result.lenient_macro,
        "lenient_micro": result.lenient_micro,
        "rho_used": result.rho_used,
        "mode": result.mode,
        "n_examples": result.n_examples,
    }


def report_document(
    result: CoherenceResult,
    *,
    model: str = "model",
    sweep: SweepResult | None = None,
    paired: PairedOutcomes | None = None,
    mcnemar: McNemarResult | None = None,
    run_config: Mapping | None = None,
    timestamp: bool = True,
) -> dict:
    doc: dict = {"schema": REPORT_SCHEMA, "model": model, "task": result.task}
    if timestamp:
        doc["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if run_config is not None:
        doc["config"] = dict(run_config)
    doc["metrics"] = _result_to_json(result)
    doc["verdicts"] = [
        {
            "example_id": v.example_id,
            "end_correct": v.end_correct,
            "span_correct_count": v.span_correct_count,
            "span_total": v.span_total,
            "coherent": v.coherent,
        }
        for v in result.verdicts
    ]
    if paired is not None:
        doc["paired"] = {"n00": paired.n00, "n01": paired.n01, "n10": paired.n10, "n11": paired.n11}
    if mcnemar is not None:
        doc["mcnemar"] = {
            "b": mcnemar.b,
            "c": mcnemar.c,
            "p_value": mcnemar.p_value,
            "method": mcnemar.method,
            "no_discordant": mcnemar.no_discordant,
        }
    if sweep is not None:
        doc["sweep"] = {
            "grid": list(sweep.grid),
            "curve": [_result_to_json(r) for r in sweep.results],
            "best_strict_rho": sweep.best_strict_rho,
            "best_strict": sweep.best_strict.strict_coherence,
            "best_lenient_rho": sweep.best_lenient_rho,
            "best_lenient": sweep.best_lenient.lenient_macro,
        }
    return doc


def emit_json(
    result: CoherenceResult,
    sweep: SweepResult | None,
    out_path: str,
    *,
    model: str = "model",
    paired: PairedOutcomes | None = None,
    mcnemar: McNemarResult | None = None,
    run_config: Mapping | None = None,
    timestamp: bool = True,
) -> dict:
    """Write the versioned JSON report document; returns the document."""
    doc = report_document(
        result,
        model=model,
        sweep=sweep,
        paired=paired,
        mcnemar=mcnemar,
        run_config=run_config,
        timestamp=timestamp,
    )
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return doc


def row_from_document(doc: Mapping) -> ReportRow:
    """Rebuild a table row from an emitted JSON report document."""
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    metrics = doc["metrics"]
    sweep = doc.get("sweep")
    if sweep is not None:
        strict = sweep["best_strict"] * 100
        lenient = sweep["best_lenient"] * 100
        strict_rho = sweep["best_strict_rho"]
        lenient_rho = sweep["best_lenient_rho"]
    else:
        strict = metrics["strict_coherence"] * 100
        lenient = metrics["lenient_macro"] * 100
        strict_rho = metrics.get("rho_used")
        lenient_rho = metrics.get("rho_used")
    mcnemar = doc.get("mcnemar")
    return ReportRow(
        model=doc.get("model", "model"),
        accuracy=metrics["accuracy"] * 100,
        strict=strict,
        lenient=lenient,
        strict_rho=strict_rho,
        lenient_rho=lenient_rho,
        mcnemar_p=mcnemar["p_value"] if mcnemar else None,
    )
