"""End-task accuracy, strict/lenient coherence, and the confidence rule.

The confidence rule marks a prediction confident when the probability margin
from the argmax class c* to the other classes reaches a threshold rho:

- ``literal_max``:       max over c != c* of (p(c*) - p(c)) >= rho,
  i.e. the gap to the *smallest* competing probability.
- ``runner_up_margin``:  min over c != c* of (p(c*) - p(c)) >= rho,
  i.e. the gap to the runner-up.

The two modes coincide for binary tasks. Ties in the argmax break toward the
lowest class index, and the comparison is non-strict (>=). All functions here
are pure over immutable inputs and safe to parallelize.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import (
    ENTAILED,
    TASK_CHOICE,
    TASK_ENTAILMENT,
    ChoiceExample,
    Example,
    SpanGold,
    SpanRef,
    enumerate_spans,
    full_span,
)
from .backends import Distribution, PredictionKey

LITERAL_MAX = "literal_max"
RUNNER_UP_MARGIN = "runner_up_margin"
CONFIDENCE_MODES = (LITERAL_MAX, RUNNER_UP_MARGIN)


@dataclass(frozen=True)
class ConfidenceRule:
    rho: float = 0.5
    mode: str = LITERAL_MAX

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if self.mode not in CONFIDENCE_MODES:
            raise ValueError(f"unknown confidence mode {self.mode!r}")


def decide(dist: Distribution, rule: ConfidenceRule) -> tuple[int, bool]:
    """Return (argmax class index, whether the prediction is confident).

    The class index is 0-based; for choice tasks class i corresponds to the
    1-based choice i+1.
    """
    probs = dist.probs
    c_star = dist.argmax()
    others = [p for i, p in enumerate(probs) if i != c_star]
    if rule.mode == LITERAL_MAX:
        margin = probs[c_star] - min(others)
    else:
        margin = probs[c_star] - max(others)
    return c_star, margin >= rule.rho


def score_span(gold: SpanGold, dist: Distribution, rule: ConfidenceRule) -> bool:
    """Whether one sub-span prediction matches its gold expectation."""
    if gold.task == TASK_ENTAILMENT:
        if len(dist.probs) != 2:
            raise ValueError(f"entailment expects 2 classes, got {len(dist.probs)}")
        want = 1 if gold.label == ENTAILED else 0
        return dist.argmax() == want
    if gold.confident_on is not None and gold.confident_on > len(dist.probs):
        raise ValueError(
            f"gold names choice {gold.confident_on} but distribution has {len(dist.probs)} classes"
        )
    predicted, confident = decide(dist, rule)
    if gold.confident_on is None:
        return not confident
    return confident and predicted == gold.confident_on - 1


@dataclass(frozen=True)
class ExampleVerdict:
    example_id: str
    end_correct: bool
    span_correct_count: int
    span_total: int
    coherent: bool

    @property
    def span_accuracy(self) -> float:
        return self.span_correct_count / self.span_total


@dataclass(frozen=True)
class CoherenceResult:
    task: str
    accuracy: float
    strict_coherence: float
    lenient_macro: float
    lenient_micro: float
    rho_used: float | None
    mode: str | None
    verdicts: tuple[ExampleVerdict, ...]

    @property
    def n_examples(self) -> int:
        return len(self.verdicts)


def _end_correct(example: Example, dist: Distribution) -> bool:
    # end-task accuracy is pure argmax; confidence never enters it
    if example.task == TASK_ENTAILMENT:
        want = 1 if example.label == ENTAILED else 0
        return dist.argmax() == want
    assert isinstance(example, ChoiceExample)
    return dist.argmax() == example.positive - 1


def evaluate(
    examples: Sequence[Example],
    gold_maps: Mapping[str, Mapping[SpanRef, SpanGold]],
    predictions: Mapping[PredictionKey, Distribution],
    rule: ConfidenceRule | None = None,
) -> CoherenceResult:
    """Score a full prediction set against derived gold maps.

    Examples without a gold map entry (discarded choice examples) are
    excluded. A missing prediction for any (example, span) key is an error;
    nothing is silently skipped. The result is independent of example order
    and of how prediction batches were composed.
    """
    scored = [ex for ex in examples if ex.id in gold_maps]
    if not scored:
        raise ValueError("no evaluable examples (empty dataset or all discarded)")
    task = scored[0].task
    if task == TASK_CHOICE and rule is None:
        raise ValueError("choice evaluation requires a confidence rule")
    if rule is None:
        rule = ConfidenceRule(rho=0.0)

    verdicts = []
    for ex in sorted(scored, key=lambda e: e.id):
        if ex.task != task:
            raise ValueError("mixed task types in one evaluation")
        gold_map = gold_maps[ex.id]
        spans = enumerate_spans(ex.n_units)
        correct = 0
        for span in spans:
            key = PredictionKey(ex.id, span)
            dist = predictions.get(key)
            if dist is None:
                raise ValueError(
                    f"missing prediction for example {ex.id!r} span ({span.start}, {span.end})"
                )
            if score_span(gold_map[span], dist, rule):
                correct += 1
        end_dist = predictions[PredictionKey(ex.id, full_span(ex))]
        end_correct = _end_correct(ex, end_dist)
        verdicts.append(
            ExampleVerdict(
                example_id=ex.id,
                end_correct=end_correct,
                span_correct_count=correct,
                span_total=len(spans),
                coherent=end_correct and correct == len(spans),
            )
        )

    n = len(verdicts)
    total_spans = sum(v.span_total for v in verdicts)
    total_correct = sum(v.span_correct_count for v in verdicts)
    return CoherenceResult(
        task=task,
        accuracy=sum(v.end_correct for v in verdicts) / n,
        strict_coherence=sum(v.coherent for v in verdicts) / n,
        lenient_macro=sum(v.span_accuracy for v in verdicts) / n,
        lenient_micro=total_correct / total_spans,
        rho_used=rule.rho if task == TASK_CHOICE else None,
        mode=rule.mode if task == TASK_CHOICE else None,
        verdicts=tuple(verdicts),
    )


@dataclass(frozen=True)
class SweepResult:
    grid: tuple[float, ...]
    results: tuple[CoherenceResult, ...]
    best_strict_rho: float
    best_lenient_rho: float

    @property
    def best_strict(self) -> CoherenceResult:
        return self.results[self.grid.index(self.best_strict_rho)]

    @property
    def best_lenient(self) -> CoherenceResult:
        return self.results[self.grid.index(self.best_lenient_rho)]


def sweep_rho(
    examples: Sequence[Example],
    gold_maps: Mapping[str, Mapping[SpanRef, SpanGold]],
    predictions: Mapping[PredictionKey, Distribution],
    grid: Sequence[float],
    mode: str = LITERAL_MAX,
) -> SweepResult:
    """Evaluate one cached prediction set at every rho in the grid.

    Only meaningful for choice tasks. Returns the per-rho results plus the
    rho maximizing strict coherence and the rho maximizing lenient (macro)
    coherence, ties broken toward the smallest rho.
    """
    if not grid:
        raise ValueError("rho grid must be non-empty")
    scored = [ex for ex in examples if ex.id in gold_maps]
    if any(ex.task == TASK_ENTAILMENT for ex in scored):
        raise ValueError("rho sweeps apply only to choice tasks")

    values = sorted(set(float(r) for r in grid))
    results = [
        evaluate(examples, gold_maps, predictions, ConfidenceRule(rho=rho, mode=mode))
        for rho in values
    ]
    best_strict = max(range(len(values)), key=lambda i: (results[i].strict_coherence, -values[i]))
    best_lenient = max(range(len(values)), key=lambda i: (results[i].lenient_macro, -values[i]))
    return SweepResult(
        grid=tuple(values),
        results=tuple(results),
        best_strict_rho=values[best_strict],
        best_lenient_rho=values[best_lenient],
    )


def default_rho_grid() -> list[float]:
    """0.05 through 0.95 in steps of 0.05, materialized from integer multiples.

    0.0 is excluded by default: at rho = 0 every argmax is confident, so
    non-confidence expectations become unsatisfiable.
    """
    return [round(0.05 * i, 10) for i in range(1, 20)]
