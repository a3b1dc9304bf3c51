"""Data model, dataset I/O, sub-span enumeration, and gold derivation.

A dataset is a line-delimited JSON file holding either entailment examples
(a dialog of units plus a hypothesis and a binary label) or choice examples
(M parallel unit sequences, one of which is implausible). Each example of
length N decomposes into N(N+1)/2 consecutive sub-spans; human evidence
annotations determine the expected prediction on every one of them:

- entailment: a sub-span is gold-positive exactly when it contains the full
  annotated evidence range.
- choice: a sub-span demands a confident prediction of the implausible
  choice exactly when it contains the hull of the annotated evidence units;
  on every other sub-span the expected behavior is low confidence.

Loaded datasets and derived gold maps are immutable and safe to share
across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

TASK_ENTAILMENT = "entailment"
TASK_CHOICE = "choice"
TASKS = (TASK_ENTAILMENT, TASK_CHOICE)

ENTAILED = "entailed"
NOT_ENTAILED = "not_entailed"
ENTAILMENT_LABELS = (NOT_ENTAILED, ENTAILED)

CASE_CONFLICT_WITH_CONTEXT = "conflict-with-context"
CASE_MALFORMED = "malformed"
CASE_CONTEXT_CONFLICT_UNRESOLVED = "context-conflict-unresolved"
CHOICE_CASES = (
    CASE_CONFLICT_WITH_CONTEXT,
    CASE_MALFORMED,
    CASE_CONTEXT_CONFLICT_UNRESOLVED,
)

# annotator_id used for evidence that arrived pre-merged in a dataset file
MERGED_ANNOTATOR = "merged"


class DatasetError(ValueError):
    """A dataset file or evidence payload violates the schema."""


class SpanRef(NamedTuple):
    """Inclusive 1-based (start, end) reference to a consecutive sub-span."""

    start: int
    end: int

    def contains(self, other: "SpanRef") -> bool:
        return self.start <= other.start and self.end >= other.end

    def covers(self, start: int, end: int) -> bool:
        return self.start <= start and self.end >= end


@dataclass(frozen=True)
class Unit:
    """One unit of discourse (a dialog turn or a story sentence).

    Padding units are inserted on the right of short choice texts so that
    all choices of an example share the same length; they render as empty
    strings and are the only units allowed to have empty text.
    """

    text: str
    speaker: str | None = None
    is_padding: bool = False

    def __post_init__(self) -> None:
        if not self.is_padding and not self.text.strip():
            raise DatasetError("unit text must be non-empty")
        if self.is_padding and self.text:
            raise DatasetError("padding units carry no text")

    def rendered(self) -> str:
        if self.is_padding:
            return ""
        if self.speaker:
            return f"{self.speaker}: {self.text}"
        return self.text


@dataclass(frozen=True)
class EntailmentExample:
    id: str
    units: tuple[Unit, ...]
    hypothesis: str
    label: str

    task = TASK_ENTAILMENT
    num_classes = 2

    def __post_init__(self) -> None:
        if not self.units:
            raise DatasetError(f"example {self.id!r}: needs at least one unit")
        if self.label not in ENTAILMENT_LABELS:
            raise DatasetError(f"example {self.id!r}: unknown label {self.label!r}")

    @property
    def n_units(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class ChoiceExample:
    """M parallel texts, at most one of which is implausible.

    ``positive`` is the 1-based index of the implausible choice; ``None``
    marks a discarded (both-plausible) example that is excluded from
    coherence evaluation. Choices are right-padded to a common length N.
    """

    id: str
    choices: tuple[tuple[Unit, ...], ...]
    positive: int | None

    task = TASK_CHOICE

    def __post_init__(self) -> None:
        if len(self.choices) < 2:
            raise DatasetError(f"example {self.id!r}: needs at least two choices")
        lengths = {len(c) for c in self.choices}
        if len(lengths) != 1 or 0 in lengths:
            raise DatasetError(f"example {self.id!r}: choices must share a non-zero padded length")
        if self.positive is not None and not 1 <= self.positive <= len(self.choices):
            raise DatasetError(f"example {self.id!r}: positive index {self.positive} out of range")

    @property
    def n_units(self) -> int:
        return len(self.choices[0])

    @property
    def num_classes(self) -> int:
        return len(self.choices)

    def choice_length(self, choice: int) -> int:
        """True (unpadded) length of the 1-based ``choice``."""
        return sum(1 for u in self.choices[choice - 1] if not u.is_padding)


Example = Union[EntailmentExample, ChoiceExample]


@dataclass(frozen=True)
class EntailmentEvidence:
    """Inclusive 1-based range of units that together entail the hypothesis."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not 1 <= self.start <= self.end:
            raise DatasetError(f"evidence range ({self.start}, {self.end}) is not a valid 1-based range")


@dataclass(frozen=True)
class ChoiceEvidence:
    """Units of one choice that carry its implausibility, plus the case tag."""

    choice: int
    units: tuple[int, ...]
    case: str

    def __post_init__(self) -> None:
        if self.choice < 1:
            raise DatasetError(f"evidence choice index {self.choice} is not 1-based")
        if not self.units:
            raise DatasetError("evidence unit set must be non-empty")
        normalized = tuple(sorted(set(self.units)))
        if normalized != self.units:
            object.__setattr__(self, "units", normalized)
        if self.units[0] < 1:
            raise DatasetError("evidence unit indices are 1-based")
        if self.case not in CHOICE_CASES:
            raise DatasetError(f"unknown evidence case {self.case!r}")

    @property
    def hull(self) -> tuple[int, int]:
        return self.units[0], self.units[-1]


@dataclass(frozen=True)
class BothPlausible:
    """Annotation payload asserting that no choice is implausible."""


EvidencePayload = Union[EntailmentEvidence, ChoiceEvidence, BothPlausible]


@dataclass(frozen=True)
class EvidenceRecord:
    example_id: str
    annotator_id: str
    payload: EvidencePayload


@dataclass(frozen=True)
class SpanGold:
    """Expected behavior on one sub-span.

    For entailment tasks ``label`` holds the expected binary label. For
    choice tasks ``confident_on`` holds the 1-based choice the classifier
    must confidently pick, or ``None`` when the expected behavior is a
    non-confident prediction.
    """

    span: SpanRef
    task: str
    label: str | None = None
    confident_on: int | None = None


@dataclass(frozen=True)
class EntailmentInstance:
    """Realized text for one sub-span of an entailment example."""

    premise: tuple[str, ...]
    hypothesis: str

    task = TASK_ENTAILMENT
    num_classes = 2


@dataclass(frozen=True)
class ChoiceInstance:
    """Realized parallel texts for one sub-span of a choice example."""

    choices: tuple[tuple[str, ...], ...]

    task = TASK_CHOICE

    @property
    def num_classes(self) -> int:
        return len(self.choices)


TaskInstance = Union[EntailmentInstance, ChoiceInstance]


def enumerate_spans(n: int) -> list[SpanRef]:
    """All consecutive sub-spans of a length-``n`` example, sorted by (start, end).

    Exactly n + C(n, 2) = n(n+1)/2 spans, always including the full span (1, n).
    """
    if n < 1:
        raise ValueError(f"span enumeration needs n >= 1, got {n}")
    return [SpanRef(a, b) for a in range(1, n + 1) for b in range(a, n + 1)]


def derive_gold_entailment(
    example: EntailmentExample,
    evidence: EntailmentEvidence | None,
) -> dict[SpanRef, SpanGold]:
    """Gold labels for every sub-span of an entailment example.

    A sub-span entails the hypothesis exactly when it contains the full
    evidence range. Negative examples carry no evidence and every sub-span
    is gold-negative.
    """
    n = example.n_units
    if example.label == ENTAILED:
        if evidence is None:
            raise ValueError(f"example {example.id!r}: entailed example requires an evidence range")
        if evidence.end > n:
            raise DatasetError(
                f"example {example.id!r}: evidence range ({evidence.start}, {evidence.end}) "
                f"exceeds {n} units"
            )
    elif evidence is not None:
        raise ValueError(f"example {example.id!r}: evidence is not allowed on a negative example")

    gold: dict[SpanRef, SpanGold] = {}
    for span in enumerate_spans(n):
        if evidence is not None and span.covers(evidence.start, evidence.end):
            label = ENTAILED
        else:
            label = NOT_ENTAILED
        gold[span] = SpanGold(span=span, task=TASK_ENTAILMENT, label=label)
    return gold


def derive_gold_choice(
    example: ChoiceExample,
    evidence: ChoiceEvidence,
) -> dict[SpanRef, SpanGold]:
    """Gold expectations for every sub-span of a choice example.

    A sub-span demands a confident prediction of the positive choice exactly
    when it contains the hull [min(units), max(units)] of the evidence set;
    everywhere else the expected behavior is non-confidence. Because spans
    are consecutive, containing the hull is equivalent to containing the
    (possibly non-adjacent) unit set itself.
    """
    if example.positive is None:
        raise ValueError(f"example {example.id!r}: discarded example has no positive choice")
    if evidence.choice != example.positive:
        raise ValueError(
            f"example {example.id!r}: evidence names choice {evidence.choice} "
            f"but the positive choice is {example.positive}"
        )
    lo, hi = evidence.hull
    if hi > example.n_units:
        raise DatasetError(f"example {example.id!r}: evidence unit {hi} exceeds {example.n_units} units")

    gold: dict[SpanRef, SpanGold] = {}
    for span in enumerate_spans(example.n_units):
        confident_on = example.positive if span.covers(lo, hi) else None
        gold[span] = SpanGold(span=span, task=TASK_CHOICE, confident_on=confident_on)
    return gold


def derive_gold_map(example: Example, payload: EvidencePayload | None) -> dict[SpanRef, SpanGold]:
    """Dispatch gold derivation on the example's task type."""
    if isinstance(example, EntailmentExample):
        if payload is not None and not isinstance(payload, EntailmentEvidence):
            raise ValueError(f"example {example.id!r}: expected an entailment evidence range")
        return derive_gold_entailment(example, payload)
    if not isinstance(payload, ChoiceEvidence):
        raise ValueError(f"example {example.id!r}: expected choice evidence")
    return derive_gold_choice(example, payload)


def derive_gold_maps(
    examples: Sequence[Example],
    records: Iterable[EvidenceRecord],
) -> dict[str, dict[SpanRef, SpanGold]]:
    """Per-example gold maps for a loaded dataset.

    Discarded choice examples (``positive is None``) are excluded. Every
    other example must be derivable: entailed entailment examples and
    positive choice examples need exactly one evidence record.
    """
    by_id: dict[str, EvidencePayload] = {}
    known = {ex.id for ex in examples}
    for rec in records:
        if rec.example_id not in known:
            raise DatasetError(f"evidence references unknown example {rec.example_id!r}")
        if rec.example_id in by_id:
            raise DatasetError(f"multiple evidence records for example {rec.example_id!r}")
        by_id[rec.example_id] = rec.payload

    gold_maps: dict[str, dict[SpanRef, SpanGold]] = {}
    for ex in examples:
        if isinstance(ex, ChoiceExample):
            if ex.positive is None:
                continue
            payload = by_id.get(ex.id)
            if payload is None:
                raise ValueError(f"example {ex.id!r}: choice example has no evidence record")
        else:
            payload = by_id.get(ex.id)
            if ex.label == ENTAILED and payload is None:
                raise ValueError(f"example {ex.id!r}: entailed example has no evidence record")
        gold_maps[ex.id] = derive_gold_map(ex, payload)
    return gold_maps


def full_span(example: Example) -> SpanRef:
    return SpanRef(1, example.n_units)


def realize_span(example: Example, span: SpanRef) -> TaskInstance:
    """Slice an example down to one sub-span of realized text.

    Entailment units render with a ``SPEAKER: text`` prefix when a speaker
    is present; padding units of short choices render as empty strings.
    """
    if not (1 <= span.start <= span.end <= example.n_units):
        raise ValueError(
            f"example {example.id!r}: span ({span.start}, {span.end}) "
            f"out of range for {example.n_units} units"
        )
    lo, hi = span.start - 1, span.end
    if isinstance(example, EntailmentExample):
        return EntailmentInstance(
            premise=tuple(u.rendered() for u in example.units[lo:hi]),
            hypothesis=example.hypothesis,
        )
    return ChoiceInstance(
        choices=tuple(tuple(u.rendered() for u in choice[lo:hi]) for choice in example.choices)
    )


# ---------------------------------------------------------------------------
# evidence payload (de)serialization, shared with the annotation log and API


def payload_to_json(payload: EvidencePayload) -> dict:
    if isinstance(payload, EntailmentEvidence):
        return {"start": payload.start, "end": payload.end}
    if isinstance(payload, ChoiceEvidence):
        return {"choice": payload.choice, "units": list(payload.units), "case": payload.case}
    return {"both_plausible": True}


def payload_from_json(obj: Mapping, task: str) -> EvidencePayload:
    if not isinstance(obj, Mapping):
        raise DatasetError("evidence payload must be a JSON object")
    if obj.get("both_plausible"):
        if task != TASK_CHOICE:
            raise DatasetError("both_plausible applies only to choice tasks")
        return BothPlausible()
    if task == TASK_ENTAILMENT:
        try:
            return EntailmentEvidence(start=int(obj["start"]), end=int(obj["end"]))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"entailment evidence needs integer start/end: {obj!r}") from exc
    try:
        units = tuple(int(u) for u in obj["units"])
        return ChoiceEvidence(choice=int(obj["choice"]), units=units, case=str(obj["case"]))
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"choice evidence needs choice/units/case: {obj!r}") from exc


def validate_evidence(example: Example, payload: EvidencePayload) -> None:
    """Check an evidence payload against its example's bounds.

    Choice evidence units must fall within the true (unpadded) length of the
    choice they name; marking a padding unit as evidence is meaningless.
    """
    if isinstance(payload, EntailmentEvidence):
        if not isinstance(example, EntailmentExample):
            raise DatasetError(f"example {example.id!r}: range evidence on a choice example")
        if payload.end > example.n_units:
            raise DatasetError(
                f"example {example.id!r}: evidence range ({payload.start}, {payload.end}) "
                f"exceeds {example.n_units} units"
            )
    elif isinstance(payload, ChoiceEvidence):
        if not isinstance(example, ChoiceExample):
            raise DatasetError(f"example {example.id!r}: choice evidence on an entailment example")
        if payload.choice > example.num_classes:
            raise DatasetError(
                f"example {example.id!r}: evidence choice {payload.choice} "
                f"out of range for {example.num_classes} choices"
            )
        limit = example.choice_length(payload.choice)
        if payload.units[-1] > limit:
            raise DatasetError(
                f"example {example.id!r}: evidence unit {payload.units[-1]} exceeds "
                f"the {limit} units of choice {payload.choice}"
            )
    elif not isinstance(example, ChoiceExample):
        raise DatasetError(f"example {example.id!r}: both_plausible on an entailment example")


# ---------------------------------------------------------------------------
# dataset file I/O


@dataclass(frozen=True)
class Dataset:
    task: str
    examples: tuple[Example, ...]
    evidence: tuple[EvidenceRecord, ...]

    def example_by_id(self, example_id: str) -> Example:
        for ex in self.examples:
            if ex.id == example_id:
                return ex
        raise KeyError(example_id)

    def gold_maps(self) -> dict[str, dict[SpanRef, SpanGold]]:
        return derive_gold_maps(self.examples, self.evidence)


def _parse_entailment_line(obj: Mapping, where: str) -> tuple[EntailmentExample, EvidenceRecord | None]:
    try:
        units_raw = obj["units"]
        hypothesis = obj["hypothesis"]
        label = obj["label"]
    except KeyError as exc:
        raise DatasetError(f"{where}: missing field {exc}") from exc
    if not isinstance(units_raw, list) or not units_raw:
        raise DatasetError(f"{where}: units must be a non-empty list")
    units = []
    for u in units_raw:
        if not isinstance(u, Mapping) or not isinstance(u.get("text"), str):
            raise DatasetError(f"{where}: each unit needs a text string")
        speaker = u.get("speaker")
        if speaker is not None and not isinstance(speaker, str):
            raise DatasetError(f"{where}: speaker must be a string or null")
        units.append(Unit(text=u["text"], speaker=speaker))
    if not isinstance(hypothesis, str) or not hypothesis.strip():
        raise DatasetError(f"{where}: hypothesis must be a non-empty string")
    if label not in ENTAILMENT_LABELS:
        raise DatasetError(f"{where}: unknown label {label!r}")
    example = EntailmentExample(
        id=str(obj["id"]), units=tuple(units), hypothesis=hypothesis, label=label
    )

    record = None
    if obj.get("evidence") is not None:
        if label != ENTAILED:
            raise DatasetError(f"{where}: evidence is only allowed on entailed examples")
        payload = payload_from_json(obj["evidence"], TASK_ENTAILMENT)
        validate_evidence(example, payload)
        record = EvidenceRecord(example_id=example.id, annotator_id=MERGED_ANNOTATOR, payload=payload)
    return example, record


def _parse_choice_line(obj: Mapping, where: str) -> tuple[ChoiceExample, EvidenceRecord | None]:
    choices_raw = obj.get("choices")
    if not isinstance(choices_raw, list) or len(choices_raw) < 2:
        raise DatasetError(f"{where}: choices must be a list of at least two texts")
    parsed: list[tuple[Unit, ...]] = []
    for choice in choices_raw:
        if not isinstance(choice, list) or not choice:
            raise DatasetError(f"{where}: each choice must be a non-empty list of units")
        units = []
        for u in choice:
            if not isinstance(u, Mapping) or not isinstance(u.get("text"), str):
                raise DatasetError(f"{where}: each unit needs a text string")
            units.append(Unit(text=u["text"]))
        parsed.append(tuple(units))
    n = max(len(c) for c in parsed)
    padded = tuple(c + tuple(Unit(text="", is_padding=True) for _ in range(n - len(c))) for c in parsed)

    positive = obj.get("positive")
    if positive is not None:
        if not isinstance(positive, int) or not 1 <= positive <= len(padded):
            raise DatasetError(f"{where}: positive must be a 1-based choice index or null")
    example = ChoiceExample(id=str(obj["id"]), choices=padded, positive=positive)

    record = None
    if obj.get("evidence") is not None:
        if positive is None:
            raise DatasetError(f"{where}: evidence is not allowed on a discarded example")
        payload = payload_from_json(obj["evidence"], TASK_CHOICE)
        if not isinstance(payload, ChoiceEvidence):
            raise DatasetError(f"{where}: dataset evidence must be a choice/units/case object")
        if payload.choice != positive:
            raise DatasetError(
                f"{where}: evidence names choice {payload.choice} but positive is {positive}"
            )
        validate_evidence(example, payload)
        record = EvidenceRecord(example_id=example.id, annotator_id=MERGED_ANNOTATOR, payload=payload)
    return example, record


def load_dataset(path: str, task: str | None = None) -> Dataset:
    """Load a line-delimited JSON dataset.

    ``task`` pins the expected task type; when ``None`` it is inferred from
    the first line and every later line must agree. Duplicate ids and
    out-of-range evidence are rejected with the offending line numbers.
    """
    if task is not None and task not in TASKS:
        raise DatasetError(f"unknown task {task!r}")
    examples: list[Example] = []
    records: list[EvidenceRecord] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{where}: malformed JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise DatasetError(f"{where}: expected a JSON object")
            if "id" not in obj:
                raise DatasetError(f"{where}: missing id")
            line_task = obj.get("task")
            if line_task not in TASKS:
                raise DatasetError(f"{where}: unknown task tag {line_task!r}")
            if task is None:
                task = line_task
            elif line_task != task:
                raise DatasetError(f"{where}: task tag {line_task!r} does not match {task!r}")

            ex_id = str(obj["id"])
            if ex_id in seen:
                raise DatasetError(
                    f"duplicate example id {ex_id!r} at {path}:{seen[ex_id]} and {path}:{lineno}"
                )
            seen[ex_id] = lineno

            if line_task == TASK_ENTAILMENT:
                example, record = _parse_entailment_line(obj, where)
            else:
                example, record = _parse_choice_line(obj, where)
            examples.append(example)
            if record is not None:
                records.append(record)
    if task is None:
        raise DatasetError(f"{path}: dataset is empty")
    return Dataset(task=task, examples=tuple(examples), evidence=tuple(records))


def example_to_json(example: Example, payload: EvidencePayload | None = None) -> dict:
    """Serialize one example (with optional merged evidence) to its file schema."""
    if isinstance(example, EntailmentExample):
        obj = {
            "id": example.id,
            "task": TASK_ENTAILMENT,
            "units": [{"speaker": u.speaker, "text": u.text} for u in example.units],
            "hypothesis": example.hypothesis,
            "label": example.label,
            "evidence": payload_to_json(payload) if payload is not None else None,
        }
        return obj
    obj = {
        "id": example.id,
        "task": TASK_CHOICE,
        "choices": [
            [{"text": u.text} for u in choice if not u.is_padding] for choice in example.choices
        ],
        "positive": example.positive,
        "evidence": payload_to_json(payload) if payload is not None else None,
    }
    if example.positive is None:
        obj["excluded"] = True
    return obj


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write a dataset back to its line-delimited JSON format.

    Loading the written file yields the same examples and evidence records
    (the merged annotator id is the one detail synthesized on load).
    """
    payloads = {rec.example_id: rec.payload for rec in dataset.evidence}
    with open(path, "w", encoding="utf-8") as fh:
        for ex in dataset.examples:
            fh.write(json.dumps(example_to_json(ex, payloads.get(ex.id)), ensure_ascii=False))
            fh.write("\n")
