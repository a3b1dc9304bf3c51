"""Evidence-annotation workflow: two annotator passes, adjudication, export.

State lives in an append-only line-delimited JSON log; the in-memory view is
a pure fold over that log, so replaying it reproduces the state exactly. All
writes funnel through a single lock, which is the commit point that orders
concurrent submissions.

Task lifecycle: unassigned -> single-annotated -> {double-annotated (equal
payloads, auto-merged) | disagreed} -> adjudicated; a both-plausible verdict
(agreed, or chosen by the adjudicator) lands in discarded instead, and the
example is excluded from coherence evaluation.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Sequence

from . import corpus
from .corpus import (
    BothPlausible,
    ChoiceExample,
    Dataset,
    EntailmentExample,
    EvidencePayload,
    EvidenceRecord,
    Example,
    payload_from_json,
    payload_to_json,
    validate_evidence,
)
from .stats import AgreementReport, cohen_kappa

STATUS_UNASSIGNED = "unassigned"
STATUS_SINGLE = "single-annotated"
STATUS_DOUBLE = "double-annotated"
STATUS_DISAGREED = "disagreed"
STATUS_ADJUDICATED = "adjudicated"
STATUS_DISCARDED = "discarded"
STATUSES = (
    STATUS_UNASSIGNED,
    STATUS_SINGLE,
    STATUS_DOUBLE,
    STATUS_DISAGREED,
    STATUS_ADJUDICATED,
    STATUS_DISCARDED,
)

# statuses with both passes in; agreement() computes kappa over these
_COMPLETE = (STATUS_DOUBLE, STATUS_DISAGREED, STATUS_ADJUDICATED, STATUS_DISCARDED)


class AnnotationError(ValueError):
    """A submission, adjudication, or export request violates workflow state."""


@dataclass(frozen=True)
class AnnotationTask:
    example_id: str
    task: str
    status: str


@dataclass
class _TaskState:
    example: Example
    submissions: dict[str, EvidencePayload]
    adjudication: EvidencePayload | None = None
    status: str = STATUS_UNASSIGNED

    def final_payload(self) -> EvidencePayload | None:
        if self.adjudication is not None:
            return self.adjudication
        if self.status in (STATUS_DOUBLE, STATUS_DISCARDED) and self.submissions:
            return next(iter(self.submissions.values()))
        return None


def payload_label(payload: EvidencePayload) -> str:
    """Canonical label string for agreement computation (exact-match equality)."""
    if isinstance(payload, corpus.EntailmentEvidence):
        return f"range:{payload.start}-{payload.end}"
    if isinstance(payload, corpus.ChoiceEvidence):
        units = ",".join(str(u) for u in payload.units)
        return f"choice:{payload.choice}|units:{units}|case:{payload.case}"
    return "both_plausible"


def render_example(example: Example) -> dict:
    """Annotator-facing view of an example: text only, no gold fields.

    Padding units are not shown; annotators see the true sentences.
    """
    if isinstance(example, EntailmentExample):
        return {
            "example_id": example.id,
            "task": example.task,
            "units": [
                {"index": i, "speaker": u.speaker, "text": u.text}
                for i, u in enumerate(example.units, start=1)
            ],
            "hypothesis": example.hypothesis,
        }
    return {
        "example_id": example.id,
        "task": example.task,
        "choices": [
            [
                {"index": i, "text": u.text}
                for i, u in enumerate(choice, start=1)
                if not u.is_padding
            ]
            for choice in example.choices
        ],
    }


class AnnotationStore:
    """Append-only annotation log plus its derived current-state view.

    ``annotators`` is the fixed pair performing the two passes and
    ``adjudicator`` the distinct third identity resolving disagreements.
    Reopening a store on an existing log replays it; the configured
    identities must match the log header.
    """

    def __init__(
        self,
        dataset: Dataset,
        log_path: str,
        annotators: Sequence[str],
        adjudicator: str,
        clock: Callable[[], float] = time.time,
    ):
        if len(annotators) != 2 or len(set(annotators)) != 2:
            raise AnnotationError("exactly two distinct annotators are required")
        if adjudicator in annotators:
            raise AnnotationError("the adjudicator must be distinct from both annotators")
        self.annotators = (annotators[0], annotators[1])
        self.adjudicator = adjudicator
        self.dataset = dataset
        self._log_path = log_path
        self._clock = clock
        self._lock = threading.Lock()
        self._tasks: dict[str, _TaskState] = {}
        for ex in dataset.examples:
            if isinstance(ex, EntailmentExample):
                if ex.label != corpus.ENTAILED:
                    continue
            elif ex.positive is None:
                continue
            self._tasks[ex.id] = _TaskState(example=ex, submissions={})
        self._order = sorted(self._tasks)

        if os.path.exists(log_path) and os.path.getsize(log_path) > 0:
            self._replay()
        else:
            self._append(
                {
                    "type": "init",
                    "annotators": list(self.annotators),
                    "adjudicator": self.adjudicator,
                    "examples": len(self._tasks),
                }
            )

    @property
    def log_path(self) -> str:
        return self._log_path

    # -- log plumbing -------------------------------------------------------

    def _append(self, event: dict) -> None:
        event = dict(event)
        event["ts"] = self._clock()
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _replay(self) -> None:
        with open(self._log_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise AnnotationError(f"{self._log_path}:{lineno}: malformed log line: {exc.msg}") from exc
                kind = event.get("type")
                if kind == "init":
                    if tuple(event.get("annotators", ())) != self.annotators or event.get(
                        "adjudicator"
                    ) != self.adjudicator:
                        raise AnnotationError(
                            f"{self._log_path}:{lineno}: log was started with different identities"
                        )
                elif kind == "submit":
                    state = self._state_for(event["example_id"])
                    payload = payload_from_json(event["payload"], state.example.task)
                    self._apply_submit(state, event["annotator"], payload)
                elif kind == "adjudicate":
                    state = self._state_for(event["example_id"])
                    payload = payload_from_json(event["payload"], state.example.task)
                    self._apply_adjudication(state, event["adjudicator"], payload)
                else:
                    raise AnnotationError(f"{self._log_path}:{lineno}: unknown event type {kind!r}")

    def _state_for(self, example_id: str) -> _TaskState:
        state = self._tasks.get(example_id)
        if state is None:
            raise AnnotationError(f"example {example_id!r} is not an annotation task")
        return state

    # -- pure state transitions (shared by live calls and replay) -----------

    def _apply_submit(self, state: _TaskState, annotator: str, payload: EvidencePayload) -> str:
        if annotator not in self.annotators:
            raise AnnotationError(f"unknown annotator {annotator!r}")
        if annotator in state.submissions:
            raise AnnotationError(
                f"annotator {annotator!r} already submitted for {state.example.id!r}"
            )
        if state.status not in (STATUS_UNASSIGNED, STATUS_SINGLE):
            raise AnnotationError(f"task {state.example.id!r} is not awaiting annotation")
        if not isinstance(payload, BothPlausible):
            validate_evidence(state.example, payload)
        elif not isinstance(state.example, ChoiceExample):
            raise AnnotationError("both_plausible applies only to choice tasks")

        state.submissions[annotator] = payload
        if len(state.submissions) == 1:
            state.status = STATUS_SINGLE
        else:
            first, second = (state.submissions[a] for a in self.annotators)
            if first == second:
                state.status = STATUS_DISCARDED if isinstance(first, BothPlausible) else STATUS_DOUBLE
            else:
                state.status = STATUS_DISAGREED
        return state.status

    def _apply_adjudication(
        self, state: _TaskState, adjudicator: str, payload: EvidencePayload
    ) -> str:
        if adjudicator != self.adjudicator:
            raise AnnotationError(f"{adjudicator!r} is not the configured adjudicator")
        if state.status != STATUS_DISAGREED:
            raise AnnotationError(
                f"task {state.example.id!r} is {state.status}, not awaiting adjudication"
            )
        if not isinstance(payload, BothPlausible):
            validate_evidence(state.example, payload)
        elif not isinstance(state.example, ChoiceExample):
            raise AnnotationError("both_plausible applies only to choice tasks")
        state.adjudication = payload
        state.status = STATUS_DISCARDED if isinstance(payload, BothPlausible) else STATUS_ADJUDICATED
        return state.status

    # -- public operations ---------------------------------------------------

    def next_task(self, annotator_id: str) -> dict | None:
        """Lowest-id task awaiting this identity, with the rendered example.

        Annotators never receive another annotator's payload or any gold
        field; the adjudicator's view of a disagreement includes both
        payloads.
        """
        with self._lock:
            if annotator_id == self.adjudicator:
                for ex_id in self._order:
                    state = self._tasks[ex_id]
                    if state.status == STATUS_DISAGREED:
                        return self._disagreement_view(state)
                return None
            if annotator_id not in self.annotators:
                raise AnnotationError(f"unknown annotator {annotator_id!r}")
            for ex_id in self._order:
                state = self._tasks[ex_id]
                if state.status in (STATUS_UNASSIGNED, STATUS_SINGLE) and annotator_id not in state.submissions:
                    return {
                        "example_id": ex_id,
                        "task": state.example.task,
                        "status": state.status,
                        "example": render_example(state.example),
                    }
            return None

    def _disagreement_view(self, state: _TaskState) -> dict:
        return {
            "example_id": state.example.id,
            "task": state.example.task,
            "status": state.status,
            "example": render_example(state.example),
            "payloads": {
                annotator: payload_to_json(payload)
                for annotator, payload in state.submissions.items()
            },
        }

    def submit(self, annotator_id: str, example_id: str, payload: EvidencePayload) -> str:
        """Record one annotator pass; returns the task's new status."""
        with self._lock:
            state = self._state_for(example_id)
            # validate against a copy so a rejected event is never logged
            probe = _TaskState(
                example=state.example,
                submissions=dict(state.submissions),
                adjudication=state.adjudication,
                status=state.status,
            )
            self._apply_submit(probe, annotator_id, payload)
            self._append(
                {
                    "type": "submit",
                    "annotator": annotator_id,
                    "example_id": example_id,
                    "payload": payload_to_json(payload),
                }
            )
            return self._apply_submit(state, annotator_id, payload)

    def adjudicate(self, adjudicator_id: str, example_id: str, payload: EvidencePayload) -> EvidenceRecord:
        """Resolve a disagreement; the adjudicator may author a novel payload."""
        with self._lock:
            state = self._state_for(example_id)
            probe = _TaskState(
                example=state.example,
                submissions=dict(state.submissions),
                adjudication=state.adjudication,
                status=state.status,
            )
            self._apply_adjudication(probe, adjudicator_id, payload)
            self._append(
                {
                    "type": "adjudicate",
                    "adjudicator": adjudicator_id,
                    "example_id": example_id,
                    "payload": payload_to_json(payload),
                }
            )
            self._apply_adjudication(state, adjudicator_id, payload)
            return EvidenceRecord(example_id=example_id, annotator_id=adjudicator_id, payload=payload)

    def example_task(self, example_id: str) -> str:
        with self._lock:
            return self._state_for(example_id).example.task

    def progress_of(self, example_id: str) -> str:
        with self._lock:
            return self._state_for(example_id).status

    def disagreements(self) -> list[dict]:
        with self._lock:
            return [
                self._disagreement_view(self._tasks[ex_id])
                for ex_id in self._order
                if self._tasks[ex_id].status == STATUS_DISAGREED
            ]

    def progress(self) -> dict[str, int]:
        with self._lock:
            counts = {status: 0 for status in STATUSES}
            for state in self._tasks.values():
                counts[state.status] += 1
            counts["total"] = len(self._tasks)
            return counts

    def agreement(self) -> AgreementReport:
        """Cohen's kappa over both annotators' pre-adjudication payloads.

        Labels are canonical payload strings compared by exact match;
        both_plausible is one more label value. Adjudications never enter.
        """
        with self._lock:
            labels_a: list[str] = []
            labels_b: list[str] = []
            for ex_id in self._order:
                state = self._tasks[ex_id]
                if state.status in _COMPLETE:
                    labels_a.append(payload_label(state.submissions[self.annotators[0]]))
                    labels_b.append(payload_label(state.submissions[self.annotators[1]]))
        if not labels_a:
            raise AnnotationError("no doubly-annotated tasks yet")
        return cohen_kappa(labels_a, labels_b)

    def pending(self) -> list[str]:
        with self._lock:
            return [
                ex_id
                for ex_id in self._order
                if self._tasks[ex_id].status not in (STATUS_DOUBLE, STATUS_ADJUDICATED, STATUS_DISCARDED)
            ]

    def final_evidence(self) -> dict[str, EvidencePayload | None]:
        """Merged payload per task (None for discarded tasks)."""
        with self._lock:
            out: dict[str, EvidencePayload | None] = {}
            for ex_id in self._order:
                state = self._tasks[ex_id]
                if state.status == STATUS_DISCARDED:
                    out[ex_id] = None
                elif state.status in (STATUS_DOUBLE, STATUS_ADJUDICATED):
                    out[ex_id] = state.final_payload()
            return out

    def export(self, out_path: str) -> Dataset:
        """Write the merged dataset with final evidence filled in.

        Every task must be resolved first. Discarded choice examples are
        emitted with ``positive`` nulled and an exclusion marker. Output is
        sorted by example id, so re-export is byte-identical.
        """
        pending = self.pending()
        if pending:
            raise AnnotationError(f"tasks still pending: {', '.join(pending)}")
        final = self.final_evidence()

        examples: list[Example] = []
        records: list[EvidenceRecord] = []
        for ex in sorted(self.dataset.examples, key=lambda e: e.id):
            payload = final.get(ex.id)
            if ex.id in final and payload is None:
                # both-plausible: drop the positive mark so the example is excluded
                assert isinstance(ex, ChoiceExample)
                examples.append(ChoiceExample(id=ex.id, choices=ex.choices, positive=None))
                continue
            if payload is not None:
                if isinstance(ex, ChoiceExample) and isinstance(payload, corpus.ChoiceEvidence):
                    if payload.choice != ex.positive:
                        raise AnnotationError(
                            f"example {ex.id!r}: merged evidence names choice {payload.choice} "
                            f"but the positive choice is {ex.positive}; re-adjudication needed"
                        )
                records.append(
                    EvidenceRecord(example_id=ex.id, annotator_id=corpus.MERGED_ANNOTATOR, payload=payload)
                )
            examples.append(ex)
        merged = Dataset(task=self.dataset.task, examples=tuple(examples), evidence=tuple(records))
        corpus.save_dataset(merged, out_path)
        return merged
