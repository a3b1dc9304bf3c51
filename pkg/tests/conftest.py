from __future__ import annotations

import json
import pathlib

import pytest

from coherencekit.corpus import (
    ChoiceEvidence,
    ChoiceExample,
    Dataset,
    EntailmentEvidence,
    EntailmentExample,
    EvidenceRecord,
    MERGED_ANNOTATOR,
    TASK_CHOICE,
    TASK_ENTAILMENT,
    Unit,
    save_dataset,
)

TESTS_DIR = pathlib.Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
BUNDLED_DIR = TESTS_DIR.parent / "data"


def make_entailment(ex_id, texts, hypothesis="something happened", label="entailed",
                    speakers=None):
    units = tuple(
        Unit(text=t, speaker=(speakers[i] if speakers else None)) for i, t in enumerate(texts)
    )
    return EntailmentExample(id=ex_id, units=units, hypothesis=hypothesis, label=label)


def make_choice(ex_id, choice_texts, positive=1):
    n = max(len(c) for c in choice_texts)
    choices = tuple(
        tuple(Unit(text=t) for t in c) + tuple(Unit(text="", is_padding=True) for _ in range(n - len(c)))
        for c in choice_texts
    )
    return ChoiceExample(id=ex_id, choices=choices, positive=positive)


def entailment_dataset(rows):
    """rows: list of (example, evidence_range_or_None)."""
    examples = []
    records = []
    for ex, ev in rows:
        examples.append(ex)
        if ev is not None:
            records.append(
                EvidenceRecord(
                    example_id=ex.id,
                    annotator_id=MERGED_ANNOTATOR,
                    payload=EntailmentEvidence(start=ev[0], end=ev[1]),
                )
            )
    return Dataset(task=TASK_ENTAILMENT, examples=tuple(examples), evidence=tuple(records))


def choice_dataset(rows):
    """rows: list of (example, (units, case)_or_None)."""
    examples = []
    records = []
    for ex, ev in rows:
        examples.append(ex)
        if ev is not None:
            units, case = ev
            records.append(
                EvidenceRecord(
                    example_id=ex.id,
                    annotator_id=MERGED_ANNOTATOR,
                    payload=ChoiceEvidence(choice=ex.positive, units=tuple(units), case=case),
                )
            )
    return Dataset(task=TASK_CHOICE, examples=tuple(examples), evidence=tuple(records))


@pytest.fixture
def dataset_path(tmp_path):
    """Write a Dataset to a temp JSONL file and return the path."""

    def write(dataset, name="dataset.jsonl"):
        path = tmp_path / name
        save_dataset(dataset, str(path))
        return str(path)

    return write


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)
