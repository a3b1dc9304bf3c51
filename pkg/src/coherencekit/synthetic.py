"""Seeded synthetic datasets for exercising the evaluation pipeline.

These generators exist so the metric pipeline can be driven end to end
without any licensed corpus or trained model. ``python -m coherencekit.synthetic``
regenerates the bundled files under data/.
"""

from __future__ import annotations

import random

from .corpus import (
    ENTAILED,
    NOT_ENTAILED,
    CHOICE_CASES,
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

_WORDS = (
    "river", "lantern", "meeting", "garden", "ticket", "thunder", "coffee",
    "ladder", "signal", "harbor", "pocket", "window", "summer", "letter",
    "engine", "market", "bridge", "forest", "dinner", "guitar",
)

_SPEAKERS = ("A", "B")


def _sentence(rng: random.Random) -> str:
    words = rng.sample(_WORDS, k=rng.randint(3, 6))
    return " ".join(words) + "."


def make_entailment_examples(
    count: int,
    seed: int = 0,
    n_range: tuple[int, int] = (1, 5),
    id_prefix: str = "ent",
) -> Dataset:
    """Random dialogs; roughly half entailed, each with a random evidence range."""
    rng = random.Random(seed)
    examples = []
    records = []
    for i in range(count):
        n = rng.randint(*n_range)
        units = tuple(
            Unit(text=_sentence(rng), speaker=_SPEAKERS[j % 2]) for j in range(n)
        )
        label = ENTAILED if rng.random() < 0.5 else NOT_ENTAILED
        ex_id = f"{id_prefix}-{i:04d}"
        examples.append(
            EntailmentExample(id=ex_id, units=units, hypothesis=_sentence(rng), label=label)
        )
        if label == ENTAILED:
            start = rng.randint(1, n)
            end = rng.randint(start, n)
            records.append(
                EvidenceRecord(
                    example_id=ex_id,
                    annotator_id=MERGED_ANNOTATOR,
                    payload=EntailmentEvidence(start=start, end=end),
                )
            )
    return Dataset(task=TASK_ENTAILMENT, examples=tuple(examples), evidence=tuple(records))


def make_choice_examples(
    count: int,
    seed: int = 0,
    n_range: tuple[int, int] = (1, 5),
    id_prefix: str = "cho",
    discard_prob: float = 0.0,
) -> Dataset:
    """Random M=2..3 choice sets with evidence on the positive choice.

    Choice lengths vary so padding is exercised; evidence units always fall
    within the positive choice's true length. A ``discard_prob`` fraction of
    examples is emitted pre-discarded (positive null, no evidence).
    """
    rng = random.Random(seed)
    examples = []
    records = []
    for i in range(count):
        m = 2 if rng.random() < 0.8 else 3
        lengths = [rng.randint(*n_range) for _ in range(m)]
        choices = tuple(
            tuple(Unit(text=_sentence(rng)) for _ in range(length)) for length in lengths
        )
        n = max(lengths)
        padded = tuple(
            choice + tuple(Unit(text="", is_padding=True) for _ in range(n - len(choice)))
            for choice in choices
        )
        ex_id = f"{id_prefix}-{i:04d}"
        if rng.random() < discard_prob:
            examples.append(ChoiceExample(id=ex_id, choices=padded, positive=None))
            continue
        positive = rng.randint(1, m)
        examples.append(ChoiceExample(id=ex_id, choices=padded, positive=positive))
        limit = lengths[positive - 1]
        k = rng.randint(1, min(2, limit))
        units = tuple(sorted(rng.sample(range(1, limit + 1), k=k)))
        records.append(
            EvidenceRecord(
                example_id=ex_id,
                annotator_id=MERGED_ANNOTATOR,
                payload=ChoiceEvidence(choice=positive, units=units, case=rng.choice(CHOICE_CASES)),
            )
        )
    return Dataset(task=TASK_CHOICE, examples=tuple(examples), evidence=tuple(records))


def adversary_fixture() -> Dataset:
    """Twenty all-entailed dialogs, evidence spanning the full dialog.

    Ten have a single turn (every span is the full span, so a full-span
    oracle is coherent on them) and ten have three turns (five of the six
    spans are proper sub-spans). Against the endpoint adversary this yields
    accuracy 1.0, strict coherence 0.5, lenient macro 7/12, lenient micro 2/7.
    """
    rng = random.Random(1234)
    examples = []
    records = []
    for i in range(20):
        n = 1 if i < 10 else 3
        units = tuple(
            Unit(text=_sentence(rng), speaker=_SPEAKERS[j % 2]) for j in range(n)
        )
        ex_id = f"adv-{i:02d}"
        examples.append(
            EntailmentExample(id=ex_id, units=units, hypothesis=_sentence(rng), label=ENTAILED)
        )
        records.append(
            EvidenceRecord(
                example_id=ex_id,
                annotator_id=MERGED_ANNOTATOR,
                payload=EntailmentEvidence(start=1, end=n),
            )
        )
    return Dataset(task=TASK_ENTAILMENT, examples=tuple(examples), evidence=tuple(records))


def annotation_fixture(count: int = 10, seed: int = 77) -> Dataset:
    """Choice dataset for annotation-workflow runs: no evidence attached yet."""
    base = make_choice_examples(count, seed=seed, id_prefix="ann")
    return Dataset(task=TASK_CHOICE, examples=base.examples, evidence=())


def main(out_dir: str = "data") -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    save_dataset(make_entailment_examples(60, seed=11), os.path.join(out_dir, "synthetic_entailment.jsonl"))
    save_dataset(
        make_choice_examples(60, seed=22, discard_prob=0.05),
        os.path.join(out_dir, "synthetic_choice.jsonl"),
    )
    save_dataset(adversary_fixture(), os.path.join(out_dir, "adversary_entailment.jsonl"))
    save_dataset(annotation_fixture(), os.path.join(out_dir, "annotation_choice.jsonl"))


if __name__ == "__main__":
    main()
