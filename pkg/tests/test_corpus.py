from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coherencekit.corpus import (
    BothPlausible,
    ChoiceEvidence,
    ChoiceInstance,
    DatasetError,
    ENTAILED,
    EntailmentEvidence,
    EntailmentInstance,
    NOT_ENTAILED,
    SpanRef,
    Unit,
    derive_gold_choice,
    derive_gold_entailment,
    derive_gold_maps,
    enumerate_spans,
    load_dataset,
    payload_from_json,
    payload_to_json,
    realize_span,
    save_dataset,
)

from conftest import make_choice, make_entailment, write_jsonl


class TestEnumerateSpans:
    def test_single_unit(self):
        assert enumerate_spans(1) == [SpanRef(1, 1)]

    def test_three_units(self):
        spans = enumerate_spans(3)
        assert spans == [
            SpanRef(1, 1), SpanRef(1, 2), SpanRef(1, 3),
            SpanRef(2, 2), SpanRef(2, 3), SpanRef(3, 3),
        ]
        assert len(spans) == 6  # 3 + C(3, 2)

    def test_ten_units(self):
        assert len(enumerate_spans(10)) == 55

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            enumerate_spans(0)

    @given(st.integers(min_value=1, max_value=50))
    def test_count_distinct_and_bounded(self, n):
        spans = enumerate_spans(n)
        assert len(spans) == n * (n + 1) // 2
        assert len(set(spans)) == len(spans)
        assert all(1 <= s.start <= s.end <= n for s in spans)
        assert SpanRef(1, n) in spans
        assert spans == sorted(spans)


class TestDeriveGoldEntailment:
    def test_hand_containment_n4(self):
        # oracle: a span is entailed iff it contains (2, 3); checked over all 10
        ex = make_entailment("e1", ["a", "b", "c", "d"])
        gold = derive_gold_entailment(ex, EntailmentEvidence(2, 3))
        entailed = {s for s, g in gold.items() if g.label == ENTAILED}
        assert entailed == {SpanRef(1, 3), SpanRef(1, 4), SpanRef(2, 3), SpanRef(2, 4)}
        assert len(gold) == 10

    def test_negative_all_spans_negative(self):
        ex = make_entailment("e2", ["a", "b", "c"], label=NOT_ENTAILED)
        gold = derive_gold_entailment(ex, None)
        assert len(gold) == 6
        assert all(g.label == NOT_ENTAILED for g in gold.values())

    def test_full_evidence_only_full_span(self):
        ex = make_entailment("e3", ["a", "b", "c"])
        gold = derive_gold_entailment(ex, EntailmentEvidence(1, 3))
        entailed = {s for s, g in gold.items() if g.label == ENTAILED}
        assert entailed == {SpanRef(1, 3)}

    def test_entailed_without_evidence_rejected(self):
        ex = make_entailment("e4", ["a"])
        with pytest.raises(ValueError, match="requires an evidence range"):
            derive_gold_entailment(ex, None)

    def test_evidence_on_negative_rejected(self):
        ex = make_entailment("e5", ["a"], label=NOT_ENTAILED)
        with pytest.raises(ValueError, match="not allowed"):
            derive_gold_entailment(ex, EntailmentEvidence(1, 1))

    def test_full_span_gold_matches_end_task(self):
        pos = make_entailment("e6", ["a", "b"], label=ENTAILED)
        assert derive_gold_entailment(pos, EntailmentEvidence(2, 2))[SpanRef(1, 2)].label == ENTAILED
        neg = make_entailment("e7", ["a", "b"], label=NOT_ENTAILED)
        assert derive_gold_entailment(neg, None)[SpanRef(1, 2)].label == NOT_ENTAILED

    @given(
        n=st.integers(min_value=1, max_value=8),
        data=st.data(),
    )
    def test_monotone_in_span_containment(self, n, data):
        start = data.draw(st.integers(min_value=1, max_value=n))
        end = data.draw(st.integers(min_value=start, max_value=n))
        ex = make_entailment("em", [f"u{i}" for i in range(n)])
        gold = derive_gold_entailment(ex, EntailmentEvidence(start, end))
        for inner, g in gold.items():
            if g.label != ENTAILED:
                continue
            for outer in enumerate_spans(n):
                if outer.contains(inner):
                    assert gold[outer].label == ENTAILED


class TestDeriveGoldChoice:
    def test_adjacent_pair(self):
        ex = make_choice("c1", [["x", "y", "z"], ["p", "q", "r"]], positive=1)
        gold = derive_gold_choice(ex, ChoiceEvidence(choice=1, units=(2, 3), case="conflict-with-context"))
        confident = {s for s, g in gold.items() if g.confident_on is not None}
        assert confident == {SpanRef(2, 3), SpanRef(1, 3)}
        assert all(g.confident_on in (None, 1) for g in gold.values())

    def test_single_unit_evidence(self):
        ex = make_choice("c2", [["x", "y", "z"], ["p", "q", "r"]], positive=1)
        gold = derive_gold_choice(ex, ChoiceEvidence(choice=1, units=(2,), case="malformed"))
        confident = {s for s, g in gold.items() if g.confident_on is not None}
        assert confident == {SpanRef(1, 2), SpanRef(2, 2), SpanRef(2, 3), SpanRef(1, 3)}

    def test_disjoint_hull(self):
        ex = make_choice("c3", [["x", "y", "z"], ["p", "q", "r"]], positive=1)
        gold = derive_gold_choice(
            ex, ChoiceEvidence(choice=1, units=(1, 3), case="context-conflict-unresolved")
        )
        confident = {s for s, g in gold.items() if g.confident_on is not None}
        assert confident == {SpanRef(1, 3)}

    def test_non_positive_choice_rejected(self):
        ex = make_choice("c4", [["x"], ["p"]], positive=2)
        with pytest.raises(ValueError, match="positive choice is 2"):
            derive_gold_choice(ex, ChoiceEvidence(choice=1, units=(1,), case="malformed"))

    def test_empty_unit_set_rejected(self):
        with pytest.raises(DatasetError, match="non-empty"):
            ChoiceEvidence(choice=1, units=(), case="malformed")

    def test_full_span_is_confident_on_positive(self):
        ex = make_choice("c5", [["x", "y"], ["p", "q"]], positive=2)
        gold = derive_gold_choice(ex, ChoiceEvidence(choice=2, units=(1,), case="malformed"))
        assert gold[SpanRef(1, 2)].confident_on == 2


class TestRealizeSpan:
    def test_entailment_slice(self):
        ex = make_entailment("r1", ["one", "two", "three"], hypothesis="h")
        inst = realize_span(ex, SpanRef(2, 2))
        assert inst == EntailmentInstance(premise=("two",), hypothesis="h")

    def test_speaker_prefixes(self):
        ex = make_entailment("r2", ["hi", "yo"], speakers=["A", "B"])
        inst = realize_span(ex, SpanRef(1, 2))
        assert inst.premise == ("A: hi", "B: yo")

    def test_choice_identity_span(self):
        ex = make_choice("r3", [["a1", "a2", "a3"], ["b1", "b2", "b3"]])
        inst = realize_span(ex, SpanRef(1, 3))
        assert inst == ChoiceInstance(choices=(("a1", "a2", "a3"), ("b1", "b2", "b3")))

    def test_padding_renders_empty(self):
        ex = make_choice("r4", [["a1", "a2"], ["b1", "b2", "b3"]])
        inst = realize_span(ex, SpanRef(3, 3))
        assert inst.choices == (("",), ("b3",))

    def test_out_of_range(self):
        ex = make_entailment("r5", ["one"])
        with pytest.raises(ValueError, match="out of range"):
            realize_span(ex, SpanRef(1, 2))


class TestUnitInvariants:
    def test_empty_text_rejected(self):
        with pytest.raises(DatasetError):
            Unit(text="   ")

    def test_padding_is_allowed_empty(self):
        assert Unit(text="", is_padding=True).rendered() == ""


class TestDatasetIO:
    def test_single_line_with_evidence(self, tmp_path):
        path = write_jsonl(
            tmp_path / "d.jsonl",
            [
                {
                    "id": "ce-1",
                    "task": "entailment",
                    "units": [
                        {"speaker": "A", "text": "u1"},
                        {"speaker": "B", "text": "u2"},
                        {"speaker": "A", "text": "u3"},
                    ],
                    "hypothesis": "h",
                    "label": "entailed",
                    "evidence": {"start": 2, "end": 3},
                }
            ],
        )
        ds = load_dataset(path)
        assert len(ds.examples) == 1
        assert ds.examples[0].n_units == 3
        assert len(ds.evidence) == 1
        assert ds.evidence[0].payload == EntailmentEvidence(2, 3)

    def test_duplicate_id_names_both_lines(self, tmp_path):
        row = {
            "id": "ce-7", "task": "entailment",
            "units": [{"speaker": None, "text": "u"}],
            "hypothesis": "h", "label": "not_entailed", "evidence": None,
        }
        path = write_jsonl(tmp_path / "d.jsonl", [row, row])
        with pytest.raises(DatasetError) as err:
            load_dataset(path)
        assert "ce-7" in str(err.value)
        assert ":1" in str(err.value) and ":2" in str(err.value)

    def test_choice_evidence_out_of_range(self, tmp_path):
        path = write_jsonl(
            tmp_path / "d.jsonl",
            [
                {
                    "id": "a-1",
                    "task": "choice",
                    "choices": [
                        [{"text": "s1"}, {"text": "s2"}, {"text": "s3"}],
                        [{"text": "t1"}, {"text": "t2"}, {"text": "t3"}],
                    ],
                    "positive": 1,
                    "evidence": {"choice": 1, "units": [4], "case": "malformed"},
                }
            ],
        )
        with pytest.raises(DatasetError, match="exceeds"):
            load_dataset(path)

    def test_evidence_into_padding_rejected(self, tmp_path):
        # unit 3 exists only as padding of the short positive choice
        path = write_jsonl(
            tmp_path / "d.jsonl",
            [
                {
                    "id": "a-2",
                    "task": "choice",
                    "choices": [
                        [{"text": "s1"}, {"text": "s2"}],
                        [{"text": "t1"}, {"text": "t2"}, {"text": "t3"}],
                    ],
                    "positive": 1,
                    "evidence": {"choice": 1, "units": [3], "case": "malformed"},
                }
            ],
        )
        with pytest.raises(DatasetError, match="exceeds"):
            load_dataset(path)

    def test_unknown_task_tag(self, tmp_path):
        path = write_jsonl(tmp_path / "d.jsonl", [{"id": "x", "task": "tagging"}])
        with pytest.raises(DatasetError, match="unknown task tag"):
            load_dataset(path)

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            '{"id": "a", "task": "entailment", "units": [{"speaker": null, "text": "u"}], '
            '"hypothesis": "h", "label": "not_entailed", "evidence": null}\n'
            "{oops\n"
        )
        with pytest.raises(DatasetError, match=r"d\.jsonl:2"):
            load_dataset(str(path))

    def test_task_mismatch_rejected(self, tmp_path):
        path = write_jsonl(
            tmp_path / "d.jsonl",
            [
                {
                    "id": "a", "task": "entailment",
                    "units": [{"speaker": None, "text": "u"}],
                    "hypothesis": "h", "label": "not_entailed", "evidence": None,
                }
            ],
        )
        with pytest.raises(DatasetError, match="does not match"):
            load_dataset(path, task="choice")

    def test_evidence_on_negative_rejected(self, tmp_path):
        path = write_jsonl(
            tmp_path / "d.jsonl",
            [
                {
                    "id": "a", "task": "entailment",
                    "units": [{"speaker": None, "text": "u"}],
                    "hypothesis": "h", "label": "not_entailed",
                    "evidence": {"start": 1, "end": 1},
                }
            ],
        )
        with pytest.raises(DatasetError, match="only allowed on entailed"):
            load_dataset(path)

    def test_round_trip_identity(self, tmp_path):
        from coherencekit.synthetic import make_choice_examples, make_entailment_examples

        for ds in (make_entailment_examples(8, seed=5), make_choice_examples(8, seed=6, discard_prob=0.2)):
            p1 = tmp_path / "one.jsonl"
            p2 = tmp_path / "two.jsonl"
            save_dataset(ds, str(p1))
            loaded = load_dataset(str(p1))
            assert loaded.examples == ds.examples
            assert loaded.evidence == ds.evidence
            save_dataset(loaded, str(p2))
            assert p1.read_bytes() == p2.read_bytes()

    def test_discarded_round_trip(self, tmp_path):
        ex = make_choice("d1", [["x"], ["y"]], positive=None)
        path = tmp_path / "d.jsonl"
        from coherencekit.corpus import Dataset, TASK_CHOICE

        save_dataset(Dataset(task=TASK_CHOICE, examples=(ex,), evidence=()), str(path))
        line = json.loads(path.read_text())
        assert line["positive"] is None
        assert line["excluded"] is True
        loaded = load_dataset(str(path))
        assert loaded.examples[0].positive is None


class TestGoldMaps:
    def test_covers_all_examples_except_discarded(self):
        from conftest import choice_dataset

        ds = choice_dataset(
            [
                (make_choice("g1", [["a", "b"], ["c", "d"]], positive=1), ((1,), "malformed")),
                (make_choice("g2", [["a"], ["c"]], positive=None), None),
            ]
        )
        maps = ds.gold_maps()
        assert set(maps) == {"g1"}
        assert len(maps["g1"]) == 3

    def test_missing_evidence_rejected(self):
        from conftest import entailment_dataset

        ds = entailment_dataset([(make_entailment("g3", ["a"]), None)])
        with pytest.raises(ValueError, match="no evidence record"):
            ds.gold_maps()

    def test_dangling_evidence_rejected(self):
        from coherencekit.corpus import EvidenceRecord

        ex = make_entailment("g4", ["a"], label=NOT_ENTAILED)
        rec = EvidenceRecord(example_id="ghost", annotator_id="m", payload=EntailmentEvidence(1, 1))
        with pytest.raises(DatasetError, match="unknown example"):
            derive_gold_maps([ex], [rec])


class TestPayloadJson:
    @pytest.mark.parametrize(
        "payload,task",
        [
            (EntailmentEvidence(2, 3), "entailment"),
            (ChoiceEvidence(choice=1, units=(2, 3), case="conflict-with-context"), "choice"),
            (BothPlausible(), "choice"),
        ],
    )
    def test_round_trip(self, payload, task):
        assert payload_from_json(payload_to_json(payload), task) == payload

    def test_units_normalized(self):
        ev = ChoiceEvidence(choice=1, units=(3, 2, 3), case="malformed")
        assert ev.units == (2, 3)
