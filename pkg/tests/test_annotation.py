from __future__ import annotations

import itertools
import json

import pytest

from coherencekit.annotation import (
    AnnotationError,
    AnnotationStore,
    STATUS_ADJUDICATED,
    STATUS_DISAGREED,
    STATUS_DISCARDED,
    STATUS_DOUBLE,
    STATUS_SINGLE,
    payload_label,
)
from coherencekit.corpus import (
    BothPlausible,
    ChoiceEvidence,
    EntailmentEvidence,
    NOT_ENTAILED,
    load_dataset,
)
from coherencekit.synthetic import annotation_fixture

from conftest import choice_dataset, entailment_dataset, make_choice, make_entailment


@pytest.fixture
def fresh_store(tmp_path):
    counter = itertools.count()

    def build(dataset=None, name="log.jsonl"):
        if dataset is None:
            dataset = annotation_fixture()
        return AnnotationStore(
            dataset,
            str(tmp_path / name),
            annotators=("a1", "a2"),
            adjudicator="adj",
            clock=lambda: float(next(counter)),
        )

    return build


def evidence_for(store, example_id, unit=1, case="malformed"):
    """A schema-valid payload naming the example's positive choice."""
    ex = store.dataset.example_by_id(example_id)
    return ChoiceEvidence(choice=ex.positive, units=(unit,), case=case)


def run_scripted_session(store):
    """Two annotators over 10 choice examples: 7 agreements, 2 disagreements
    (later adjudicated), 1 agreed both-plausible discard."""
    order = store.pending()
    assert len(order) == 10
    disagreed = order[3], order[6]
    discarded = order[9]
    for ex_id in order:
        if ex_id == discarded:
            store.submit("a1", ex_id, BothPlausible())
            store.submit("a2", ex_id, BothPlausible())
        elif ex_id in disagreed:
            store.submit("a1", ex_id, evidence_for(store, ex_id, case="malformed"))
            store.submit("a2", ex_id, evidence_for(store, ex_id, case="conflict-with-context"))
        else:
            store.submit("a1", ex_id, evidence_for(store, ex_id))
            store.submit("a2", ex_id, evidence_for(store, ex_id))
    return disagreed, discarded


class TestWorkflow:
    def test_queue_and_statuses(self, fresh_store):
        store = fresh_store()
        first = store.next_task("a1")
        assert first["example_id"] == store.pending()[0]
        assert first["status"] == "unassigned"

        ex_id = first["example_id"]
        assert store.submit("a1", ex_id, evidence_for(store, ex_id)) == STATUS_SINGLE
        # a1 moves on; a2 still sees the first example
        assert store.next_task("a1")["example_id"] != ex_id
        assert store.next_task("a2")["example_id"] == ex_id
        assert store.submit("a2", ex_id, evidence_for(store, ex_id)) == STATUS_DOUBLE

    def test_disagreement_and_adjudication(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, evidence_for(store, ex_id, case="malformed"))
        status = store.submit("a2", ex_id, evidence_for(store, ex_id, case="conflict-with-context"))
        assert status == STATUS_DISAGREED

        view = store.next_task("adj")
        assert view["example_id"] == ex_id
        assert set(view["payloads"]) == {"a1", "a2"}

        record = store.adjudicate("adj", ex_id, evidence_for(store, ex_id, case="malformed"))
        assert record.annotator_id == "adj"
        assert store.progress_of(ex_id) == STATUS_ADJUDICATED

    def test_adjudicator_can_author_novel_payload(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, evidence_for(store, ex_id, unit=1))
        store.submit("a2", ex_id, evidence_for(store, ex_id, case="conflict-with-context"))
        novel = evidence_for(store, ex_id, case="context-conflict-unresolved")
        record = store.adjudicate("adj", ex_id, novel)
        assert record.payload == novel

    def test_agreed_both_plausible_discards(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, BothPlausible())
        assert store.submit("a2", ex_id, BothPlausible()) == STATUS_DISCARDED

    def test_single_both_plausible_disagrees(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, BothPlausible())
        assert store.submit("a2", ex_id, evidence_for(store, ex_id)) == STATUS_DISAGREED
        store.adjudicate("adj", ex_id, BothPlausible())
        assert store.progress_of(ex_id) == STATUS_DISCARDED

    def test_double_submission_rejected(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, evidence_for(store, ex_id))
        with pytest.raises(AnnotationError, match="already submitted"):
            store.submit("a1", ex_id, evidence_for(store, ex_id))

    def test_unknown_annotator_rejected(self, fresh_store):
        store = fresh_store()
        with pytest.raises(AnnotationError, match="unknown annotator"):
            store.next_task("a9")
        with pytest.raises(AnnotationError, match="unknown annotator"):
            store.submit("a9", store.pending()[0], BothPlausible())

    def test_adjudicate_on_agreed_task_rejected(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, evidence_for(store, ex_id))
        store.submit("a2", ex_id, evidence_for(store, ex_id))
        with pytest.raises(AnnotationError, match="not awaiting adjudication"):
            store.adjudicate("adj", ex_id, evidence_for(store, ex_id))

    def test_adjudicator_identity_guard(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, evidence_for(store, ex_id, case="malformed"))
        store.submit("a2", ex_id, evidence_for(store, ex_id, case="conflict-with-context"))
        with pytest.raises(AnnotationError, match="not the configured adjudicator"):
            store.adjudicate("a1", ex_id, evidence_for(store, ex_id))

    def test_adjudicator_cannot_be_an_annotator(self, tmp_path):
        with pytest.raises(AnnotationError, match="distinct"):
            AnnotationStore(annotation_fixture(), str(tmp_path / "x.jsonl"), ("a1", "a2"), "a1")

    def test_out_of_range_submission_rejected(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        with pytest.raises(ValueError, match="exceeds"):
            store.submit("a1", ex_id, evidence_for(store, ex_id, unit=99))

    def test_exhaustion_returns_none(self, fresh_store):
        store = fresh_store()
        for ex_id in store.pending():
            store.submit("a1", ex_id, evidence_for(store, ex_id))
        assert store.next_task("a1") is None
        assert store.next_task("adj") is None  # nothing disagreed yet

    def test_entailment_negatives_are_not_tasks(self, fresh_store):
        ds = entailment_dataset(
            [
                (make_entailment("n1", ["u"], label=NOT_ENTAILED), None),
                (make_entailment("p1", ["u", "v"]), None),
            ]
        )
        store = fresh_store(dataset=ds)
        assert store.pending() == ["p1"]
        store.submit("a1", "p1", EntailmentEvidence(1, 2))
        store.submit("a2", "p1", EntailmentEvidence(1, 2))
        assert store.progress_of("p1") == STATUS_DOUBLE


class TestBlindness:
    FORBIDDEN = ("label", "positive", "evidence", "payloads", "gold")

    def test_annotator_views_carry_no_gold_or_peer_payloads(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, evidence_for(store, ex_id))
        view = store.next_task("a2")
        blob = json.dumps(view)
        for key in self.FORBIDDEN:
            assert f'"{key}"' not in blob

    def test_adjudicator_view_includes_both_payloads(self, fresh_store):
        store = fresh_store()
        ex_id = store.pending()[0]
        store.submit("a1", ex_id, evidence_for(store, ex_id, case="malformed"))
        store.submit("a2", ex_id, evidence_for(store, ex_id, case="conflict-with-context"))
        view = store.next_task("adj")
        assert view["payloads"]["a1"]["case"] == "malformed"
        assert view["payloads"]["a2"]["case"] == "conflict-with-context"


class TestAgreement:
    def test_all_equal_kappa_one(self, fresh_store):
        store = fresh_store()
        for ex_id in store.pending()[:4]:
            store.submit("a1", ex_id, evidence_for(store, ex_id))
            store.submit("a2", ex_id, evidence_for(store, ex_id))
        assert store.agreement().kappa == 1.0

    def test_hand_pattern_kappa_half(self, fresh_store):
        # reuse the stats hand example: labels E,E,N,N vs E,N,N,N over 4 tasks
        ds = choice_dataset(
            [(make_choice(f"t{i}", [["x", "y"], ["p", "q"]], positive=1), None) for i in range(4)]
        )
        store = fresh_store(dataset=ds)
        payload_e = ChoiceEvidence(choice=1, units=(1,), case="malformed")
        payload_n = ChoiceEvidence(choice=1, units=(2,), case="malformed")
        plan = [("t0", payload_e, payload_e), ("t1", payload_e, payload_n),
                ("t2", payload_n, payload_n), ("t3", payload_n, payload_n)]
        for ex_id, a1_payload, a2_payload in plan:
            store.submit("a1", ex_id, a1_payload)
            store.submit("a2", ex_id, a2_payload)
        report = store.agreement()
        assert report.kappa == 0.5

    def test_adjudication_never_changes_kappa(self, fresh_store):
        store = fresh_store()
        disagreed, _ = run_scripted_session(store)
        before = store.agreement()
        for ex_id in disagreed:
            store.adjudicate("adj", ex_id, evidence_for(store, ex_id, case="malformed"))
        assert store.agreement() == before

    def test_no_pairs_yet(self, fresh_store):
        store = fresh_store()
        store.submit("a1", store.pending()[0], BothPlausible())
        with pytest.raises(AnnotationError, match="no doubly-annotated"):
            store.agreement()

    def test_payload_labels_distinguish_both_plausible(self):
        assert payload_label(BothPlausible()) == "both_plausible"
        assert payload_label(EntailmentEvidence(2, 3)) == "range:2-3"


class TestConcurrentSubmissions:
    def test_simultaneous_submissions_both_land(self, fresh_store):
        import threading

        store = fresh_store()
        order = store.pending()
        errors = []

        def submit_all(annotator):
            try:
                for ex_id in order:
                    store.submit(annotator, ex_id, evidence_for(store, ex_id))
            except Exception as exc:  # pragma: no cover - failure reporting
                errors.append(exc)

        threads = [threading.Thread(target=submit_all, args=(a,)) for a in ("a1", "a2")]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        counts = store.progress()
        assert counts["double-annotated"] == len(order)
        # the log replays to the same state regardless of arrival interleaving
        replayed = AnnotationStore(
            annotation_fixture(), store.log_path, ("a1", "a2"), "adj"
        )
        assert replayed.progress() == counts


class TestExportAndReplay:
    def test_full_session_exports_and_round_trips(self, fresh_store, tmp_path):
        store = fresh_store()
        disagreed, discarded = run_scripted_session(store)
        with pytest.raises(AnnotationError, match="pending"):
            store.export(str(tmp_path / "early.jsonl"))
        for ex_id in disagreed:
            store.adjudicate("adj", ex_id, evidence_for(store, ex_id, case="malformed"))

        out = tmp_path / "merged.jsonl"
        merged = store.export(str(out))
        assert len(merged.examples) == 10
        assert len(merged.evidence) == 9  # one discarded

        reloaded = load_dataset(str(out))
        assert reloaded.examples == merged.examples
        assert reloaded.evidence == merged.evidence
        assert reloaded.example_by_id(discarded).positive is None

        out2 = tmp_path / "merged2.jsonl"
        store.export(str(out2))
        assert out.read_bytes() == out2.read_bytes()

    def test_log_replay_reproduces_state(self, fresh_store, tmp_path):
        store = fresh_store(name="replay.jsonl")
        disagreed, _ = run_scripted_session(store)
        store.adjudicate("adj", disagreed[0], evidence_for(store, disagreed[0], case="malformed"))

        replayed = AnnotationStore(
            annotation_fixture(), str(tmp_path / "replay.jsonl"), ("a1", "a2"), "adj"
        )
        assert replayed.progress() == store.progress()
        assert replayed.final_evidence() == store.final_evidence()
        assert replayed.agreement() == store.agreement()

    def test_replay_rejects_identity_mismatch(self, fresh_store, tmp_path):
        fresh_store(name="ids.jsonl")
        with pytest.raises(AnnotationError, match="different identities"):
            AnnotationStore(annotation_fixture(), str(tmp_path / "ids.jsonl"), ("a1", "zz"), "adj")

    def test_export_gold_maps_feed_evaluation(self, fresh_store, tmp_path):
        store = fresh_store()
        disagreed, _ = run_scripted_session(store)
        for ex_id in disagreed:
            store.adjudicate("adj", ex_id, evidence_for(store, ex_id, case="malformed"))
        out = tmp_path / "merged.jsonl"
        store.export(str(out))
        reloaded = load_dataset(str(out))
        maps = reloaded.gold_maps()
        assert len(maps) == 9
