from __future__ import annotations

import pytest

from pyadapter.model import toy_model


class TestEntailment:
    def test_full_overlap_favors_entailed(self):
        probs = toy_model(
            {"task": "entailment", "premise": ["the cat sat"], "hypothesis": "the cat"}
        )
        assert probs == pytest.approx([0.1, 0.9])

    def test_no_overlap_favors_not_entailed(self):
        probs = toy_model({"task": "entailment", "premise": ["xyz"], "hypothesis": "abc def"})
        assert probs == pytest.approx([0.9, 0.1])

    def test_deterministic(self):
        request = {"task": "entailment", "premise": ["A: hi there"], "hypothesis": "a greeting"}
        assert toy_model(request) == toy_model(request)

    def test_normalized(self):
        probs = toy_model({"task": "entailment", "premise": ["a b"], "hypothesis": "a c d"})
        assert abs(sum(probs) - 1.0) < 1e-9
        assert all(p >= 0 for p in probs)


class TestChoice:
    def test_cohesive_story_looks_plausible(self):
        probs = toy_model(
            {
                "task": "choice",
                "choices": [
                    ["the dog ran home", "the dog slept at home"],  # shares tokens
                    ["quantum turnips", "opera about cement"],      # shares none
                ],
            }
        )
        assert len(probs) == 2
        assert probs[1] > probs[0]
        assert abs(sum(probs) - 1.0) < 1e-9

    def test_handles_empty_padding_units(self):
        probs = toy_model({"task": "choice", "choices": [["one sentence", ""], ["a", "b"]]})
        assert len(probs) == 2
        assert abs(sum(probs) - 1.0) < 1e-9

    def test_three_choices(self):
        probs = toy_model({"task": "choice", "choices": [["a"], ["b"], ["c"]]})
        assert len(probs) == 3


class TestValidation:
    @pytest.mark.parametrize(
        "request_obj",
        [
            {"task": "tagging"},
            {"task": "entailment", "premise": "not a list", "hypothesis": "h"},
            {"task": "entailment", "premise": ["ok"]},
            {"task": "choice", "choices": [["only one"]]},
            {"task": "choice", "choices": "nope"},
        ],
    )
    def test_rejects_malformed(self, request_obj):
        with pytest.raises(ValueError):
            toy_model(request_obj)
