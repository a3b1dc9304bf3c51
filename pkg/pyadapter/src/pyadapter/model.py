"""Deterministic rule-based toy classifier.

This stands in for a fine-tuned model so the adapter runs without weights;
swap :func:`toy_model` for a callable wrapping a real model to serve one
(see ``serve()`` / ``stdio_loop()``, which accept any AdapterModel).

Rules, exactly:

- entailment: tokenize premise and hypothesis into lowercase alphanumeric
  word sets; overlap = |hypothesis ∩ premise| / |hypothesis| (0 for an empty
  hypothesis); p(entailed) = 0.1 + 0.8 * overlap; returns
  [1 - p(entailed), p(entailed)].
- choice: per choice, cohesion = number of token types shared by at least
  two of its units; implausibility score = 1 / (1 + cohesion); the returned
  distribution is the normalized score vector (less internally cohesive
  stories look more implausible to this toy).
"""

from __future__ import annotations

import re
from typing import Callable

AdapterModel = Callable[[dict], list[float]]

_TOKEN = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN.findall(text.lower()))


def _entailment_probs(premise: list[str], hypothesis: str) -> list[float]:
    hyp = _tokens(hypothesis)
    if not hyp:
        return [0.9, 0.1]
    prem = _tokens(" ".join(premise))
    overlap = len(hyp & prem) / len(hyp)
    p_entailed = 0.1 + 0.8 * overlap
    return [1.0 - p_entailed, p_entailed]


def _choice_probs(choices: list[list[str]]) -> list[float]:
    scores = []
    for units in choices:
        token_sets = [_tokens(u) for u in units]
        seen: set[str] = set()
        shared: set[str] = set()
        for ts in token_sets:
            shared |= ts & seen
            seen |= ts
        scores.append(1.0 / (1.0 + len(shared)))
    total = sum(scores)
    return [s / total for s in scores]


def toy_model(request: dict) -> list[float]:
    """Map one wire-format request object to a probability list."""
    task = request.get("task")
    if task == "entailment":
        premise = request.get("premise")
        hypothesis = request.get("hypothesis")
        if not isinstance(premise, list) or not all(isinstance(p, str) for p in premise):
            raise ValueError("entailment request needs a premise list of strings")
        if not isinstance(hypothesis, str):
            raise ValueError("entailment request needs a hypothesis string")
        return _entailment_probs(premise, hypothesis)
    if task == "choice":
        choices = request.get("choices")
        if (
            not isinstance(choices, list)
            or len(choices) < 2
            or not all(
                isinstance(c, list) and all(isinstance(u, str) for u in c) for c in choices
            )
        ):
            raise ValueError("choice request needs at least two lists of strings")
        return _choice_probs(choices)
    raise ValueError(f"unknown task tag {task!r}")
