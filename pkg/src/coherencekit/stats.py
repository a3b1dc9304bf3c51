"""Cohen's kappa for annotator agreement and McNemar tests for paired outcomes.

The McNemar default is the exact binomial two-sided test: with b and c the
discordant counts, p = min(1, 2 * P(X <= min(b, c))) for X ~ Binomial(b+c, 1/2).
Desk-scale evaluation sets can have discordant counts small enough that the
asymptotic chi-squared variant misbehaves, so that one is opt-in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

from .metrics import CoherenceResult


@dataclass(frozen=True)
class PairedOutcomes:
    """2x2 contingency of (end_correct, coherent) flags per example.

    n10 counts correct-but-incoherent examples (the b cell); n01 would count
    coherent-but-incorrect ones, which cannot occur since coherence requires
    end-task correctness, so c = n01 = 0 for (accuracy, strict) pairings.
    """

    n00: int
    n01: int
    n10: int
    n11: int

    def __post_init__(self) -> None:
        if min(self.n00, self.n01, self.n10, self.n11) < 0:
            raise ValueError("cell counts must be non-negative")

    @property
    def b(self) -> int:
        return self.n10

    @property
    def c(self) -> int:
        return self.n01


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    observed: float
    expected: float
    labels: tuple[str, ...]
    confusion: tuple[tuple[int, ...], ...]
    n_items: int


def cohen_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> AgreementReport:
    """Standard Cohen's kappa over the joint confusion matrix.

    Symmetric in the two annotators and invariant under relabeling. Labels
    may be any hashable values; the report stores them as strings.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError(f"annotator label lists differ in length: {len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise ValueError("cannot compute agreement over zero items")

    alphabet = sorted({str(x) for x in labels_a} | {str(x) for x in labels_b})
    index = {label: i for i, label in enumerate(alphabet)}
    k = len(alphabet)
    confusion = [[0] * k for _ in range(k)]
    for a, b in zip(labels_a, labels_b):
        confusion[index[str(a)]][index[str(b)]] += 1

    n = len(labels_a)
    observed = sum(confusion[i][i] for i in range(k)) / n
    row = [sum(confusion[i][j] for j in range(k)) for i in range(k)]
    col = [sum(confusion[i][j] for i in range(k)) for j in range(k)]
    expected = sum(row[i] * col[i] for i in range(k)) / (n * n)
    if expected >= 1.0:
        kappa = 1.0
    else:
        kappa = (observed - expected) / (1.0 - expected)
    return AgreementReport(
        kappa=kappa,
        observed=observed,
        expected=expected,
        labels=tuple(alphabet),
        confusion=tuple(tuple(r) for r in confusion),
        n_items=n,
    )


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    p_value: float
    method: str
    no_discordant: bool = False
    statistic: float | None = None


def mcnemar_exact(paired: PairedOutcomes) -> McNemarResult:
    """Exact binomial two-sided McNemar test on the discordant cells.

    Symmetric in (b, c). With no discordant pairs at all the test carries no
    information; p is defined as 1.0 and flagged.
    """
    b, c = paired.b, paired.c
    n = b + c
    if n == 0:
        return McNemarResult(b=b, c=c, p_value=1.0, method="exact", no_discordant=True)
    tail = sum(math.comb(n, k) for k in range(min(b, c) + 1))
    p = 2 * Fraction(tail, 2**n)
    return McNemarResult(b=b, c=c, p_value=min(1.0, float(p)), method="exact")


def mcnemar_chi2(paired: PairedOutcomes) -> McNemarResult:
    """Chi-squared McNemar variant with continuity correction, for comparison."""
    b, c = paired.b, paired.c
    n = b + c
    if n == 0:
        return McNemarResult(b=b, c=c, p_value=1.0, method="chi2", no_discordant=True)
    statistic = (abs(b - c) - 1) ** 2 / n
    # survival function of chi-squared with 1 dof
    p = math.erfc(math.sqrt(statistic / 2.0))
    return McNemarResult(b=b, c=c, p_value=p, method="chi2", statistic=statistic)


def pair_outcomes(result: CoherenceResult) -> PairedOutcomes:
    """Contingency of (end_correct, coherent) over a result's verdicts."""
    n00 = n01 = n10 = n11 = 0
    for v in result.verdicts:
        if v.end_correct and v.coherent:
            n11 += 1
        elif v.end_correct:
            n10 += 1
        elif v.coherent:
            n01 += 1
        else:
            n00 += 1
    return PairedOutcomes(n00=n00, n01=n01, n10=n10, n11=n11)
