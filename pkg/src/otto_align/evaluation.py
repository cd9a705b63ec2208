"""Evaluation metrics: alignment error rate and ROC AUC.

Gold alignments follow the Pharaoh convention with one extension: ``i-j``
marks a sure pair and ``i?j`` a possible-only pair. AUC uses the rank-sum
formulation with average ranks for ties, so it depends only on the score
ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateLabels, ParseError


@dataclass(frozen=True)
class GoldAlignment:
    """Sure and possible gold pairs; sure is always a subset of possible."""

    sure: frozenset[tuple[int, int]]
    possible: frozenset[tuple[int, int]]

    @staticmethod
    def from_pairs(sure: Iterable[tuple[int, int]],
                   possible_only: Iterable[tuple[int, int]] = ()) -> "GoldAlignment":
        sure_set = frozenset((int(i), int(j)) for i, j in sure)
        possible = sure_set | frozenset((int(i), int(j)) for i, j in possible_only)
        return GoldAlignment(sure=sure_set, possible=possible)


def parse_gold_line(line: str, *, lineno: int | None = None) -> GoldAlignment:
    sure: list[tuple[int, int]] = []
    possible_only: list[tuple[int, int]] = []
    for token in line.split():
        sep = "?" if "?" in token else "-"
        left, found, right = token.partition(sep)
        try:
            if not found:
                raise ValueError(token)
            pair = (int(left), int(right))
            if pair[0] < 0 or pair[1] < 0:
                raise ValueError(token)
        except ValueError:
            raise ParseError(f"bad gold token {token!r}", line=lineno) from None
        (possible_only if sep == "?" else sure).append(pair)
    return GoldAlignment.from_pairs(sure, possible_only)


def read_gold_file(path) -> list[GoldAlignment]:
    with open(path, "r", encoding="utf-8") as handle:
        return [parse_gold_line(line.rstrip("\n"), lineno=i)
                for i, line in enumerate(handle, start=1)]


@dataclass(frozen=True)
class AerCounts:
    """Corpus-aggregatable counts behind the AER formula."""

    matched_sure: int = 0
    matched_possible: int = 0
    predicted: int = 0
    sure: int = 0

    def __add__(self, other: "AerCounts") -> "AerCounts":
        return AerCounts(self.matched_sure + other.matched_sure,
                         self.matched_possible + other.matched_possible,
                         self.predicted + other.predicted,
                         self.sure + other.sure)

    @property
    def value(self) -> float:
        denom = self.predicted + self.sure
        if denom == 0:
            return 0.0
        return 1.0 - (self.matched_sure + self.matched_possible) / denom


def aer_counts(predicted: Iterable[tuple[int, int]], gold: GoldAlignment) -> AerCounts:
    pred = {(int(i), int(j)) for i, j in predicted}
    return AerCounts(matched_sure=len(pred & gold.sure),
                     matched_possible=len(pred & gold.possible),
                     predicted=len(pred), sure=len(gold.sure))


def aer(predicted: Iterable[tuple[int, int]], gold: GoldAlignment) -> float:
    """Alignment error rate of one sentence; empty predicted and sure give 0."""
    return aer_counts(predicted, gold).value


def corpus_aer(pairs: Iterable[tuple[Iterable[tuple[int, int]], GoldAlignment]]) -> AerCounts:
    """Aggregate counts over sentences; divide once at the end."""
    total = AerCounts()
    for predicted, gold in pairs:
        total = total + aer_counts(predicted, gold)
    return total


@dataclass(frozen=True)
class LabeledScore:
    score: float
    label: int  # ordinal severity: 0=no, 1=small, 2=partial, 3=full


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    # Ranks 1..n with ties sharing the mean rank of their block.
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc_binary(samples: Sequence[LabeledScore],
                   positive_classes: set[int]) -> float:
    """Rank-sum AUC of scores against a binary split of the ordinal labels."""
    if not samples:
        raise DegenerateLabels("no samples")
    scores = np.array([s.score for s in samples], dtype=np.float64)
    positive = np.array([s.label in positive_classes for s in samples], dtype=bool)
    n_pos = int(positive.sum())
    n_neg = int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(f"need both classes, got {n_pos} positive / {n_neg} negative")
    ranks = _average_ranks(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


ORDINAL_SPLITS: tuple[frozenset[int], ...] = (
    frozenset({1, 2, 3}),
    frozenset({2, 3}),
    frozenset({3}),
)


@dataclass(frozen=True)
class MulticlassAuc:
    value: float
    splits_used: int
    approximate: bool = True  # stand-in: unweighted mean over ordinal splits


def roc_auc_multiclass(samples: Sequence[LabeledScore]) -> MulticlassAuc:
    """Mean of the binary AUCs over the three ordinal splits.

    Splits where one side is empty are skipped; if every split is degenerate
    the data has a single label class and DegenerateLabels is raised. With
    exactly two label classes present this reduces to the binary AUC.
    """
    values = []
    for split in ORDINAL_SPLITS:
        try:
            values.append(roc_auc_binary(samples, set(split)))
        except DegenerateLabels:
            continue
    if not values:
        raise DegenerateLabels("all ordinal splits are single-class")
    return MulticlassAuc(value=float(np.mean(values)), splits_used=len(values))
