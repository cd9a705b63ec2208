"""Sentence- and word-level hallucination/omission scores.

A target word with no support in the final alignment, or whose column mass
leaked to the null source, points at hallucinated content; the mirrored
quantities on the source side point at omissions. Sentence scores combine the
unaligned-word ratio of one side with the mean null mass of the matching
direction's plan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aligners import AlignmentMatrix
from .errors import DimensionMismatch
from .ot_solvers import TransportPlan


@dataclass(frozen=True)
class DetectionScores:
    r_src: float            # fraction of source words with an all-zero gamma row
    r_tgt: float            # fraction of target words with an all-zero gamma column
    c_rev: float            # mean null-source mass over target columns
    c_fwd: float            # mean null-target mass over source rows
    hallucination: float
    omission: float
    word_hallucination: np.ndarray  # length n
    word_omission: np.ndarray       # length m

    def to_json_dict(self) -> dict:
        return {
            "hallucination": self.hallucination,
            "omission": self.omission,
            "r_src": self.r_src,
            "r_tgt": self.r_tgt,
            "c_fwd": self.c_fwd,
            "c_rev": self.c_rev,
            "word_hallucination": [float(x) for x in self.word_hallucination],
            "word_omission": [float(x) for x in self.word_omission],
        }


def _validate_shapes(alignment: AlignmentMatrix, plan_rev: TransportPlan,
                     plan_fwd: TransportPlan) -> tuple[int, int]:
    m, n = alignment.gamma.shape
    if plan_rev.values.shape != (m + 1, n):
        raise DimensionMismatch(
            f"reverse plan shape {plan_rev.values.shape} does not extend gamma {alignment.gamma.shape}")
    if plan_fwd.values.shape != (m, n + 1):
        raise DimensionMismatch(
            f"forward plan shape {plan_fwd.values.shape} does not extend gamma {alignment.gamma.shape}")
    return m, n


def sentence_scores(alignment: AlignmentMatrix, plan_rev: TransportPlan,
                    plan_fwd: TransportPlan, *,
                    paper_literal_eq78: bool = False) -> DetectionScores:
    """Combine unaligned ratios with null-transport confidences.

    By default the hallucination score pairs target-side quantities
    (``r_tgt + c_rev``) and the omission score source-side ones
    (``r_src + c_fwd``). ``paper_literal_eq78`` swaps the two ratio terms to
    reproduce the alternative published index pairing.
    """
    m, n = _validate_shapes(alignment, plan_rev, plan_fwd)
    gamma = alignment.gamma
    r_src = float(np.mean(gamma.sum(axis=1) == 0))
    r_tgt = float(np.mean(gamma.sum(axis=0) == 0))
    c_rev = float(plan_rev.values[m, :].sum() / n)
    c_fwd = float(plan_fwd.values[:, n].sum() / m)
    if paper_literal_eq78:
        hallucination = r_src + c_rev
        omission = r_tgt + c_fwd
    else:
        hallucination = r_tgt + c_rev
        omission = r_src + c_fwd
    word_hall, word_om = word_scores(alignment, plan_rev, plan_fwd)
    return DetectionScores(r_src=r_src, r_tgt=r_tgt, c_rev=c_rev, c_fwd=c_fwd,
                           hallucination=hallucination, omission=omission,
                           word_hallucination=word_hall, word_omission=word_om)


def word_scores(alignment: AlignmentMatrix, plan_rev: TransportPlan,
                plan_fwd: TransportPlan) -> tuple[np.ndarray, np.ndarray]:
    """Per-word scores: scaled null mass plus an unaligned indicator.

    A word's null mass is at most 1/n (or 1/m), so it is scaled by n (m) to
    make the mass term commensurate with the 0/1 indicator; both terms maximal
    gives a score of 2.
    """
    m, n = _validate_shapes(alignment, plan_rev, plan_fwd)
    gamma = alignment.gamma
    word_hall = n * plan_rev.values[m, :] + (gamma.sum(axis=0) == 0)
    word_om = m * plan_fwd.values[:, n] + (gamma.sum(axis=1) == 0)
    return word_hall.astype(np.float64), word_om.astype(np.float64)
