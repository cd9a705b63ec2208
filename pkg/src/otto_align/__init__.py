"""Null-aware optimal-transport word alignment and MT error scoring."""

from .aligners import (
    AlignerChoice,
    AlignmentMatrix,
    OttawaResult,
    align_record,
    assignment_align,
    greedy_align,
    ot_align,
    ottawa_align,
    parse_pharaoh,
    pot_align,
    to_pharaoh,
)
from .detection import DetectionScores, sentence_scores, word_scores
from .embedding_io import (
    SentencePairRecord,
    TokenizedSide,
    pool_to_words,
    read_records,
    write_records,
)
from .evaluation import (
    GoldAlignment,
    LabeledScore,
    aer,
    corpus_aer,
    roc_auc_binary,
    roc_auc_multiclass,
)
from .geometry import (
    Direction,
    ExtendedCostMatrix,
    NullGeometry,
    cost_matrix,
    equidistant_vector,
    extend_cost,
    null_geometry,
)
from .ot_solvers import (
    Marginals,
    SolverConfig,
    TransportPlan,
    lp_oracle,
    sinkhorn_balanced,
    solve_assignment,
    solve_one_side_constrained,
    solve_partial,
)

__version__ = "0.1.0"

__all__ = [
    "AlignerChoice", "AlignmentMatrix", "OttawaResult", "align_record",
    "assignment_align", "greedy_align", "ot_align", "ottawa_align",
    "parse_pharaoh", "pot_align", "to_pharaoh",
    "DetectionScores", "sentence_scores", "word_scores",
    "SentencePairRecord", "TokenizedSide", "pool_to_words", "read_records",
    "write_records",
    "GoldAlignment", "LabeledScore", "aer", "corpus_aer", "roc_auc_binary",
    "roc_auc_multiclass",
    "Direction", "ExtendedCostMatrix", "NullGeometry", "cost_matrix",
    "equidistant_vector", "extend_cost", "null_geometry",
    "Marginals", "SolverConfig", "TransportPlan", "lp_oracle",
    "sinkhorn_balanced", "solve_assignment", "solve_one_side_constrained",
    "solve_partial",
]
