"""Five word-alignment strategies over a shared cost geometry.

``greedy`` takes row/column argmins of the cost matrix and intersects them;
``assignment`` solves the min-cost assignment; ``ot`` and ``pot`` binarize
balanced and partial transport plans; ``ottawa`` extends the cost matrix with
a null word per direction and solves the one-side-constrained problem, so
words may opt out of alignment entirely. All strategies produce the same
result type so downstream scoring and serialization are uniform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding_io import SentencePairRecord
from .geometry import Direction, NullGeometry, cost_matrix, extend_cost, null_geometry
from .ot_solvers import (
    Marginals,
    SolverConfig,
    TransportPlan,
    sinkhorn_balanced,
    solve_assignment,
    solve_one_side_constrained,
    solve_partial,
)

STRATEGIES = ("greedy", "assignment", "ot", "pot", "ottawa")


@dataclass(frozen=True)
class AlignerChoice:
    """Strategy selection plus the knobs the strategies consume."""

    strategy: str = "ottawa"
    solver: SolverConfig = field(default_factory=SolverConfig)
    pot_mass: float = 0.5
    pot_tau: float = 0.05         # fraction of max(1/m, 1/n) unless absolute
    pot_tau_absolute: bool = False
    null_distance_mode: str = "median"

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if not (0.0 < self.pot_tau < 1.0) and not self.pot_tau_absolute:
            raise ValueError("pot_tau fraction must be in (0, 1)")


@dataclass(frozen=True)
class AlignmentMatrix:
    """Binary alignment with its direction-wise intermediates.

    ``gamma`` is the elementwise product of ``gamma_fwd`` and ``gamma_rev``
    (strategies that binarize a single plan copy it into both). A true entry
    in ``null_assigned_src``/``null_assigned_tgt`` means that word chose the
    null counterpart, forcing its row/column of the intermediate to zero.
    """

    gamma: np.ndarray
    gamma_fwd: np.ndarray
    gamma_rev: np.ndarray
    null_assigned_src: np.ndarray
    null_assigned_tgt: np.ndarray
    warnings: tuple[str, ...] = ()

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self.gamma)]


def _empty_null_flags(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros(m, dtype=bool), np.zeros(n, dtype=bool)


def _plan_warning(plan: TransportPlan, label: str) -> list[str]:
    if plan.converged:
        return []
    return [f"{label} solve stopped at residual {plan.marginal_residual:.3e} "
            f"after {plan.iterations} iterations"]


def greedy_align(costs: np.ndarray) -> AlignmentMatrix:
    """Intersection of per-row and per-column nearest neighbours."""
    C = np.asarray(costs, dtype=np.float64)
    m, n = C.shape
    fwd = np.zeros((m, n), dtype=np.int8)
    fwd[np.arange(m), np.argmin(C, axis=1)] = 1
    rev = np.zeros((m, n), dtype=np.int8)
    rev[np.argmin(C, axis=0), np.arange(n)] = 1
    flags = _empty_null_flags(m, n)
    return AlignmentMatrix(gamma=fwd * rev, gamma_fwd=fwd, gamma_rev=rev,
                           null_assigned_src=flags[0], null_assigned_tgt=flags[1])


def assignment_align(costs: np.ndarray) -> AlignmentMatrix:
    gamma = solve_assignment(costs)
    flags = _empty_null_flags(*gamma.shape)
    return AlignmentMatrix(gamma=gamma, gamma_fwd=gamma.copy(), gamma_rev=gamma.copy(),
                           null_assigned_src=flags[0], null_assigned_tgt=flags[1])


def _binarize_plan(plan_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # The plan encodes affinity, so winners are argmax (ties to the smallest
    # index, matching np.argmax).
    m, n = plan_values.shape
    fwd = np.zeros((m, n), dtype=np.int8)
    fwd[np.arange(m), np.argmax(plan_values, axis=1)] = 1
    rev = np.zeros((m, n), dtype=np.int8)
    rev[np.argmax(plan_values, axis=0), np.arange(n)] = 1
    return fwd, rev


def ot_align(costs: np.ndarray, config: SolverConfig | None = None) -> AlignmentMatrix:
    """Balanced entropic transport, binarized by direction-wise argmax."""
    C = np.asarray(costs, dtype=np.float64)
    m, n = C.shape
    plan = sinkhorn_balanced(C, Marginals.uniform(m, n), config)
    fwd, rev = _binarize_plan(plan.values)
    flags = _empty_null_flags(m, n)
    return AlignmentMatrix(gamma=fwd * rev, gamma_fwd=fwd, gamma_rev=rev,
                           null_assigned_src=flags[0], null_assigned_tgt=flags[1],
                           warnings=tuple(_plan_warning(plan, "balanced")))


def pot_align(costs: np.ndarray, config: SolverConfig | None = None, *,
              mass: float = 0.5, tau: float = 0.05,
              tau_absolute: bool = False) -> AlignmentMatrix:
    """Partial transport thresholded into a binary alignment."""
    C = np.asarray(costs, dtype=np.float64)
    m, n = C.shape
    plan = solve_partial(C, Marginals.uniform(m, n), mass, config)
    threshold = tau if tau_absolute else tau * max(1.0 / m, 1.0 / n)
    gamma = (plan.values >= threshold).astype(np.int8)
    flags = _empty_null_flags(m, n)
    return AlignmentMatrix(gamma=gamma, gamma_fwd=gamma.copy(), gamma_rev=gamma.copy(),
                           null_assigned_src=flags[0], null_assigned_tgt=flags[1],
                           warnings=tuple(_plan_warning(plan, "partial")))


@dataclass(frozen=True)
class OttawaResult:
    """Alignment plus the per-direction plans and null geometries behind it."""

    alignment: AlignmentMatrix
    plan_rev: TransportPlan       # (m+1) x n, null source as last row
    plan_fwd: TransportPlan       # m x (n+1), null target as last column
    geometry_rev: NullGeometry
    geometry_fwd: NullGeometry


def ottawa_align(record: SentencePairRecord,
                 choice: AlignerChoice | None = None) -> OttawaResult:
    """Null-aware alignment via one-side-constrained transport.

    Each direction appends a null word at the equidistant anchor distance and
    lets the bounded side leave words unaligned. A word is flagged
    null-assigned when the null row/column strictly beats every real
    candidate; at exact equality the real word wins, so error flags stay
    conservative.
    """
    choice = choice or AlignerChoice(strategy="ottawa")
    C = cost_matrix(record.src_emb, record.tgt_emb)
    m, n = C.shape

    geom_rev = null_geometry(record.tgt_emb, C, distance_mode=choice.null_distance_mode)
    plan_rev = solve_one_side_constrained(
        extend_cost(C, geom_rev.d, Direction.REVERSE), choice.solver)
    rev = np.zeros((m, n), dtype=np.int8)
    null_tgt = np.zeros(n, dtype=bool)
    for j in range(n):
        column = plan_rev.values[:, j]
        real_best = int(np.argmax(column[:m]))
        if column[m] > column[real_best]:
            null_tgt[j] = True
        else:
            rev[real_best, j] = 1

    geom_fwd = null_geometry(record.src_emb, C, distance_mode=choice.null_distance_mode)
    plan_fwd = solve_one_side_constrained(
        extend_cost(C, geom_fwd.d, Direction.FORWARD), choice.solver)
    fwd = np.zeros((m, n), dtype=np.int8)
    null_src = np.zeros(m, dtype=bool)
    for i in range(m):
        row = plan_fwd.values[i, :]
        real_best = int(np.argmax(row[:n]))
        if row[n] > row[real_best]:
            null_src[i] = True
        else:
            fwd[i, real_best] = 1

    warnings = _plan_warning(plan_rev, "reverse") + _plan_warning(plan_fwd, "forward")
    alignment = AlignmentMatrix(gamma=fwd * rev, gamma_fwd=fwd, gamma_rev=rev,
                                null_assigned_src=null_src, null_assigned_tgt=null_tgt,
                                warnings=tuple(warnings))
    return OttawaResult(alignment=alignment, plan_rev=plan_rev, plan_fwd=plan_fwd,
                        geometry_rev=geom_rev, geometry_fwd=geom_fwd)


def align_record(record: SentencePairRecord, choice: AlignerChoice) -> AlignmentMatrix:
    """Run the chosen strategy on one record."""
    if choice.strategy == "ottawa":
        return ottawa_align(record, choice).alignment
    C = cost_matrix(record.src_emb, record.tgt_emb)
    if choice.strategy == "greedy":
        return greedy_align(C)
    if choice.strategy == "assignment":
        return assignment_align(C)
    if choice.strategy == "ot":
        return ot_align(C, choice.solver)
    if choice.strategy == "pot":
        return pot_align(C, choice.solver, mass=choice.pot_mass,
                         tau=choice.pot_tau, tau_absolute=choice.pot_tau_absolute)
    raise ValueError(f"unknown strategy {choice.strategy!r}")


NULL_TOKEN = "∅"


def to_pharaoh(alignment: AlignmentMatrix, *, emit_null: bool = False) -> str:
    """Render an alignment as space-separated 0-based ``i-j`` pairs.

    With ``emit_null``, words that chose the null counterpart are appended as
    ``i-[null]`` / ``[null]-j`` extension tokens.
    """
    tokens = [f"{i}-{j}" for i, j in alignment.pairs]
    if emit_null:
        tokens += [f"{i}-{NULL_TOKEN}" for i in np.flatnonzero(alignment.null_assigned_src)]
        tokens += [f"{NULL_TOKEN}-{j}" for j in np.flatnonzero(alignment.null_assigned_tgt)]
    return " ".join(tokens)


def parse_pharaoh(line: str) -> set[tuple[int, int]]:
    """Parse ``i-j`` pairs from one Pharaoh line, ignoring null extensions."""
    pairs: set[tuple[int, int]] = set()
    for token in line.split():
        if NULL_TOKEN in token:
            continue
        left, _, right = token.partition("-")
        pairs.add((int(left), int(right)))
    return pairs
