"""Cost geometry: cosine-distance matrices and the equidistant null anchor.

The null word used by the null-aware aligner is represented by a vector that
sits at one common cosine distance from every vector of the opposite side.
Such a vector exists inside the span of those vectors: writing the common
direction as a combination ``sum_k a_k e_k``, the equal-distance conditions
become a homogeneous linear system whose kernel yields the coefficients, and
the minimal realizable common distance ``d_min`` falls out of the kernel
vector. The null cost actually used is ``d = max(d_min, c)`` where ``c`` is
the median (optionally mean) of all pairwise source/target distances.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Relative singular-value threshold below which a direction counts as kernel.
KERNEL_RTOL = 1e-10
# A combined vector shorter than this cannot anchor a cosine distance.
NULL_NORM_EPS = 1e-10


class Direction(Enum):
    """Which side receives the appended null word."""

    FORWARD = "forward"   # null target column; each source row may opt out
    REVERSE = "reverse"   # null source row; each target column may opt out


@dataclass(frozen=True)
class NullGeometry:
    """Null-anchor parameters for one alignment direction."""

    null_vector: np.ndarray | None
    d_min: float
    c_median: float
    d: float
    fallback_used: bool


@dataclass(frozen=True)
class ExtendedCostMatrix:
    """A cost matrix with one appended constant-cost null row or column."""

    values: np.ndarray
    direction: Direction
    d: float

    def interior(self) -> np.ndarray:
        """The original cost block, without the null row/column."""
        if self.direction is Direction.REVERSE:
            return self.values[:-1, :]
        return self.values[:, :-1]


def cost_matrix(src: np.ndarray, tgt: np.ndarray) -> np.ndarray:
    """Pairwise cosine distances, shape (m, n), entries in [0, 2]."""
    src = np.asarray(src, dtype=np.float64)
    tgt = np.asarray(tgt, dtype=np.float64)
    if src.shape[1] != tgt.shape[1]:
        raise ValueError(f"dimension mismatch: {src.shape[1]} vs {tgt.shape[1]}")
    su = src / np.linalg.norm(src, axis=1, keepdims=True)
    tu = tgt / np.linalg.norm(tgt, axis=1, keepdims=True)
    # Rounding can push |cos| a hair past 1; clip back into the valid range.
    return np.clip(1.0 - su @ tu.T, 0.0, 2.0)


def equidistant_vector(vectors: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Find a vector at one common cosine distance from every input row.

    Returns ``(e_null, d_min)`` where ``d_min`` is the common distance, or
    ``None`` when the construction degenerates (kernel vector combines to a
    near-zero vector, possible when rows are linearly dependent).

    The kernel of the difference system is extracted by SVD; when it has more
    than one dimension the right singular vector of the smallest singular
    value is taken, and its sign is chosen to minimize the distance (the
    opposite sign would realize ``2 - d_min``).
    """
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] < 2:
        raise ValueError("need at least two vectors")
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms <= 0):
        raise ValueError("all vectors must have positive norm")
    unit = V / norms[:, None]

    # Row j-1 of E holds e_k . (u_1 - u_j) over k; a kernel vector a of E
    # makes sum_k a_k e_k equidistant (in cosine) to every input row.
    diffs = unit[0][None, :] - unit[1:]          # (N-1, D)
    E = diffs @ V.T                              # (N-1, N)
    _, svals, vh = np.linalg.svd(E)
    largest = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > KERNEL_RTOL * largest)) if largest > 0 else 0
    if V.shape[0] - rank == 0:
        return None
    a = vh[-1]
    e_null = a @ V
    nrm = np.linalg.norm(e_null)
    if nrm < NULL_NORM_EPS:
        return None
    if float(e_null @ V[0]) < 0.0:
        e_null = -e_null
    d_min = 1.0 - float(e_null @ V[0]) / (np.linalg.norm(e_null) * norms[0])
    return e_null, float(d_min)


def null_geometry(opposite_vectors: np.ndarray, costs: np.ndarray,
                  *, distance_mode: str = "median") -> NullGeometry:
    """Null-anchor distance for one direction.

    ``opposite_vectors`` are the vectors the null word must be equidistant to
    (the target side for the reverse direction, the source side for forward).
    ``costs`` is the full pairwise cost matrix; its median (or mean, for
    ablation) caps the distance from below so the null never undercuts a
    typical real pair.
    """
    if distance_mode == "median":
        c_ref = float(np.median(costs))
    elif distance_mode == "mean":
        c_ref = float(np.mean(costs))
    else:
        raise ValueError(f"unknown distance mode {distance_mode!r}")

    opposite = np.asarray(opposite_vectors, dtype=np.float64)
    if opposite.shape[0] < 2:
        # A single vector is trivially equidistant to itself at distance 0.
        return NullGeometry(null_vector=opposite[0].copy(), d_min=0.0,
                            c_median=c_ref, d=max(0.0, c_ref), fallback_used=False)

    result = equidistant_vector(opposite)
    if result is None:
        return NullGeometry(null_vector=None, d_min=c_ref, c_median=c_ref,
                            d=c_ref, fallback_used=True)
    e_null, d_min = result
    return NullGeometry(null_vector=e_null, d_min=d_min, c_median=c_ref,
                        d=max(d_min, c_ref), fallback_used=False)


def extend_cost(base: np.ndarray, d: float, direction: Direction) -> ExtendedCostMatrix:
    """Append a constant null row (reverse) or column (forward) of cost ``d``."""
    if not np.isfinite(d) or d < 0:
        raise ValueError("null distance must be finite and non-negative")
    base = np.asarray(base, dtype=np.float64)
    if direction is Direction.REVERSE:
        values = np.vstack([base, np.full((1, base.shape[1]), d)])
    elif direction is Direction.FORWARD:
        values = np.hstack([base, np.full((base.shape[0], 1), d)])
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return ExtendedCostMatrix(values=values, direction=direction, d=float(d))
