"""Transport and assignment solvers.

Four production solvers plus one exact oracle:

* ``sinkhorn_balanced``: entropic OT with both marginals enforced, iterated
  in the log domain by default so that small regularization strengths stay
  numerically stable.
* ``solve_assignment``: min-cost rectangular assignment with deterministic
  lexicographic tie-breaking.
* ``solve_partial``: partial OT (inequality marginals, fixed total mass) via
  the dummy row/column reduction to a balanced problem.
* ``solve_one_side_constrained``: one side's marginals enforced exactly, the
  other bounded above with a null word allowed a marginal up to 1; solved by
  alternating an exact column scaling with a capacity-capped row scaling,
  which is block coordinate ascent on the entropic dual.
* ``lp_oracle``: exact linear-programming optimum on small instances, used
  by the test suite as an independent reference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .errors import InfeasibleMass, NumericalUnderflow, TooLarge
from .geometry import Direction, ExtendedCostMatrix

# Marginal sums may disagree by at most this much for a balanced problem.
BALANCE_ATOL = 1e-9
# Float tolerance when deciding that two assignment costs tie.
ASSIGNMENT_TIE_TOL = 1e-9
# Cap on the number of candidate supports the balanced vertex enumeration
# will scan before deferring to the LP solver.
ENUMERATION_CAP = 200_000


@dataclass(frozen=True)
class Marginals:
    """Row and column mass vectors of a transport problem."""

    mu: np.ndarray
    nu: np.ndarray

    @staticmethod
    def uniform(m: int, n: int) -> "Marginals":
        return Marginals(np.full(m, 1.0 / m), np.full(n, 1.0 / n))

    def validated(self, *, balanced: bool) -> "Marginals":
        mu = np.asarray(self.mu, dtype=np.float64)
        nu = np.asarray(self.nu, dtype=np.float64)
        if np.any(mu < 0) or np.any(nu < 0):
            raise ValueError("marginals must be non-negative")
        if balanced and abs(mu.sum() - nu.sum()) > BALANCE_ATOL:
            raise ValueError(
                f"marginals are unbalanced: {mu.sum()!r} vs {nu.sum()!r}"
            )
        return Marginals(mu, nu)


class PlanKind(Enum):
    BALANCED = "balanced"
    PARTIAL = "partial"
    ONE_SIDE_CONSTRAINED = "one_side_constrained"


@dataclass(frozen=True)
class SolverConfig:
    """Sinkhorn parameters; defaults follow the toolkit-wide conventions."""

    epsilon: float = 0.05
    max_iterations: int = 2000
    tolerance: float = 1e-8       # L1 residual of the enforced marginals
    stabilized: bool = True       # log-domain iterations

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class TransportPlan:
    """A solver result; ``converged`` is reportable state, not an error."""

    values: np.ndarray
    kind: PlanKind
    epsilon: float
    iterations: int
    converged: bool
    marginal_residual: float
    residual_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def mass(self) -> float:
        return float(self.values.sum())


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - amax), axis=axis))
    return out + np.squeeze(amax, axis=axis)


def sinkhorn_balanced(cost: np.ndarray, marginals: Marginals,
                      config: SolverConfig | None = None) -> TransportPlan:
    """Entropic OT plan with row sums ``mu`` and column sums ``nu``.

    Iterations alternate row and column scalings and finish on the column
    scaling, so column sums are exact up to rounding and the reported residual
    is carried by the rows. If the residual has not reached ``tolerance``
    within ``max_iterations`` the plan is returned with ``converged=False``.
    """
    cfg = config or SolverConfig()
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2 or not np.all(np.isfinite(C)):
        raise ValueError("cost must be a finite 2-d matrix")
    marg = marginals.validated(balanced=True)
    mu, nu = marg.mu, marg.nu
    if C.shape != (mu.size, nu.size):
        raise ValueError("cost shape does not match marginals")

    if cfg.stabilized:
        plan, iterations, residual, history, converged = _sinkhorn_log(C, mu, nu, cfg)
    else:
        plan, iterations, residual, history, converged = _sinkhorn_scaling(C, mu, nu, cfg)

    return TransportPlan(values=plan, kind=PlanKind.BALANCED, epsilon=cfg.epsilon,
                         iterations=iterations, converged=converged,
                         marginal_residual=residual, residual_history=tuple(history))


def _residual(plan: np.ndarray, mu: np.ndarray, nu: np.ndarray) -> float:
    return float(np.abs(plan.sum(axis=1) - mu).sum() + np.abs(plan.sum(axis=0) - nu).sum())


def _sinkhorn_log(C, mu, nu, cfg):
    M = -C / cfg.epsilon
    with np.errstate(divide="ignore"):
        log_mu = np.log(mu)
        log_nu = np.log(nu)
    u = np.zeros_like(mu)
    v = np.zeros_like(nu)
    history: list[float] = []
    converged = False
    iterations = 0
    plan = np.exp(M)
    for iterations in range(1, cfg.max_iterations + 1):
        u = log_mu - _logsumexp(M + v[None, :], axis=1)
        v = log_nu - _logsumexp(M + u[:, None], axis=0)
        plan = np.exp(M + u[:, None] + v[None, :])
        residual = _residual(plan, mu, nu)
        history.append(residual)
        if residual <= cfg.tolerance:
            converged = True
            break
    return plan, iterations, history[-1], history, converged


def _sinkhorn_scaling(C, mu, nu, cfg):
    # Naive multiplicative form; kept for comparison and ablation. With small
    # epsilon the kernel underflows, which is raised rather than masked.
    K = np.exp(-C / cfg.epsilon)
    u = np.ones_like(mu)
    v = np.ones_like(nu)
    history: list[float] = []
    converged = False
    iterations = 0
    plan = K.copy()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for iterations in range(1, cfg.max_iterations + 1):
            u = mu / (K @ v)
            v = nu / (K.T @ u)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise NumericalUnderflow(
                    "scaling-form Sinkhorn underflowed; use the stabilized solver"
                )
            plan = u[:, None] * K * v[None, :]
            residual = _residual(plan, mu, nu)
            history.append(residual)
            if residual <= cfg.tolerance:
                converged = True
                break
    return plan, iterations, history[-1], history, converged


def solve_assignment(cost: np.ndarray) -> np.ndarray:
    """Binary assignment matrix minimizing total cost.

    Row and column sums are at most 1 and exactly ``min(m, n)`` pairs are
    selected. Among cost-optimal solutions the lexicographically smallest
    sorted pair sequence is returned, so results are reproducible across
    platforms even under ties.
    """
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("cost must be a non-empty 2-d matrix")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost must be finite")
    m, n = C.shape
    rows, cols = linear_sum_assignment(C)
    best = float(C[rows, cols].sum())
    tol = ASSIGNMENT_TIE_TOL * max(1.0, abs(best))

    gamma = np.zeros((m, n), dtype=np.int8)
    avail_rows = list(range(m))
    avail_cols = list(range(n))
    remaining = min(m, n)
    acc = 0.0
    while remaining > 0:
        chosen = None
        for ri, i in enumerate(avail_rows):
            rows_after = avail_rows[ri + 1:]
            if len(rows_after) < remaining - 1:
                break  # later rows leave too few below them
            for j in avail_cols:
                rest = _completion_cost(C, rows_after,
                                        [c for c in avail_cols if c != j],
                                        remaining - 1)
                if acc + C[i, j] + rest <= best + tol:
                    chosen = (ri, i, j)
                    break
            if chosen is not None:
                break
        assert chosen is not None, "optimal completion must exist"
        ri, i, j = chosen
        gamma[i, j] = 1
        acc += C[i, j]
        del avail_rows[: ri + 1]  # rows skipped over are permanently unused
        avail_cols.remove(j)
        remaining -= 1
    return gamma


def _completion_cost(C: np.ndarray, rows: list[int], cols: list[int], k: int) -> float:
    if k == 0:
        return 0.0
    sub = C[np.ix_(rows, cols)]
    rr, cc = linear_sum_assignment(sub)
    return float(sub[rr, cc].sum())


def solve_partial(cost: np.ndarray, marginals: Marginals, mass: float,
                  config: SolverConfig | None = None) -> TransportPlan:
    """Partial OT: row sums <= mu, column sums <= nu, total mass fixed.

    Reduced to a balanced problem by adding one dummy row and column of cost 0
    with a high-cost corner; the dummies absorb exactly the unmoved budget, so
    stripping them leaves a plan of total mass ``mass``.
    """
    cfg = config or SolverConfig()
    C = np.asarray(cost, dtype=np.float64)
    marg = marginals.validated(balanced=False)
    mu, nu = marg.mu, marg.nu
    budget = min(float(mu.sum()), float(nu.sum()))
    if not (0.0 < mass < budget):
        raise InfeasibleMass(f"mass {mass} outside (0, {budget})")

    # Corner cost high enough that dummy-to-dummy transport (which would
    # silently raise the real transported mass above `mass`) is never optimal.
    corner = 2.0 * float(C.max()) + 1.0
    extended = np.zeros((C.shape[0] + 1, C.shape[1] + 1))
    extended[:-1, :-1] = C
    extended[-1, -1] = corner
    ext_marg = Marginals(np.append(mu, nu.sum() - mass), np.append(nu, mu.sum() - mass))
    inner = sinkhorn_balanced(extended, ext_marg, cfg)
    return TransportPlan(values=inner.values[:-1, :-1], kind=PlanKind.PARTIAL,
                         epsilon=cfg.epsilon, iterations=inner.iterations,
                         converged=inner.converged,
                         marginal_residual=inner.marginal_residual,
                         residual_history=inner.residual_history)


def solve_one_side_constrained(cost_ext: ExtendedCostMatrix,
                               config: SolverConfig | None = None) -> TransportPlan:
    """Transport against a null-extended cost with one side bound, one exact.

    Reverse direction: the input is (m+1) x n with the null source as the last
    row. Column sums are enforced to the uniform 1/n exactly; row sums are
    bounded by (1/m, ..., 1/m, 1). Iterations alternate an exact column
    scaling with a row scaling capped at 1 (a capped scaling leaves a bounded
    row below its budget), which maximizes the entropic dual one block at a
    time. Ending on the row step makes the row bounds hold exactly; the
    reported residual is the L1 column error. Forward is the transposed
    construction.
    """
    cfg = config or SolverConfig()
    values = np.asarray(cost_ext.values, dtype=np.float64)
    if cost_ext.direction is Direction.REVERSE:
        plan = _one_side_reverse(values, cfg)
    else:
        plan = _one_side_reverse(values.T, cfg)
        plan = TransportPlan(values=plan.values.T, kind=plan.kind,
                             epsilon=plan.epsilon, iterations=plan.iterations,
                             converged=plan.converged,
                             marginal_residual=plan.marginal_residual,
                             residual_history=plan.residual_history)
    return plan


def _one_side_reverse(values: np.ndarray, cfg: SolverConfig) -> TransportPlan:
    m = values.shape[0] - 1
    n = values.shape[1]
    if m < 1 or n < 1:
        raise ValueError("extended cost must contain at least one real row and column")
    if not np.all(np.isfinite(values)):
        raise ValueError("cost must be finite")
    mu_cap = np.append(np.full(m, 1.0 / m), 1.0)
    nu = np.full(n, 1.0 / n)
    if not cfg.stabilized:
        return _one_side_scaling(values, mu_cap, nu, cfg)

    M = -values / cfg.epsilon
    log_cap = np.log(mu_cap)
    log_nu = np.log(nu)
    f = np.zeros(m + 1)
    g = np.zeros(n)
    history: list[float] = []
    converged = False
    iterations = 0
    plan = np.exp(M)
    for iterations in range(1, cfg.max_iterations + 1):
        g = log_nu - _logsumexp(M + f[:, None], axis=0)
        f = np.minimum(0.0, log_cap - _logsumexp(M + g[None, :], axis=1))
        plan = np.exp(M + f[:, None] + g[None, :])
        residual = float(np.abs(plan.sum(axis=0) - nu).sum())
        history.append(residual)
        if residual <= cfg.tolerance:
            converged = True
            break
    return TransportPlan(values=plan, kind=PlanKind.ONE_SIDE_CONSTRAINED,
                         epsilon=cfg.epsilon, iterations=iterations,
                         converged=converged, marginal_residual=history[-1],
                         residual_history=tuple(history))


def _one_side_scaling(values, mu_cap, nu, cfg: SolverConfig) -> TransportPlan:
    K = np.exp(-values / cfg.epsilon)
    a = np.ones(values.shape[0])
    b = np.ones(values.shape[1])
    history: list[float] = []
    converged = False
    iterations = 0
    plan = K.copy()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for iterations in range(1, cfg.max_iterations + 1):
            b = nu / (K.T @ a)
            a = np.minimum(1.0, mu_cap / (K @ b))
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
                raise NumericalUnderflow(
                    "scaling-form iteration underflowed; use the stabilized solver"
                )
            plan = a[:, None] * K * b[None, :]
            residual = float(np.abs(plan.sum(axis=0) - nu).sum())
            history.append(residual)
            if residual <= cfg.tolerance:
                converged = True
                break
    return TransportPlan(values=plan, kind=PlanKind.ONE_SIDE_CONSTRAINED,
                         epsilon=cfg.epsilon, iterations=iterations,
                         converged=converged, marginal_residual=history[-1],
                         residual_history=tuple(history))


# ---------------------------------------------------------------------------
# Exact oracle (test reference; capped to tiny instances)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssignmentProblem:
    pass


@dataclass(frozen=True)
class BalancedProblem:
    marginals: Marginals | None = None


@dataclass(frozen=True)
class PartialProblem:
    mass: float
    marginals: Marginals | None = None


@dataclass(frozen=True)
class OneSideProblem:
    direction: Direction = Direction.REVERSE


@dataclass(frozen=True)
class OracleSolution:
    values: np.ndarray
    objective: float


def lp_oracle(cost: np.ndarray, problem) -> OracleSolution:
    """Exact optimum of a small alignment/transport LP.

    Assignments are enumerated outright. Balanced problems are solved by
    scanning every candidate basic support of the transportation polytope
    (falling back to an LP vertex solver when the scan would be too wide).
    Partial and one-side problems are solved directly in inequality form by
    the LP solver. Instances beyond 6 real rows/columns raise TooLarge.
    """
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2:
        raise ValueError("cost must be 2-d")
    m, n = C.shape
    if isinstance(problem, OneSideProblem):
        real_m, real_n = (m - 1, n) if problem.direction is Direction.REVERSE else (m, n - 1)
    else:
        real_m, real_n = m, n
    if real_m > 6 or real_n > 6 or real_m < 1 or real_n < 1:
        raise TooLarge(f"oracle cap exceeded: {real_m} x {real_n}")

    if isinstance(problem, AssignmentProblem):
        return _oracle_assignment(C)
    if isinstance(problem, BalancedProblem):
        marg = (problem.marginals or Marginals.uniform(m, n)).validated(balanced=True)
        return _oracle_balanced(C, marg.mu, marg.nu)
    if isinstance(problem, PartialProblem):
        marg = (problem.marginals or Marginals.uniform(m, n)).validated(balanced=False)
        return _oracle_partial(C, marg.mu, marg.nu, problem.mass)
    if isinstance(problem, OneSideProblem):
        if problem.direction is Direction.REVERSE:
            return _oracle_one_side(C)
        sol = _oracle_one_side(C.T)
        return OracleSolution(values=sol.values.T, objective=sol.objective)
    raise TypeError(f"unknown problem type: {problem!r}")


def _oracle_assignment(C: np.ndarray) -> OracleSolution:
    m, n = C.shape
    best_cost = math.inf
    best_pairs: tuple[tuple[int, int], ...] | None = None
    if m <= n:
        candidates = (
            tuple(enumerate(perm)) for perm in itertools.permutations(range(n), m)
        )
    else:
        candidates = (
            tuple(zip(rows, perm))
            for rows in itertools.combinations(range(m), n)
            for perm in itertools.permutations(range(n))
        )
    for pairs in candidates:
        total = float(sum(C[i, j] for i, j in pairs))
        if total < best_cost - 1e-12:
            best_cost, best_pairs = total, pairs
        elif abs(total - best_cost) <= 1e-12 and pairs < best_pairs:
            best_pairs = pairs
    gamma = np.zeros((m, n))
    for i, j in best_pairs:
        gamma[i, j] = 1.0
    return OracleSolution(values=gamma, objective=best_cost)


def _oracle_balanced(C: np.ndarray, mu: np.ndarray, nu: np.ndarray) -> OracleSolution:
    m, n = C.shape
    support_size = m + n - 1
    if math.comb(m * n, support_size) > ENUMERATION_CAP:
        return _lp_solve(C, mu_eq=mu, nu_eq=nu)

    # Incidence matrix of the transportation constraints; the final column-sum
    # equation is implied by mass balance and dropped to make bases square.
    F = np.zeros((m + n, m * n))
    for i in range(m):
        F[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        F[m + j, j::n] = 1.0
    kept = F[:-1]
    b = np.concatenate([mu, nu])[:-1]

    supports = np.array(list(itertools.combinations(range(m * n), support_size)))
    bases = np.moveaxis(kept[:, supports], 1, 0)          # (B, s, s)
    dets = np.linalg.det(bases)
    nonsingular = np.abs(dets) > 0.5                      # incidence bases have det +-1
    if not np.any(nonsingular):
        raise ValueError("no basis found; marginals are inconsistent")
    rhs = np.broadcast_to(b[:, None], (b.size, 1))
    solutions = np.linalg.solve(bases[nonsingular],
                                np.broadcast_to(rhs, (int(nonsingular.sum()), b.size, 1)))[..., 0]
    feasible = np.all(solutions >= -1e-12, axis=1)
    if not np.any(feasible):
        raise ValueError("no feasible basic solution; marginals are inconsistent")
    cell_costs = C.ravel()[supports[nonsingular]]
    objectives = np.einsum("bs,bs->b", solutions, cell_costs)
    objectives = np.where(feasible, objectives, np.inf)
    pick = int(np.argmin(objectives))
    plan = np.zeros(m * n)
    plan[supports[nonsingular][pick]] = np.maximum(solutions[pick], 0.0)
    return OracleSolution(values=plan.reshape(m, n), objective=float(objectives[pick]))


def _oracle_partial(C, mu, nu, mass) -> OracleSolution:
    if not (0.0 < mass < min(float(mu.sum()), float(nu.sum()))):
        raise InfeasibleMass(f"mass {mass} outside the marginal budget")
    return _lp_solve(C, mu_ub=mu, nu_ub=nu, total_eq=mass)


def _oracle_one_side(C: np.ndarray) -> OracleSolution:
    m = C.shape[0] - 1
    n = C.shape[1]
    mu_prime = np.append(np.full(m, 1.0 / m), 1.0)
    nu = np.full(n, 1.0 / n)
    return _lp_solve(C, mu_ub=mu_prime, nu_eq=nu)


def _lp_solve(C, mu_eq=None, nu_eq=None, mu_ub=None, nu_ub=None, total_eq=None):
    m, n = C.shape
    size = m * n
    row_mat = np.zeros((m, size))
    col_mat = np.zeros((n, size))
    for i in range(m):
        row_mat[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        col_mat[j, j::n] = 1.0

    a_eq, b_eq, a_ub, b_ub = [], [], [], []
    if mu_eq is not None:
        a_eq.append(row_mat); b_eq.append(np.asarray(mu_eq))
    if nu_eq is not None:
        a_eq.append(col_mat); b_eq.append(np.asarray(nu_eq))
    if total_eq is not None:
        a_eq.append(np.ones((1, size))); b_eq.append(np.array([total_eq]))
    if mu_ub is not None:
        a_ub.append(row_mat); b_ub.append(np.asarray(mu_ub))
    if nu_ub is not None:
        a_ub.append(col_mat); b_ub.append(np.asarray(nu_ub))

    result = linprog(
        c=C.ravel(),
        A_eq=np.vstack(a_eq) if a_eq else None,
        b_eq=np.concatenate(b_eq) if b_eq else None,
        A_ub=np.vstack(a_ub) if a_ub else None,
        b_ub=np.concatenate(b_ub) if b_ub else None,
        bounds=[(0, None)] * size,
        method="highs",
    )
    if not result.success:
        raise ValueError(f"LP solve failed: {result.message}")
    return OracleSolution(values=result.x.reshape(m, n), objective=float(result.fun))
